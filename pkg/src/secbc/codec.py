"""Desk-scale random-binning codecs for the four side-information schemes.

Codebooks are i.i.d. draws organized into bins (double binning with a
subbin index in the noncausal no-feedback scheme, single binning in the
causal scheme, direct message indexing in the causal feedback scheme).
Encoding and decoding use strong joint typicality: the L-infinity distance
between empirical and target joint frequencies must not exceed the
configured tolerance. The feedback machinery derives a per-block secret
key from the previous block's channel-1 output and applies it as a modular
one-time pad on the confidential message.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .channels import ChannelModel
from .prob import (
    CondPmf,
    FinitePmf,
    JointPmf,
    condition_on,
    conditional_mutual_information,
    entropy,
    mutual_information,
)
from .regions import AuxiliaryJoint, extend_to_full_joint

__all__ = [
    "ParameterError",
    "EncodingError",
    "DecodingError",
    "CodeParams",
    "CodebookCounts",
    "Codebook",
    "EncodeResult",
    "CausalEncodeResult",
    "FeedbackSession",
    "BlockRecord",
    "population",
    "build_codebook",
    "empirical_joint",
    "is_typical",
    "gp_encode",
    "causal_encode",
    "synthesize_x",
    "decode_rx1",
    "decode_rx2",
    "transmit",
    "key_from_feedback",
    "encrypt",
    "decrypt",
    "one_time_pad_joint",
    "run_block_markov",
]

# Float guard for typicality comparisons: empirical frequencies are exact
# multiples of 1/N, but the subtraction against the target can carry one
# ulp of noise, which must never flip a boundary-exact decision.
_TYP_GUARD = 1e-12

_MAX_BOOK_CELLS = 1 << 22


class ParameterError(ValueError):
    """Invalid code parameters, alphabet misuse, or out-of-range messages."""


class EncodingError(RuntimeError):
    """No jointly typical codeword available; ``stage`` is "U" or "K"."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(message)
        self.stage = stage


class DecodingError(RuntimeError):
    """Absent or ambiguous typical codeword; ``stage`` is "U" or "K"."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(message)
        self.stage = stage


def population(bits: float) -> int:
    """Sequence/bin count for an exponent in bits: round(2^bits), floor 1."""
    bits = float(bits)
    if not np.isfinite(bits) or bits < -1e-9:
        raise ParameterError(f"population exponent {bits!r} must be >= 0")
    return max(1, int(round(2.0 ** max(0.0, bits))))


@dataclass(frozen=True)
class CodeParams:
    """Blocklength, rates, slack rates, typicality tolerance, and seed."""

    n_block: int
    r0: float
    r1: float
    gamma: float
    gamma1: float
    eps_typ: float
    seed: int

    def __post_init__(self) -> None:
        if int(self.n_block) < 1:
            raise ParameterError(f"n_block={self.n_block!r} must be >= 1")
        object.__setattr__(self, "n_block", int(self.n_block))
        for name in ("r0", "r1", "gamma", "gamma1"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0.0:
                raise ParameterError(f"{name}={v!r} must be a nonnegative rate")
            object.__setattr__(self, name, v)
        eps = float(self.eps_typ)
        if not np.isfinite(eps) or eps <= 0.0:
            raise ParameterError(f"eps_typ={eps!r} must be > 0")
        object.__setattr__(self, "eps_typ", eps)
        if int(self.seed) < 0:
            raise ParameterError(f"seed={self.seed!r} must be a nonnegative integer")
        object.__setattr__(self, "seed", int(self.seed))

    def to_json_dict(self) -> dict:
        return {
            "n_block": self.n_block,
            "r0": self.r0,
            "r1": self.r1,
            "gamma": self.gamma,
            "gamma1": self.gamma1,
            "eps_typ": self.eps_typ,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class CodebookCounts:
    """Bin/sequence cardinalities of one codebook."""

    u_bins: int
    u_per_bin: int
    k_bins: int
    k_per_bin: int
    j_count: int

    @property
    def u_total(self) -> int:
        return self.u_bins * self.u_per_bin

    def to_json_dict(self) -> dict:
        return {
            "u_bins": self.u_bins,
            "u_per_bin": self.u_per_bin,
            "k_bins": self.k_bins,
            "k_per_bin": self.k_per_bin,
            "j_count": self.j_count,
        }


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Codebook:
    """An immutable codebook: sequences, bin structure, and decode targets.

    ``u_book[t, i]`` is the i-th u-sequence of bin t. ``k_books[t, i, s, l]``
    is the l-th k-sequence of bin s in the codebook generated for u-sequence
    (t, i). ``subbin_of_slot[s, l]`` is the subbin index J of slot l in bin s
    (all 0 when the scheme has no subbins) — metadata for equivocation
    accounting, never transmitted. Targets are joint pmf arrays in the axis
    orders named by their keys.
    """

    counts: CodebookCounts
    u_book: np.ndarray
    k_books: np.ndarray
    subbin_of_slot: np.ndarray
    x_kernel: CondPmf
    p_u: FinitePmf
    p_k_given_u: CondPmf
    targets: dict
    measures: dict
    aux: AuxiliaryJoint
    params: CodeParams
    # Output alphabets carried alongside so serialized codebooks are
    # self-describing without the model object.
    targets_axis_labels: dict = field(default_factory=dict)

    @property
    def n_block(self) -> int:
        return self.params.n_block

    def labels(self) -> dict:
        j = self.aux.joint
        return {
            "U": list(j.labels("U")),
            "K": list(j.labels("K")),
            "X": list(j.labels("X")),
            "V": list(j.labels("V")),
            "Y": list(self.targets_axis_labels["Y"]),
            "Z": list(self.targets_axis_labels["Z"]),
        }

    def to_json_dict(self) -> dict:
        return {
            "counts": self.counts.to_json_dict(),
            "params": self.params.to_json_dict(),
            "mode": {"timing": self.aux.mode.timing, "feedback": self.aux.mode.feedback},
            "labels": self.labels(),
            "u_book": self.u_book.tolist(),
            "k_books": self.k_books.tolist(),
            "subbin_of_slot": self.subbin_of_slot.tolist(),
            "measures": dict(self.measures),
            "auxiliary_joint": self.aux.joint.to_dict(),
            "x_kernel": self.x_kernel.to_dict(),
        }


def _as_indices(seq, n: int, size: int, what: str) -> np.ndarray:
    arr = np.asarray(seq)
    if arr.shape != (n,):
        raise ParameterError(f"{what}: expected {n} symbols, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == arr.astype(np.int64)):
            raise ParameterError(f"{what}: symbols must be integer indices")
    arr = arr.astype(np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= size):
        raise ParameterError(f"{what}: symbol indices outside [0, {size})")
    return arr


def _inverse_cdf_draw(rng: np.random.Generator, cdf_rows: np.ndarray) -> np.ndarray:
    """One categorical draw per leading cell of ``cdf_rows`` (last axis = cdf)."""
    r = rng.random(cdf_rows.shape[:-1])
    idx = (r[..., None] > cdf_rows).sum(axis=-1)
    return np.minimum(idx, cdf_rows.shape[-1] - 1)


def build_codebook(m: ChannelModel, aux: AuxiliaryJoint, params: CodeParams) -> Codebook:
    """Draw the scheme-appropriate codebook for (model, auxiliary, params).

    Deterministic under params.seed. The auxiliary's mode selects the
    structure: Gel'fand-Pinsker-binned U and double-binned K (noncausal,
    no feedback); one U per common message and single-binned K (causal);
    binned K without subbins (noncausal feedback); one K per encrypted
    message (causal feedback).
    """
    if aux.has_a:
        raise ParameterError(
            "the outer-bound auxiliary A has no encoder role; build codebooks "
            "from an auxiliary joint over (U, K, X, V)"
        )
    mode = aux.mode
    n = params.n_block
    full = extend_to_full_joint(aux, m)
    i_uv = mutual_information(full, ("U",), ("V",))
    i_kv_u = conditional_mutual_information(full, ("K",), ("V",), ("U",))
    i_kz_u = conditional_mutual_information(full, ("K",), ("Z",), ("U",))
    i_ky_u = conditional_mutual_information(full, ("K",), ("Y",), ("U",))
    hyz = full.marginal(("Y", "Z"))
    h_y_given_z = entropy(hyz) - entropy(hyz.pmf("Z"))
    measures = {
        "i_uv": i_uv,
        "i_kv_given_u": i_kv_u,
        "i_kz_given_u": i_kz_u,
        "i_ky_given_u": i_ky_u,
        "h_y_given_z": h_y_given_z,
    }

    u_bins = population(n * params.r0)
    k_bins = population(n * params.r1)
    if mode.causal:
        u_per_bin = 1
        k_per_bin = 1 if mode.feedback else population(n * params.gamma1)
        j_count = 1
    else:
        u_per_bin = population(n * (i_uv + params.gamma))
        k_per_bin = population(n * (i_kv_u + params.gamma1))
        j_count = 1 if mode.feedback else population(n * (max(i_kv_u, i_kz_u) - i_kz_u))
    counts = CodebookCounts(u_bins, u_per_bin, k_bins, k_per_bin, j_count)

    cells = counts.u_total * n * (1 + k_bins * k_per_bin)
    if cells > _MAX_BOOK_CELLS:
        raise ParameterError(
            f"codebook would hold {cells} sequence symbols "
            f"({counts.u_total} u-sequences x {k_bins}x{k_per_bin} k-sequences "
            f"x N={n}); the limit is {_MAX_BOOK_CELLS} — reduce rates, slack, or N"
        )

    p_u = aux.joint.pmf("U")
    p_k_given_u = condition_on(aux.joint, ("U",), ("K",))
    x_kernel = condition_on(aux.joint, ("U", "K", "V"), ("X",))

    rng = np.random.default_rng(params.seed)
    u_cdf = np.cumsum(p_u.mass)
    u_book = _inverse_cdf_draw(rng, np.broadcast_to(u_cdf, (u_bins, u_per_bin, n, u_cdf.size)))
    k_cdf = np.cumsum(p_k_given_u.kernel, axis=-1)
    rows = k_cdf[u_book]  # (u_bins, u_per_bin, n, nk)
    rows = np.broadcast_to(
        rows[:, :, None, None, :, :], (u_bins, u_per_bin, k_bins, k_per_bin, n, k_cdf.shape[-1])
    )
    k_books = _inverse_cdf_draw(rng, rows)
    subbin = np.empty((k_bins, k_per_bin), dtype=np.int64)
    for b in range(k_bins):
        subbin[b] = rng.permutation(k_per_bin) % j_count

    return Codebook(
        counts=counts,
        u_book=_frozen(u_book.astype(np.int64)),
        k_books=_frozen(k_books.astype(np.int64)),
        subbin_of_slot=_frozen(subbin),
        x_kernel=x_kernel,
        p_u=p_u,
        p_k_given_u=p_k_given_u,
        targets={
            "uv": full.marginal(("U", "V")).mass,
            "ukv": full.marginal(("U", "K", "V")).mass,
            "uy": full.marginal(("U", "Y")).mass,
            "uky": full.marginal(("U", "K", "Y")).mass,
            "uz": full.marginal(("U", "Z")).mass,
        },
        measures=measures,
        aux=aux,
        params=params,
        targets_axis_labels={"Y": m.y_labels, "Z": m.z_labels},
    )


# ---------------------------------------------------------------------------
# Typicality


def empirical_joint(seqs: Sequence[np.ndarray], sizes: Sequence[int]) -> np.ndarray:
    """Empirical joint frequency array of aligned index sequences."""
    sizes = tuple(int(s) for s in sizes)
    if len(seqs) != len(sizes) or not seqs:
        raise ParameterError("empirical_joint: one size per sequence required")
    n = len(seqs[0])
    code = np.zeros(n, dtype=np.int64)
    for s, size in zip(seqs, sizes):
        arr = _as_indices(s, n, size, "empirical_joint sequence")
        code = code * size + arr
    counts = np.bincount(code, minlength=int(np.prod(sizes)))
    return counts.reshape(sizes) / n


def is_typical(seqs: Sequence[np.ndarray], target: np.ndarray, eps: float) -> bool:
    """Strong typicality: L-infinity(empirical - target) <= eps."""
    emp = empirical_joint(seqs, target.shape)
    return float(np.abs(emp - target).max()) <= eps + _TYP_GUARD


def _typical_rows(
    cands: np.ndarray, context: Sequence[np.ndarray], target: np.ndarray, eps: float
) -> np.ndarray:
    """Vectorized typicality mask over candidate rows.

    ``target`` axes are the context sequences in order, then the candidate
    symbol last. Returns a boolean mask of shape (len(cands),).
    """
    m_rows, n = cands.shape
    ctx_cells = int(np.prod(target.shape[:-1])) if target.ndim > 1 else 1
    cand_size = target.shape[-1]
    code = np.zeros(n, dtype=np.int64)
    for s, size in zip(context, target.shape[:-1]):
        code = code * size + s
    flat = (np.arange(m_rows, dtype=np.int64)[:, None] * (ctx_cells * cand_size)
            + code[None, :] * cand_size + cands)
    counts = np.bincount(flat.reshape(-1), minlength=m_rows * ctx_cells * cand_size)
    emp = counts.reshape(m_rows, ctx_cells * cand_size) / n
    diff = np.abs(emp - target.reshape(1, -1)).max(axis=1)
    return diff <= eps + _TYP_GUARD


# ---------------------------------------------------------------------------
# Encoding


@dataclass(frozen=True)
class EncodeResult:
    """Chosen indices and sequences of one noncausal encoding."""

    u_bin: int
    u_slot: int
    k_bin: int
    k_slot: int
    u_seq: np.ndarray
    k_seq: np.ndarray
    subbin: int


@dataclass(frozen=True)
class CausalEncodeResult:
    """Sequences of one causal encoding (x built from the v prefix stream)."""

    u_seq: np.ndarray
    k_seq: np.ndarray
    x_seq: np.ndarray
    k_slot: int


def _check_codebook_params(cb: Codebook, params: CodeParams) -> None:
    if params.n_block != cb.params.n_block:
        raise ParameterError(
            f"params.n_block={params.n_block} differs from codebook N={cb.params.n_block}"
        )


def gp_encode(
    t: int, s: int, v_seq, cb: Codebook, params: CodeParams
) -> EncodeResult:
    """Two-stage Gel'fand-Pinsker encoding for the noncausal schemes.

    Picks the smallest-index u in bin t jointly typical with v, then the
    smallest-index k in bin s (given that u) jointly typical with (u, v).
    Raises EncodingError with stage "U" or "K" when no candidate fits.
    """
    if cb.aux.mode.causal:
        raise ParameterError("gp_encode needs a noncausal codebook (full v^N available)")
    _check_codebook_params(cb, params)
    n = cb.n_block
    counts = cb.counts
    if not 0 <= int(t) < counts.u_bins:
        raise ParameterError(f"common message t={t!r} outside [0, {counts.u_bins})")
    if not 0 <= int(s) < counts.k_bins:
        raise ParameterError(f"confidential bin s={s!r} outside [0, {counts.k_bins})")
    v = _as_indices(v_seq, n, len(cb.aux.joint.labels("V")), "v_seq")

    u_cands = cb.u_book[int(t)]
    mask = _typical_rows(u_cands, (v,), np.moveaxis(cb.targets["uv"], 0, -1), params.eps_typ)
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        raise EncodingError("U", f"no u-sequence in bin {t} typical with v^N")
    u_slot = int(hits[0])
    u_seq = u_cands[u_slot]

    k_cands = cb.k_books[int(t), u_slot, int(s)]
    target = np.moveaxis(cb.targets["ukv"], 1, -1)  # (U, V, K)
    mask = _typical_rows(k_cands, (u_seq, v), target, params.eps_typ)
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        raise EncodingError("K", f"no k-sequence in bin {s} typical with (u^N, v^N)")
    k_slot = int(hits[0])
    return EncodeResult(
        u_bin=int(t),
        u_slot=u_slot,
        k_bin=int(s),
        k_slot=k_slot,
        u_seq=u_seq,
        k_seq=k_cands[k_slot],
        subbin=int(cb.subbin_of_slot[int(s), k_slot]),
    )


def synthesize_x(u_seq, k_seq, v_seq, kernel: CondPmf, seed: int) -> np.ndarray:
    """Draw x^N componentwise from p(X|U,K,V) along the given sequences."""
    if kernel.given_names != ("U", "K", "V") or kernel.out_names != ("X",):
        raise ParameterError(
            f"kernel must map (U,K,V)->X, got {kernel.given_names}->{kernel.out_names}"
        )
    shape = kernel.kernel.shape
    n = len(np.asarray(u_seq))
    u = _as_indices(u_seq, n, shape[0], "u_seq")
    k = _as_indices(k_seq, n, shape[1], "k_seq")
    v = _as_indices(v_seq, n, shape[2], "v_seq")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(kernel.kernel, axis=-1)
    return _inverse_cdf_draw(rng, cdf[u, k, v])


def _draw_x(cb: Codebook, u, k, v, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(cb.x_kernel.kernel, axis=-1)
    return _inverse_cdf_draw(rng, cdf[u, k, v])


def causal_encode(
    t: int,
    k_bin: int,
    v_stream: Iterable[int] | Iterator[int],
    cb: Codebook,
    params: CodeParams,
    rng: np.random.Generator,
) -> CausalEncodeResult:
    """Causal-scheme encoding: (u, k) chosen blind to V, x built per symbol.

    The state enters only through ``v_stream``, consumed one symbol at a
    time as each x_i is produced, so the encoder provably never reads
    v_{i+1..N}. The k-sequence is a random slot of bin ``k_bin`` (the only
    slot, in the feedback scheme).
    """
    if not cb.aux.mode.causal:
        raise ParameterError("causal_encode needs a causal codebook")
    _check_codebook_params(cb, params)
    counts = cb.counts
    if not 0 <= int(t) < counts.u_bins:
        raise ParameterError(f"common message t={t!r} outside [0, {counts.u_bins})")
    if not 0 <= int(k_bin) < counts.k_bins:
        raise ParameterError(f"k bin {k_bin!r} outside [0, {counts.k_bins})")
    u_seq = cb.u_book[int(t), 0]
    k_slot = int(rng.integers(counts.k_per_bin)) if counts.k_per_bin > 1 else 0
    k_seq = cb.k_books[int(t), 0, int(k_bin), k_slot]

    n = cb.n_block
    nv = len(cb.aux.joint.labels("V"))
    cdf = np.cumsum(cb.x_kernel.kernel, axis=-1)
    stream = iter(v_stream)
    x = np.empty(n, dtype=np.int64)
    for i in range(n):
        try:
            vi = int(next(stream))
        except StopIteration:
            raise ParameterError(f"v stream ended after {i} of {n} symbols") from None
        if not 0 <= vi < nv:
            raise ParameterError(f"v symbol {vi!r} outside [0, {nv})")
        row = cdf[u_seq[i], k_seq[i], vi]
        x[i] = min(int(np.searchsorted(row, rng.random(), side="right")), row.size - 1)
    return CausalEncodeResult(u_seq=u_seq, k_seq=k_seq, x_seq=x, k_slot=k_slot)


def transmit(
    m: ChannelModel, x_seq, v_seq, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Push x^N through both channels for state v^N; returns (y^N, z^N)."""
    n = len(np.asarray(x_seq))
    x = _as_indices(x_seq, n, len(m.x_labels), "x_seq")
    v = _as_indices(v_seq, n, len(m.v_labels), "v_seq")
    y = _inverse_cdf_draw(rng, np.cumsum(m.q1.kernel, axis=-1)[x, v])
    z = _inverse_cdf_draw(rng, np.cumsum(m.q2.kernel, axis=-1)[y])
    return y, z


# ---------------------------------------------------------------------------
# Decoding


def decode_rx1(y_seq, cb: Codebook, params: CodeParams) -> tuple[int, int]:
    """Receiver 1: decode (t, k-bin) from y^N by two-stage typicality.

    Stage U demands a unique typical u-sequence (distinct contents, or one
    content appearing under distinct bins, are ambiguous). Stage K accepts
    multiple typical k-sequences only if they share one bin index.
    """
    _check_codebook_params(cb, params)
    n = cb.n_block
    y = _as_indices(y_seq, n, len(cb.targets["uy"][0]), "y_seq")
    counts = cb.counts

    flat_u = cb.u_book.reshape(-1, n)
    mask = _typical_rows(flat_u, (y,), np.moveaxis(cb.targets["uy"], 0, -1), params.eps_typ)
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        raise DecodingError("U", "no u-sequence typical with y^N")
    contents = np.unique(flat_u[hits], axis=0)
    t_hats = np.unique(hits // counts.u_per_bin)
    if len(contents) > 1 or t_hats.size > 1:
        raise DecodingError(
            "U", f"ambiguous u-stage: {len(contents)} typical contents over bins {t_hats.tolist()}"
        )
    first = int(hits[0])
    t_hat, u_slot = first // counts.u_per_bin, first % counts.u_per_bin
    u_seq = cb.u_book[t_hat, u_slot]

    flat_k = cb.k_books[t_hat, u_slot].reshape(-1, n)
    target = np.moveaxis(cb.targets["uky"], 1, -1)  # (U, Y, K)
    mask = _typical_rows(flat_k, (u_seq, y), target, params.eps_typ)
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        raise DecodingError("K", "no k-sequence typical with (u^N, y^N)")
    bins = np.unique(hits // counts.k_per_bin)
    if bins.size > 1:
        raise DecodingError("K", f"ambiguous k-stage: typical hits span bins {bins.tolist()}")
    return t_hat, int(bins[0])


def decode_rx2(z_seq, cb: Codebook, params: CodeParams) -> int:
    """Receiver 2: decode t from z^N; multiple hits must agree on t."""
    _check_codebook_params(cb, params)
    n = cb.n_block
    z = _as_indices(z_seq, n, cb.targets["uz"].shape[1], "z_seq")
    flat_u = cb.u_book.reshape(-1, n)
    mask = _typical_rows(flat_u, (z,), np.moveaxis(cb.targets["uz"], 0, -1), params.eps_typ)
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        raise DecodingError("U", "no u-sequence typical with z^N")
    t_hats = np.unique(hits // cb.counts.u_per_bin)
    if t_hats.size > 1:
        raise DecodingError("U", f"typical hits disagree on the message: bins {t_hats.tolist()}")
    return int(t_hats[0])


# ---------------------------------------------------------------------------
# Feedback key machinery


def key_from_feedback(y_prev, s_count: int, *, y_size: int) -> int:
    """g_f: lexicographic rank of y^N (first symbol most significant) mod ‖S‖.

    Total on Y^N and balanced: preimage counts across keys differ by at
    most 1. Requires ‖Y‖^N >= ‖S‖ so every key value is reachable.
    """
    s_count = int(s_count)
    y_size = int(y_size)
    if s_count < 1:
        raise ParameterError(f"s_count={s_count!r} must be >= 1")
    if y_size < 1:
        raise ParameterError(f"y_size={y_size!r} must be >= 1")
    y = np.asarray(y_prev)
    if y.ndim != 1 or y.size < 1:
        raise ParameterError("y_prev must be a nonempty symbol sequence")
    if y_size ** y.size < s_count:
        raise ParameterError(
            f"key space unreachable: ||Y||^N = {y_size}^{y.size} < ||S|| = {s_count}"
        )
    y = _as_indices(y_prev, y.size, y_size, "y_prev")
    rank = 0
    for sym in y.tolist():
        rank = rank * y_size + sym
    return rank % s_count


def encrypt(s: int, k_star: int, modulus: int) -> int:
    """(s + k*) mod ‖S‖ — the modular one-time pad on the message set."""
    modulus = int(modulus)
    if modulus < 1:
        raise ParameterError(f"modulus={modulus!r} must be >= 1")
    s, k_star = int(s), int(k_star)
    if not 0 <= s < modulus or not 0 <= k_star < modulus:
        raise ParameterError(f"s={s}, k*={k_star} must lie in [0, {modulus})")
    return (s + k_star) % modulus


def decrypt(c: int, k_star: int, modulus: int) -> int:
    """Inverse of encrypt: (c - k*) mod ‖S‖."""
    modulus = int(modulus)
    if modulus < 1:
        raise ParameterError(f"modulus={modulus!r} must be >= 1")
    c, k_star = int(c), int(k_star)
    if not 0 <= c < modulus or not 0 <= k_star < modulus:
        raise ParameterError(f"c={c}, k*={k_star} must lie in [0, {modulus})")
    return (c - k_star) % modulus


def one_time_pad_joint(modulus: int, p_s: FinitePmf | None = None) -> JointPmf:
    """Enumerated joint of (message S, uniform independent key, ciphertext).

    The ciphertext axis C holds (s + k) mod modulus; with the uniform key
    the (S, C) marginal factorizes exactly, which is the one-time-pad
    secrecy statement tested by the acceptance suite.
    """
    modulus = int(modulus)
    if modulus < 1:
        raise ParameterError(f"modulus={modulus!r} must be >= 1")
    labels = tuple(str(i) for i in range(modulus))
    if p_s is None:
        p_s = FinitePmf.uniform(labels)
    if len(p_s) != modulus:
        raise ParameterError(f"p_s has {len(p_s)} symbols, modulus is {modulus}")
    mass = np.zeros((modulus, modulus, modulus))
    for s in range(modulus):
        for k in range(modulus):
            mass[s, k, (s + k) % modulus] = p_s.mass[s] / modulus
    axes = (("S", labels), ("KSTAR", labels), ("C", labels))
    return JointPmf(axes, mass)


@dataclass
class FeedbackSession:
    """Block-to-block key state of one terminal (encoder or receiver 1).

    The key for block i is g_f of the block i-1 channel-1 output; block 1
    has no key. Both terminals see the same y (the feedback is noiseless),
    so their sessions stay synchronized by construction.
    """

    s_count: int
    y_size: int
    n_block: int
    block_index: int = 1
    y_prev: np.ndarray | None = None

    def __post_init__(self) -> None:
        if int(self.s_count) < 1 or int(self.y_size) < 1 or int(self.n_block) < 1:
            raise ParameterError("FeedbackSession sizes must be >= 1")
        if int(self.y_size) ** int(self.n_block) < int(self.s_count):
            raise ParameterError(
                f"key space unreachable: {self.y_size}^{self.n_block} < {self.s_count}"
            )

    def key(self) -> int:
        if self.block_index < 2:
            raise ParameterError("no key exists in block 1")
        return key_from_feedback(self.y_prev, self.s_count, y_size=self.y_size)

    def advance(self, y_seq) -> None:
        self.y_prev = _as_indices(y_seq, self.n_block, self.y_size, "y_seq")
        self.block_index += 1


# ---------------------------------------------------------------------------
# Block-Markov transmission


@dataclass(frozen=True)
class BlockRecord:
    """Everything that happened in one block of a feedback session."""

    block_index: int
    t: int
    s: int | None
    key: int | None
    sent_bin: int
    encoder_error: str | None
    u_seq: np.ndarray
    k_seq: np.ndarray
    x_seq: np.ndarray
    v_seq: np.ndarray
    y_seq: np.ndarray
    z_seq: np.ndarray
    rx1_t: int | None
    rx1_s: int | None
    rx1_error: str | None
    rx2_t: int | None
    rx2_error: str | None

    def to_json_dict(self) -> dict:
        def seq(a: np.ndarray) -> list:
            return [int(v) for v in a]

        return {
            "block_index": self.block_index,
            "t": self.t,
            "s": self.s,
            "key": self.key,
            "sent_bin": self.sent_bin,
            "encoder_error": self.encoder_error,
            "u_seq": seq(self.u_seq),
            "k_seq": seq(self.k_seq),
            "x_seq": seq(self.x_seq),
            "v_seq": seq(self.v_seq),
            "y_seq": seq(self.y_seq),
            "z_seq": seq(self.z_seq),
            "rx1_t": self.rx1_t,
            "rx1_s": self.rx1_s,
            "rx1_error": self.rx1_error,
            "rx2_t": self.rx2_t,
            "rx2_error": self.rx2_error,
        }


def _block1_k_noncausal(cb: Codebook, t: int, u_slot: int, u_seq, v, eps: float):
    """Appendix-style keyless first block: any typical k, smallest global index."""
    n = cb.n_block
    flat_k = cb.k_books[t, u_slot].reshape(-1, n)
    target = np.moveaxis(cb.targets["ukv"], 1, -1)
    mask = _typical_rows(flat_k, (u_seq, v), target, eps)
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        raise EncodingError("K", "no k-sequence typical with (u^N, v^N) in block 1")
    idx = int(hits[0])
    return idx // cb.counts.k_per_bin, idx % cb.counts.k_per_bin


def run_block_markov(
    m: ChannelModel,
    aux: AuxiliaryJoint,
    params: CodeParams,
    n_blocks: int,
    messages: Sequence[tuple[int, int | None]],
    *,
    codebook: Codebook | None = None,
    rng: np.random.Generator | None = None,
) -> list[BlockRecord]:
    """Run a feedback session of ``n_blocks`` blocks over one codebook.

    ``messages[i]`` is (t, s) for block i+1; block 1 must carry s=None (no
    key exists yet), later blocks carry their confidential message encrypted
    with the key recomputed from the previous block's y. Encoder failures
    are recorded and a fallback codeword is transmitted so the session
    continues. Deterministic under params.seed when no rng is supplied.
    """
    if not aux.mode.feedback:
        raise ParameterError("run_block_markov drives the feedback schemes only")
    n_blocks = int(n_blocks)
    if n_blocks < 1:
        raise ParameterError(f"n_blocks={n_blocks!r} must be >= 1")
    if len(messages) != n_blocks:
        raise ParameterError(f"need {n_blocks} (t, s) pairs, got {len(messages)}")
    if any(s is not None for _, s in messages[:1]):
        raise ParameterError("block 1 cannot carry a confidential message (no key yet)")
    if n_blocks < 2 and any(s is not None for _, s in messages):
        raise ParameterError("confidential messages need n_blocks >= 2")

    cb = codebook if codebook is not None else build_codebook(m, aux, params)
    if cb.aux.mode != aux.mode:
        raise ParameterError("codebook mode differs from the auxiliary's mode")
    if rng is None:
        rng = np.random.default_rng((params.seed, 2718281828))
    counts = cb.counts
    n = params.n_block
    y_size = len(m.y_labels)
    enc_session = FeedbackSession(counts.k_bins, y_size, n)
    rx1_session = FeedbackSession(counts.k_bins, y_size, n)

    pv_cdf = np.cumsum(m.pv.mass)
    records: list[BlockRecord] = []
    for bi in range(1, n_blocks + 1):
        t, s = messages[bi - 1]
        t = int(t)
        if bi >= 2 and s is None:
            raise ParameterError(f"block {bi} must carry a confidential message")
        if s is not None and not 0 <= int(s) < counts.k_bins:
            raise ParameterError(f"s={s!r} outside [0, {counts.k_bins})")
        v = _inverse_cdf_draw(rng, np.broadcast_to(pv_cdf, (n, pv_cdf.size)))

        key = enc_session.key() if bi >= 2 else None
        sent_bin = encrypt(int(s), key, counts.k_bins) if bi >= 2 else 0
        encoder_error = None

        if aux.mode.causal:
            res = causal_encode(t, sent_bin, iter(v.tolist()), cb, params, rng)
            u_seq, k_seq, x_seq = res.u_seq, res.k_seq, res.x_seq
        else:
            try:
                if bi == 1:
                    u_cands = cb.u_book[t]
                    mask = _typical_rows(
                        u_cands, (v,), np.moveaxis(cb.targets["uv"], 0, -1), params.eps_typ
                    )
                    hits = np.flatnonzero(mask)
                    if hits.size == 0:
                        raise EncodingError("U", "no u-sequence in bin typical with v^N")
                    u_slot = int(hits[0])
                    u_seq = u_cands[u_slot]
                    sent_bin, k_slot = _block1_k_noncausal(
                        cb, t, u_slot, u_seq, v, params.eps_typ
                    )
                    k_seq = cb.k_books[t, u_slot, sent_bin, k_slot]
                else:
                    res = gp_encode(t, sent_bin, v, cb, params)
                    u_seq, k_seq = res.u_seq, res.k_seq
            except EncodingError as err:
                encoder_error = err.stage
                u_seq = cb.u_book[t, 0]
                k_seq = cb.k_books[t, 0, sent_bin, 0]
            x_seq = _draw_x(cb, u_seq, k_seq, v, rng)

        y_seq, z_seq = transmit(m, x_seq, v, rng)

        rx1_t = rx1_s = rx2_t = None
        rx1_error = rx2_error = None
        try:
            rx2_t = decode_rx2(z_seq, cb, params)
        except DecodingError as err:
            rx2_error = err.stage
        if bi == 1:
            try:
                flat_u = cb.u_book.reshape(-1, n)
                mask = _typical_rows(
                    flat_u, (y_seq,), np.moveaxis(cb.targets["uy"], 0, -1), params.eps_typ
                )
                hits = np.flatnonzero(mask)
                if hits.size == 0:
                    raise DecodingError("U", "no u-sequence typical with y^N")
                t_hats = np.unique(hits // counts.u_per_bin)
                contents = np.unique(flat_u[hits], axis=0)
                if t_hats.size > 1 or len(contents) > 1:
                    raise DecodingError("U", "ambiguous u-stage in block 1")
                rx1_t = int(t_hats[0])
            except DecodingError as err:
                rx1_error = err.stage
        else:
            try:
                rx1_t, rx1_bin = decode_rx1(y_seq, cb, params)
                rx1_s = decrypt(rx1_bin, rx1_session.key(), counts.k_bins)
            except DecodingError as err:
                rx1_error = err.stage

        enc_session.advance(y_seq)
        rx1_session.advance(y_seq)
        records.append(
            BlockRecord(
                block_index=bi,
                t=t,
                s=None if s is None else int(s),
                key=key,
                sent_bin=int(sent_bin),
                encoder_error=encoder_error,
                u_seq=u_seq,
                k_seq=k_seq,
                x_seq=x_seq,
                v_seq=v,
                y_seq=y_seq,
                z_seq=z_seq,
                rx1_t=rx1_t,
                rx1_s=rx1_s,
                rx1_error=rx1_error,
                rx2_t=rx2_t,
                rx2_error=rx2_error,
            )
        )
    return records
