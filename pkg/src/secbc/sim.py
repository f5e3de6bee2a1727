"""Monte-Carlo transmission trials and exact equivocation accounting.

``run_trials`` estimates the two receivers' error probabilities for a fixed
codebook by repeated draw-state / encode / transmit / decode rounds.
``exact_equivocation`` computes the normalized conditional entropy of the
confidential message given the eavesdropper's full observation, by exact
enumeration with per-symbol factoring — never by sampling, which is
statistically treacherous for entropies and deliberately unsupported.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelModel, SideInfoMode, cascade
from .codec import (
    Codebook,
    CodeParams,
    DecodingError,
    EncodingError,
    ParameterError,
    _block1_k_noncausal,
    _typical_rows,
    build_codebook,
    causal_encode,
    decode_rx1,
    decode_rx2,
    gp_encode,
    key_from_feedback,
    run_block_markov,
    synthesize_x,
    transmit,
)
from .prob import entropy
from .regions import AuxiliaryJoint, extend_to_full_joint

__all__ = [
    "SimReport",
    "run_trials",
    "exact_equivocation",
    "conditional_output_entropy_rate",
    "ENUM_STATE_CAP",
    "TRIAL_FLOOR_FOR_CI",
]

# 95% two-sided normal quantile, frozen so reports never drift with library
# internals.
_Z95 = 1.959963984540054

# Confidence half-widths are quoted only at or above this many trials; the
# normal approximation is not trustworthy below it.
TRIAL_FLOOR_FOR_CI = 100

# Default ceiling on ||S|| * ||T|| * ||V||^N * ||Z||^N for exact enumeration.
ENUM_STATE_CAP = 1 << 24


@dataclass(frozen=True)
class SimReport:
    """Estimated error rates plus exact secrecy quantities for one setup.

    ``pe1_ci``/``pe2_ci`` are 95% half-widths (NaN below the trial floor).
    ``delta_exact`` is H(S|Z-observation)/N in bits per symbol, present only
    when the enumeration cap allowed computing it. ``delta_lower_key`` is
    the single-letter floor min{R1, H(Y|Z)} the feedback schemes aim for.
    """

    scheme: str
    n_block: int
    trials: int
    pe1: float
    pe1_ci: float
    pe2: float
    pe2_ci: float
    delta_exact: float | None
    delta_lower_key: float
    hyz: float
    config: dict

    def to_json_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "n_block": self.n_block,
            "trials": self.trials,
            "pe1": self.pe1,
            "pe1_ci": None if math.isnan(self.pe1_ci) else self.pe1_ci,
            "pe2": self.pe2,
            "pe2_ci": None if math.isnan(self.pe2_ci) else self.pe2_ci,
            "delta_exact": self.delta_exact,
            "delta_lower_key": self.delta_lower_key,
            "hyz": self.hyz,
            "config": dict(self.config),
        }


def _halfwidth(p_hat: float, trials: int) -> float:
    if trials < TRIAL_FLOOR_FOR_CI:
        return math.nan
    return _Z95 * math.sqrt(p_hat * (1.0 - p_hat) / trials)


def conditional_output_entropy_rate(
    m: ChannelModel, aux: AuxiliaryJoint, samples: int = 0, seed: int = 0
) -> float:
    """H(Y|Z) in bits/symbol under the auxiliary's input distribution.

    ``samples == 0`` computes it exactly from the single-letter joint;
    ``samples > 0`` draws that many (y, z) pairs and returns the plug-in
    estimate (for empirical validation of transcripts only).
    """
    samples = int(samples)
    if samples < 0:
        raise ParameterError(f"samples={samples!r} must be >= 0")
    yz = extend_to_full_joint(aux, m).marginal(("Y", "Z"))
    if samples == 0:
        return entropy(yz) - entropy(yz.pmf("Z"))
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(samples, yz.mass.reshape(-1)).reshape(yz.mass.shape)
    emp = counts / samples
    h_joint = -float(np.sum(emp[emp > 0] * np.log2(emp[emp > 0])))
    pz = emp.sum(axis=0)
    h_z = -float(np.sum(pz[pz > 0] * np.log2(pz[pz > 0])))
    return h_joint - h_z


def _check_scheme(aux: AuxiliaryJoint, scheme: SideInfoMode) -> None:
    if aux.mode != scheme:
        raise ParameterError(
            f"auxiliary joint was built for scheme {aux.mode.variant!r}, "
            f"not {scheme.variant!r}"
        )


def run_trials(
    m: ChannelModel,
    aux: AuxiliaryJoint,
    params: CodeParams,
    scheme: SideInfoMode,
    trials: int,
    seed: int,
    *,
    n_blocks: int | None = None,
) -> SimReport:
    """Estimate receiver error probabilities over i.i.d. trials.

    One codebook (from ``params.seed``) is shared by all trials; trial t
    draws its randomness from a generator seeded by (seed, t), so results
    are deterministic and independent of any execution order. Messages are
    uniform. An encoder failure counts as an error for both receivers (the
    fallback codeword is still transmitted so the trial remains well
    defined). Feedback schemes run ``n_blocks``-block sessions per trial
    (default 2: one key-establishing block, then one message-carrying
    block); a trial errs if any block's decode is wrong. Non-feedback
    schemes are single-block, so ``n_blocks`` must be 1 when given.

    ``delta_exact`` in the report always describes the canonical session
    (single block, or the two-block feedback shadow): it is a property of
    the codebook and scheme, not of the trial count.
    """
    _check_scheme(aux, scheme)
    trials = int(trials)
    if trials < 1:
        raise ParameterError(f"trials={trials!r} must be >= 1")
    if int(seed) < 0:
        raise ParameterError(f"seed={seed!r} must be a nonnegative integer")
    if n_blocks is None:
        n_blocks = 2 if scheme.feedback else 1
    n_blocks = int(n_blocks)
    if scheme.feedback and n_blocks < 2:
        raise ParameterError("feedback schemes need n_blocks >= 2 (key, then message)")
    if not scheme.feedback and n_blocks != 1:
        raise ParameterError("non-feedback schemes are single-block; n_blocks must be 1")

    cb = build_codebook(m, aux, params)
    counts = cb.counts
    n = params.n_block
    err1 = err2 = 0
    for ti in range(trials):
        rng = np.random.default_rng((int(seed), ti))
        if scheme.feedback:
            ts = [int(rng.integers(counts.u_bins)) for _ in range(n_blocks)]
            ss = [None] + [int(rng.integers(counts.k_bins)) for _ in range(n_blocks - 1)]
            recs = run_block_markov(
                m, aux, params, n_blocks, list(zip(ts, ss)), codebook=cb, rng=rng
            )
            e1 = any(
                r.encoder_error is not None
                or r.rx1_error is not None
                or r.rx1_t != ts[i]
                or (i > 0 and r.rx1_s != ss[i])
                for i, r in enumerate(recs)
            )
            e2 = any(
                r.rx2_error is not None or r.rx2_t != ts[i] for i, r in enumerate(recs)
            )
        else:
            t = int(rng.integers(counts.u_bins))
            s = int(rng.integers(counts.k_bins))
            v = rng.choice(len(m.v_labels), size=n, p=m.pv.mass)
            enc_failed = False
            if scheme.causal:
                res = causal_encode(t, s, iter(v.tolist()), cb, params, rng)
                x = res.x_seq
            else:
                try:
                    res = gp_encode(t, s, v, cb, params)
                    u_seq, k_seq = res.u_seq, res.k_seq
                except EncodingError:
                    enc_failed = True
                    u_seq = cb.u_book[t, 0]
                    k_seq = cb.k_books[t, 0, s, 0]
                x = synthesize_x(u_seq, k_seq, v, cb.x_kernel, int(rng.integers(2**63)))
            y, z = transmit(m, x, v, rng)
            try:
                e1 = decode_rx1(y, cb, params) != (t, s)
            except DecodingError:
                e1 = True
            try:
                e2 = decode_rx2(z, cb, params) != t
            except DecodingError:
                e2 = True
            if enc_failed:
                e1 = e2 = True
        err1 += bool(e1)
        err2 += bool(e2)

    pe1, pe2 = err1 / trials, err2 / trials
    hyz = conditional_output_entropy_rate(m, aux)
    try:
        delta = exact_equivocation(cb, m, params, scheme)
    except ParameterError:
        delta = None
    config = {
        "scheme": scheme.variant,
        "trials": trials,
        "n_blocks": n_blocks,
        "trial_seed": int(seed),
        "u_bins": counts.u_bins,
        "u_per_bin": counts.u_per_bin,
        "k_bins": counts.k_bins,
        "k_per_bin": counts.k_per_bin,
        "j_count": counts.j_count,
        **{f"params.{k}": v for k, v in params.to_json_dict().items()},
    }
    return SimReport(
        scheme=scheme.variant,
        n_block=n,
        trials=trials,
        pe1=pe1,
        pe1_ci=_halfwidth(pe1, trials),
        pe2=pe2,
        pe2_ci=_halfwidth(pe2, trials),
        delta_exact=delta,
        delta_lower_key=min(params.r1, hyz),
        hyz=hyz,
        config=config,
    )


# ---------------------------------------------------------------------------
# Exact equivocation


def _prod_vector(rows: list[np.ndarray]) -> np.ndarray:
    """Product distribution over symbol tuples; first row most significant."""
    out = np.ones(1)
    for r in rows:
        out = np.kron(out, r)
    return out


def _entropy_bits(table: np.ndarray) -> float:
    t = table[table > 0]
    return -float(np.sum(t * np.log2(t)))


def _z_rows(cb: Codebook, m: ChannelModel) -> np.ndarray:
    """p(z | u, k, v) with x marginalized out: shape (nu, nk, nv, nz)."""
    casc = cascade(m).kernel  # (nx, nv, nz)
    return np.einsum("ukvx,xvz->ukvz", cb.x_kernel.kernel, casc)


def _yz_rows(cb: Codebook, m: ChannelModel) -> tuple[np.ndarray, np.ndarray]:
    """p(y | u, k, v) (x marginalized) and q2 as arrays."""
    p_y = np.einsum("ukvx,xvy->ukvy", cb.x_kernel.kernel, m.q1.kernel)
    return p_y, m.q2.kernel


def _noncausal_encode_total(cb: Codebook, params: CodeParams, t: int, s: int, v: np.ndarray):
    """gp_encode with the deterministic fallback, so the map is total."""
    try:
        res = gp_encode(t, s, v, cb, params)
        return res.u_seq, res.k_seq
    except EncodingError:
        return cb.u_book[t, 0], cb.k_books[t, 0, s, 0]


def exact_equivocation(
    cb: Codebook,
    m: ChannelModel,
    params: CodeParams,
    scheme: SideInfoMode,
    *,
    cap: int = ENUM_STATE_CAP,
) -> float:
    """Exact H(S | eavesdropper observation)/N for the fixed codebook.

    Enumerates messages and side-information sequences; channel
    memorylessness factors each conditional observation law into a product
    over symbol positions, assembled without sampling. For the feedback
    schemes the observation is the two-block shadow (both blocks' z), the
    key is recomputed from the enumerated first-block y, and the result is
    still normalized by the per-block length N.

    Refuses (with a size report) when ||S||*||T||*||V||^N*||Z||^N exceeds
    ``cap``; the feedback path additionally needs ||T||*||Y||^N*||Z||^N
    within the same cap for its first-block enumeration.
    """
    _check_scheme(cb.aux, scheme)
    if params.n_block != cb.params.n_block:
        raise ParameterError(
            f"params.n_block={params.n_block} differs from codebook N={cb.params.n_block}"
        )
    n = params.n_block
    counts = cb.counts
    nv, ny, nz = len(m.v_labels), len(m.y_labels), len(m.z_labels)
    s_count, t_count = counts.k_bins, counts.u_bins
    states = s_count * t_count * (nv**n) * (nz**n)
    if states > cap:
        raise ParameterError(
            f"exact enumeration needs {states} states "
            f"(||S||={s_count} x ||T||={t_count} x ||V||^N={nv**n} x "
            f"||Z||^N={nz**n}) but the cap is {cap}"
        )
    if scheme.feedback:
        fb_states = t_count * (ny**n) * (nz**n)
        if fb_states > cap:
            raise ParameterError(
                f"feedback enumeration needs {fb_states} first-block states "
                f"(||T||={t_count} x ||Y||^N={ny**n} x ||Z||^N={nz**n}) "
                f"but the cap is {cap}"
            )
        acc = _feedback_joint(cb, m, params)
    else:
        acc = _single_block_joint(cb, m, params)
    total = float(acc.sum())
    if abs(total - 1.0) > 1e-6:
        raise RuntimeError(f"probability mass {total} strayed from 1; internal error")
    acc = acc / total
    h_sz = _entropy_bits(acc.reshape(-1))
    h_z = _entropy_bits(acc.sum(axis=0).reshape(-1))
    return (h_sz - h_z) / n


def _single_block_joint(cb: Codebook, m: ChannelModel, params: CodeParams) -> np.ndarray:
    """p(s, z^N) for the no-feedback schemes, uniform (t, s)."""
    n = params.n_block
    counts = cb.counts
    nv, nz = len(m.v_labels), len(m.z_labels)
    p_z = _z_rows(cb, m)  # (nu, nk, nv, nz)
    acc = np.zeros((counts.k_bins, nz**n))
    if cb.aux.mode.causal:
        # V never reaches the encoder's codeword choice, so each symbol's z
        # law depends on (u_i, k_i) alone and no v^N enumeration is needed.
        p_z_uk = np.einsum("ukvz,v->ukz", p_z, m.pv.mass)
        w = 1.0 / (counts.k_bins * counts.u_bins * counts.k_per_bin)
        for t in range(counts.u_bins):
            u_seq = cb.u_book[t, 0]
            for s in range(counts.k_bins):
                for slot in range(counts.k_per_bin):
                    k_seq = cb.k_books[t, 0, s, slot]
                    rows = [p_z_uk[u_seq[i], k_seq[i]] for i in range(n)]
                    acc[s] += w * _prod_vector(rows)
        return acc
    pv = m.pv.mass
    w0 = 1.0 / (counts.k_bins * counts.u_bins)
    for v_tuple in itertools.product(range(nv), repeat=n):
        v = np.array(v_tuple, dtype=np.int64)
        w_v = w0 * float(np.prod(pv[v]))
        if w_v == 0.0:
            continue
        for t in range(counts.u_bins):
            for s in range(counts.k_bins):
                u_seq, k_seq = _noncausal_encode_total(cb, params, t, s, v)
                rows = [p_z[u_seq[i], k_seq[i], v[i]] for i in range(n)]
                acc[s] += w_v * _prod_vector(rows)
    return acc


def _feedback_joint(cb: Codebook, m: ChannelModel, params: CodeParams) -> np.ndarray:
    """p(s, z_1^N, z_2^N) for a two-block feedback session, uniform (t, s).

    Block 1 carries no message; block 2 transmits bin (s + key) mod ||S||
    where the key is the feedback map applied to the enumerated block-1 y.
    Both blocks reuse the session's common message t (drawn uniform).
    """
    n = params.n_block
    counts = cb.counts
    s_count = counts.k_bins
    nv, ny, nz = len(m.v_labels), len(m.y_labels), len(m.z_labels)
    p_y, q2 = _yz_rows(cb, m)  # (nu, nk, nv, ny), (ny, nz)
    p_z = _z_rows(cb, m)  # (nu, nk, nv, nz)
    pv = m.pv.mass
    causal = cb.aux.mode.causal
    zgrid = nz**n

    # C[t, r, z1]: probability of block-1 z^N and key residue r, given t.
    c_table = np.zeros((counts.u_bins, s_count, zgrid))
    # D[t, b, z2]: probability of block-2 z^N given t and transmitted bin b.
    d_table = np.zeros((counts.u_bins, s_count, zgrid))

    if causal:
        p_y_uk = np.einsum("ukvy,v->uky", p_y, pv)
        p_z_uk = np.einsum("ukvz,v->ukz", p_z, pv)
        for t in range(counts.u_bins):
            u_seq = cb.u_book[t, 0]
            k1_seq = cb.k_books[t, 0, 0, 0]  # keyless filler: bin 0
            for y_tuple in itertools.product(range(ny), repeat=n):
                w = float(np.prod([p_y_uk[u_seq[i], k1_seq[i], y_tuple[i]] for i in range(n)]))
                if w == 0.0:
                    continue
                r = key_from_feedback(np.array(y_tuple), s_count, y_size=ny)
                c_table[t, r] += w * _prod_vector([q2[yi] for yi in y_tuple])
            for b in range(s_count):
                kb = cb.k_books[t, 0, b, 0]
                d_table[t, b] = _prod_vector([p_z_uk[u_seq[i], kb[i]] for i in range(n)])
    else:
        for t in range(counts.u_bins):
            for v_tuple in itertools.product(range(nv), repeat=n):
                v = np.array(v_tuple, dtype=np.int64)
                w_v = float(np.prod(pv[v]))
                if w_v == 0.0:
                    continue
                # Block 1: u by bin typicality, k keyless (smallest global).
                try:
                    u_cands = cb.u_book[t]
                    mask = _typical_rows(
                        u_cands, (v,), np.moveaxis(cb.targets["uv"], 0, -1), params.eps_typ
                    )
                    hits = np.flatnonzero(mask)
                    if hits.size == 0:
                        raise EncodingError("U", "no typical u in block 1")
                    u_slot = int(hits[0])
                    u1 = u_cands[u_slot]
                    b1, l1 = _block1_k_noncausal(cb, t, u_slot, u1, v, params.eps_typ)
                    k1 = cb.k_books[t, u_slot, b1, l1]
                except EncodingError:
                    u1 = cb.u_book[t, 0]
                    k1 = cb.k_books[t, 0, 0, 0]
                for y_tuple in itertools.product(range(ny), repeat=n):
                    w = w_v * float(
                        np.prod([p_y[u1[i], k1[i], v[i], y_tuple[i]] for i in range(n)])
                    )
                    if w == 0.0:
                        continue
                    r = key_from_feedback(np.array(y_tuple), s_count, y_size=ny)
                    c_table[t, r] += w * _prod_vector([q2[yi] for yi in y_tuple])
                # Block 2: binned encoding of each possible transmitted bin.
                for b in range(s_count):
                    u2, k2 = _noncausal_encode_total(cb, params, t, b, v)
                    rows = [p_z[u2[i], k2[i], v[i]] for i in range(n)]
                    d_table[t, b] += w_v * _prod_vector(rows)

    acc = np.zeros((s_count, zgrid * zgrid))
    w_ts = 1.0 / (counts.u_bins * s_count)
    for s in range(s_count):
        for t in range(counts.u_bins):
            for r in range(s_count):
                b = (s + r) % s_count
                acc[s] += w_ts * np.kron(c_table[t, r], d_table[t, b])
    return acc
