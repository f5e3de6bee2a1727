"""Rate-bound evaluation and auxiliary-distribution search.

The seven bound sets (T1..T7) are exact single-letter formulas over a full
joint on (U, K[, A], V, X, Y, Z). This module evaluates them, tests triple
membership, and searches over auxiliary joints — under the per-theorem
cardinality caps — to trace Pareto frontiers and secrecy-capacity values.

Search layout: candidates are generated independently from (seed, index)
so results match sequential evaluation regardless of execution order, and
enlarging the budget only appends candidates (existing trajectories are
unchanged, which makes the frontier monotone in the budget). Each candidate
is a start distribution (structured deterministic strategies, random
deterministic kernels, or Dirichlet draws) optionally polished by
coordinate-wise hill climbing on a scalarized objective.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelModel, SideInfoMode
from .prob import JointPmf, _entropy_of_array, mutual_information

__all__ = [
    "RegionError",
    "THEOREMS",
    "remark_caps",
    "theorem_mode",
    "AuxiliaryJoint",
    "BoundSet",
    "RateTriple",
    "ScanPoint",
    "extend_to_full_joint",
    "eval_bounds",
    "membership",
    "region_scan",
    "secrecy_capacity",
    "secrecy_capacity_search",
    "state_cancelling_aux",
]

THEOREMS = ("T1", "T2", "T3", "T4", "T5", "T6", "T7")

_NEEDS_A = frozenset({"T2", "T4", "T6"})
_CAUSAL = frozenset({"T3", "T4", "T7"})
_FEEDBACK = frozenset({"T5", "T6", "T7"})
_HAS_SUM = frozenset({"T2", "T6"})
# Candidate trajectories depend on the auxiliary family, not on which
# theorem of that family is being scanned, so scans over the same model,
# seed, and budget evaluate identical auxiliaries for e.g. T1 and T5.
_SHAPE_BASE = {"T1": "T1", "T5": "T1", "T2": "T2", "T6": "T2",
               "T3": "T3", "T7": "T3", "T4": "T4"}
_VARIANT_THEOREM = {"n": "T1", "c": "T3", "nf": "T5", "cf": "T7"}

_INDEP_TOL = 1e-9
_SLACK = 1e-9
_CLAMP_FLAG_TOL = 1e-12

_STEPS = (0.4, 0.15, 0.06, 0.024, 0.01, 0.004)
_WARMUP = 12
_STRIDE = 89
_NEAR_MARGIN = 0.08
_IMPROVE_TOL = 1e-12
_FULL_AXES = ("U", "K", "A", "V", "X", "Y", "Z")
_MAX_FULL_CELLS = 1 << 26


class RegionError(ValueError):
    """Invalid theorem usage, alphabet mismatch, or inconsistent rates."""


def _check_theorem(theorem: str) -> str:
    if theorem not in THEOREMS:
        raise RegionError(f"unknown theorem {theorem!r}; choose from {THEOREMS}")
    return theorem


def theorem_mode(theorem: str) -> SideInfoMode:
    """The side-information mode whose scheme family a theorem belongs to."""
    _check_theorem(theorem)
    timing = "causal" if theorem in _CAUSAL else "noncausal"
    return SideInfoMode(timing, theorem in _FEEDBACK)


def remark_caps(theorem: str, x_size: int, v_size: int) -> dict[str, int]:
    """Per-theorem cardinality caps for the auxiliary alphabets.

    Keyed "u", "k", and (only where a second auxiliary exists) "a"; all are
    functions of the product ``x_size * v_size``.
    """
    _check_theorem(theorem)
    if x_size < 1 or v_size < 1:
        raise RegionError("alphabet sizes must be >= 1")
    m = int(x_size) * int(v_size)
    if theorem == "T1":
        return {"u": m + 2, "k": (m + 2) ** 2}
    if theorem in ("T2", "T6"):
        return {"u": m + 2, "a": (m + 2) * (m + 1), "k": (m + 2) * (m + 1) * (m + 2) ** 2}
    if theorem == "T3":
        return {"u": m + 1, "k": (m + 1) ** 2}
    if theorem == "T4":
        return {"u": m + 1, "a": m, "k": (m + 1) ** 2 * m}
    if theorem == "T5":
        return {"u": m + 2, "k": (m + 2) * (m + 1)}
    return {"u": m + 1, "k": (m + 1) * m}  # T7


@dataclass(frozen=True)
class RateTriple:
    """A nonnegative (r0, r1, re) working point with re <= r1."""

    r0: float
    r1: float
    re: float

    def __post_init__(self) -> None:
        for name in ("r0", "r1", "re"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < -_SLACK:
                raise RegionError(f"RateTriple.{name}={v!r} is not a nonnegative rate")
            object.__setattr__(self, name, max(0.0, v))
        if self.re > self.r1 + _SLACK:
            raise RegionError(f"RateTriple: re={self.re!r} exceeds r1={self.r1!r}")
        if self.re > self.r1:
            object.__setattr__(self, "re", self.r1)


@dataclass(frozen=True)
class BoundSet:
    """Evaluated caps of one theorem; negatives are clamped to 0 and flagged."""

    theorem: str
    r0_cap: float
    r1_cap: float
    re_cap: float
    sum_cap: float | None = None
    clamped: bool = False

    def __post_init__(self) -> None:
        _check_theorem(self.theorem)
        for name in ("r0_cap", "r1_cap", "re_cap", "sum_cap"):
            v = getattr(self, name)
            if v is None and name == "sum_cap":
                continue
            v = float(v)
            if not math.isfinite(v) or v < 0.0:
                raise RegionError(f"BoundSet.{name}={v!r} must be a clamped nonnegative cap")
            object.__setattr__(self, name, v)
        if (self.sum_cap is not None) != (self.theorem in _HAS_SUM):
            raise RegionError(f"{self.theorem} sum_cap presence mismatch")


@dataclass(frozen=True)
class AuxiliaryJoint:
    """An auxiliary joint p(U, K[, A], X, V) plus its side-information mode.

    Causal modes require the auxiliaries to be independent of V — checked
    here so later evaluation can assume it.
    """

    joint: JointPmf
    mode: SideInfoMode

    def __post_init__(self) -> None:
        names = self.joint.axis_names
        expect = ("U", "K", "A", "X", "V") if "A" in names else ("U", "K", "X", "V")
        if names != expect:
            raise RegionError(f"AuxiliaryJoint axes must be {expect}, got {names}")
        if self.mode.causal:
            group = ("U", "K", "A") if self.has_a else ("U", "K")
            leak = mutual_information(self.joint, group, ("V",))
            if leak > _INDEP_TOL:
                raise RegionError(
                    f"causal mode requires auxiliaries independent of V; "
                    f"leakage {leak!r} bits exceeds {_INDEP_TOL}"
                )

    @property
    def has_a(self) -> bool:
        return "A" in self.joint.axis_names


def _q13(m: ChannelModel) -> np.ndarray:
    """Stacked channel kernel q13[v, x, y, z] = Q1(y|x,v) * Q2(z|y)."""
    return np.einsum("xvy,yz->vxyz", m.q1.kernel, m.q2.kernel)


def extend_to_full_joint(aux: AuxiliaryJoint, m: ChannelModel) -> JointPmf:
    """Push an auxiliary joint through both channels.

    Returns the joint over (U, K[, A], V, X, Y, Z); the chain
    (U,K[,A]) -> (X,V) -> Y -> Z holds by construction.
    """
    j = aux.joint
    if j.labels("X") != m.x_labels:
        raise RegionError(f"aux X alphabet {j.labels('X')} differs from model {m.x_labels}")
    if j.labels("V") != m.v_labels:
        raise RegionError(f"aux V alphabet {j.labels('V')} differs from model {m.v_labels}")
    perm = np.swapaxes(j.mass, -1, -2)  # (U, K[, A], V, X)
    full = perm[..., None, None] * _q13(m)
    full = full / full.sum()
    axes = [(n, j.labels(n)) for n in j.axis_names if n not in ("X", "V")]
    axes += [("V", m.v_labels), ("X", m.x_labels), ("Y", m.y_labels), ("Z", m.z_labels)]
    return JointPmf(tuple(axes), full)


def _entropy_fn(mass: np.ndarray, names: tuple[str, ...]):
    """A cached joint-entropy lookup H(group) over named axes of ``mass``."""
    index = {n: i for i, n in enumerate(names)}
    cache: dict[frozenset, float] = {}

    def H(group: tuple[str, ...]) -> float:
        key = frozenset(group)
        got = cache.get(key)
        if got is not None:
            return got
        drop = tuple(i for n, i in index.items() if n not in key)
        marg = mass.sum(axis=drop) if drop else mass
        val = _entropy_of_array(np.asarray(marg).reshape(-1))
        cache[key] = val
        return val

    return H


_U, _K, _A, _V, _Y, _Z = ("U",), ("K",), ("A",), ("V",), ("Y",), ("Z",)
_UA = ("U", "A")
_UAK = ("U", "A", "K")


def _raw_bounds(theorem: str, H) -> tuple[float, float, float, float | None]:
    """Unclamped (r0, r1, re, sum) of one theorem from an entropy lookup."""

    def I(a, b, c=()):
        base = H(c) if c else 0.0
        return H(a + c) + H(b + c) - H(a + b + c) - base

    if theorem in ("T1", "T5"):
        r0 = I(_U, _Z) - I(_U, _V)
        r1 = I(_K, _Y, _U) - I(_K, _V, _U)
        re = I(_K, _Y, _U) - I(_K, _Z, _U) if theorem == "T1" else H(_Y + _Z) - H(_Z)
        return r0, r1, re, None
    if theorem in ("T2", "T6"):
        r0 = I(_U, _Z) - I(_U, _V)
        r1 = I(_K, _Y, _UA) - I(_K, _V, _UA)
        total = I(_UAK, _Y) - I(_UAK, _V)
        if theorem == "T2":
            re = r1 - I(_K, _Z, _U) + I(_K, _V, _U)
        else:
            re = H(_Y + _Z) - H(_Z)
        return r0, r1, re, total
    if theorem in ("T3", "T7"):
        r0 = I(_U, _Z)
        r1 = I(_K, _Y, _U)
        re = r1 - I(_K, _Z, _U) if theorem == "T3" else H(_Y + _Z) - H(_Z)
        return r0, r1, re, None
    # T4
    r0 = I(_U, _Z)
    r1 = I(_K, _Y, _U)
    re = r1 - I(_K, _Z, _A)
    return r0, r1, re, None


def _clamp_corner(
    r0: float, r1: float, re: float, total: float | None
) -> tuple[tuple[float, float, float], tuple[float, float, float, float | None], bool]:
    """Clamp raw caps at 0 and pick the corner triple they support.

    The corner takes r0 at its cap, r1 at its cap reduced by any sum
    constraint, and re as large as both its cap and r1 allow.
    """
    worst = min(r0, r1, re, total if total is not None else 0.0)
    clamped = worst < -_CLAMP_FLAG_TOL
    r0c, r1c, rec = max(0.0, r0), max(0.0, r1), max(0.0, re)
    sumc = max(0.0, total) if total is not None else None
    r1t = r1c if sumc is None else min(r1c, max(0.0, sumc - r0c))
    ret = min(rec, r1t)
    return (r0c, r1t, ret), (r0c, r1c, rec, sumc), clamped


def eval_bounds(theorem: str, full: JointPmf) -> BoundSet:
    """Evaluate one theorem's caps on a full joint (clamping negatives to 0)."""
    _check_theorem(theorem)
    need = {"U", "K", "V", "X", "Y", "Z"} | ({"A"} if theorem in _NEEDS_A else set())
    missing = need - set(full.axis_names)
    if missing:
        raise RegionError(f"{theorem} needs axes {sorted(missing)} absent from {full.axis_names}")
    H = _entropy_fn(full.mass, full.axis_names)
    r0, r1, re, total = _raw_bounds(theorem, H)
    _, (r0c, r1c, rec, sumc), clamped = _clamp_corner(r0, r1, re, total)
    return BoundSet(theorem, r0c, r1c, rec, sumc, clamped)


def membership(b: BoundSet, t: RateTriple) -> bool:
    """Whether a rate triple satisfies every inequality of the bound set."""
    ok = (
        t.r0 <= b.r0_cap + _SLACK
        and t.r1 <= b.r1_cap + _SLACK
        and t.re <= b.re_cap + _SLACK
        and t.re <= t.r1 + _SLACK
    )
    if b.sum_cap is not None:
        ok = ok and (t.r0 + t.r1 <= b.sum_cap + _SLACK)
    return bool(ok)


def state_cancelling_aux(m: ChannelModel, mode: SideInfoMode) -> AuxiliaryJoint:
    """The binary strategy U const, K uniform over {0,1}, x = k XOR v.

    This is the distribution that meets the closed-form secrecy capacity of
    the binary instance; it is independent of V, so it is valid in every
    mode. Requires binary X and V.
    """
    if len(m.x_labels) != 2 or len(m.v_labels) != 2:
        raise RegionError("state_cancelling_aux needs binary X and V alphabets")
    mass = np.zeros((1, 2, 2, 2))
    pv = np.asarray(m.pv.mass)
    for k in range(2):
        for v in range(2):
            mass[0, k, k ^ v, v] = 0.5 * pv[v]
    axes = (("U", ("u0",)), ("K", ("k0", "k1")), ("X", m.x_labels), ("V", m.v_labels))
    return AuxiliaryJoint(JointPmf(axes, mass), mode)


# ---------------------------------------------------------------------------
# Search engine


def _move(vec: np.ndarray, j: int, delta: float, sign: int) -> np.ndarray | None:
    """One simplex step: push mass toward cell j (sign>0) or away from it.

    The away move zeroes the cell exactly once delta reaches its mass, so
    corners of the simplex are reachable in finitely many steps.
    """
    if sign > 0:
        out = vec / (1.0 + delta)
        out[j] += delta / (1.0 + delta)
    else:
        d = min(delta, float(vec[j]))
        if d <= 0.0:
            return None
        denom = 1.0 - d
        if denom <= 1e-12:
            return None
        out = vec / denom
        out[j] = (vec[j] - d) / denom
    return out / out.sum()


def _nth_subset(n: int, sizes: list[int], idx: int) -> tuple[int, ...]:
    """The idx-th subset in the cycle over all sizes in ``sizes`` (lex order)."""
    counts = [math.comb(n, r) for r in sizes]
    idx %= sum(counts)
    for r, cnt in zip(sizes, counts):
        if idx < cnt:
            return next(itertools.islice(itertools.combinations(range(n), r), idx, None))
        idx -= cnt
    raise AssertionError("unreachable")


class _Engine:
    """Candidate generation, evaluation, and hill climbing for one model.

    States carry a second auxiliary axis of size 1 when the theorem has
    none, so every code path sees the same array ranks. Causal states are
    (mixture over auxiliaries, per-(aux, v) input rows); noncausal states
    are one conditional cell block per state symbol v.
    """

    def __init__(
        self, m: ChannelModel, causal: bool, has_a: bool,
        u_size: int, k_size: int, a_size: int,
    ) -> None:
        self.m = m
        self.causal = causal
        self.has_a = has_a
        self.nu, self.nk, self.na = int(u_size), int(k_size), int(a_size)
        self.nx, self.nv = len(m.x_labels), len(m.v_labels)
        self.ny, self.nz = len(m.y_labels), len(m.z_labels)
        cells = self.nu * self.nk * self.na * self.nv * self.nx * self.ny * self.nz
        if cells > _MAX_FULL_CELLS:
            raise RegionError(
                f"auxiliary sizes give a {cells}-cell working array "
                f"(limit {_MAX_FULL_CELLS}); pass smaller u/k/a sizes"
            )
        self.pv = np.asarray(m.pv.mass)
        self.q13 = _q13(m)
        n_maps = self.nx ** self.nv
        self.strategies = (
            list(itertools.product(range(self.nx), repeat=self.nv)) if n_maps <= 64 else None
        )
        if self.strategies is not None:
            n = len(self.strategies)
            top = min(self.nk, n)
            low = min(2, top)
            sizes = list(range(low, top + 1))
            if sum(math.comb(n, r) for r in sizes) > 4096:
                self.strategies = None
            else:
                self._subset_sizes = sizes

    # -- state construction ------------------------------------------------

    def _blank(self) -> tuple:
        if self.causal:
            mix = np.zeros((self.nu, self.nk, self.na))
            fx = np.full((self.nu, self.nk, self.na, self.nv, self.nx), 1.0 / self.nx)
            return mix, fx
        return (np.zeros((self.nv, self.nu, self.nk, self.na, self.nx)),)

    def start(self, i: int, rng: np.random.Generator) -> tuple:
        kind = i % 3
        if kind == 0 and self.strategies is not None:
            return self._structured_start(i // 3)
        if kind in (0, 1):
            return self._kernel_start(rng)
        return self._dirichlet_start(rng)

    def _structured_start(self, counter: int) -> tuple:
        """Deterministic-strategy start: one map V->X per active k symbol.

        Enumerated deterministically (independent of the seed) so small
        models sweep every strategy subset early in the budget.
        """
        n = len(self.strategies)
        combo = _nth_subset(n, self._subset_sizes, counter)
        k_act = len(combo)
        state = self._blank()
        if self.causal:
            mix, fx = state
            mix[0, :k_act, 0] = 1.0 / k_act
            for k, sidx in enumerate(combo):
                for v in range(self.nv):
                    fx[:, k, :, v, :] = 0.0
                    fx[:, k, :, v, self.strategies[sidx][v]] = 1.0
            return mix, fx
        (cond,) = state
        for k, sidx in enumerate(combo):
            for v in range(self.nv):
                cond[v, 0, k, 0, self.strategies[sidx][v]] = 1.0 / k_act
        return (cond,)

    def _kernel_start(self, rng: np.random.Generator) -> tuple:
        """Random deterministic input kernel over a random active block."""
        u_act = int(rng.integers(1, min(self.nu, 3) + 1))
        a_act = int(rng.integers(1, min(self.na, 2) + 1)) if self.has_a else 1
        k_act = int(rng.integers(min(2, self.nk), self.nk + 1))
        f = rng.integers(0, self.nx, size=(u_act, k_act, a_act, self.nv))
        uniform_w = bool(rng.random() < 0.5)

        def weights() -> np.ndarray:
            if uniform_w:
                return np.full(u_act * k_act * a_act, 1.0 / (u_act * k_act * a_act))
            return rng.dirichlet(np.ones(u_act * k_act * a_act))

        state = self._blank()
        if self.causal:
            mix, fx = state
            mix[:u_act, :k_act, :a_act] = weights().reshape(u_act, k_act, a_act)
            for u in range(u_act):
                for k in range(k_act):
                    for a in range(a_act):
                        for v in range(self.nv):
                            fx[u, k, a, v, :] = 0.0
                            fx[u, k, a, v, f[u, k, a, v]] = 1.0
            return mix, fx
        (cond,) = state
        per_v = bool(rng.random() < 0.5)
        w = weights().reshape(u_act, k_act, a_act)
        for v in range(self.nv):
            if per_v:
                w = weights().reshape(u_act, k_act, a_act)
            for u in range(u_act):
                for k in range(k_act):
                    for a in range(a_act):
                        cond[v, u, k, a, f[u, k, a, v]] += w[u, k, a]
        return (cond,)

    def _dirichlet_start(self, rng: np.random.Generator) -> tuple:
        alpha = float(rng.choice((0.3, 1.0)))

        def simplex(shape: tuple[int, ...], last_axis_only: bool) -> np.ndarray:
            g = np.maximum(rng.gamma(alpha, size=shape), 1e-300)
            if last_axis_only:
                return g / g.sum(axis=-1, keepdims=True)
            return g / g.sum()

        if self.causal:
            mix = simplex((self.nu, self.nk, self.na), last_axis_only=False)
            fx = simplex((self.nu, self.nk, self.na, self.nv, self.nx), last_axis_only=True)
            return mix, fx
        cond = np.stack(
            [simplex((self.nu, self.nk, self.na, self.nx), False) for _ in range(self.nv)]
        )
        return (cond,)

    # -- evaluation ----------------------------------------------------------

    def _aux_vx(self, state: tuple) -> np.ndarray:
        """State -> joint array over (U, K, A, V, X)."""
        if self.causal:
            mix, fx = state
            return mix[..., None, None] * fx * self.pv[:, None]
        (cond,) = state
        return np.moveaxis(cond, 0, 3) * self.pv[:, None]

    def corners(self, state: tuple, theorems: tuple[str, ...]) -> dict:
        """Corner triples/caps of the requested theorems at one state."""
        full = self._aux_vx(state)[..., None, None] * self.q13
        H = _entropy_fn(full, _FULL_AXES)
        return {th: _clamp_corner(*_raw_bounds(th, H)) for th in theorems}

    # -- refinement ------------------------------------------------------------

    def _coords(self) -> list[tuple]:
        coords: list[tuple] = []
        if self.causal:
            coords += [("m", j) for j in range(self.nu * self.nk * self.na)]
            rows = self.nu * self.nk * self.na * self.nv
            coords += [("f", r, x) for r in range(rows) for x in range(self.nx)]
        else:
            per = self.nu * self.nk * self.na * self.nx
            coords += [("c", v, j) for v in range(self.nv) for j in range(per)]
        return coords

    def _apply(self, state: tuple, coord: tuple, delta: float, sign: int) -> tuple | None:
        if coord[0] == "m":
            mix, fx = state
            vec = _move(mix.reshape(-1).copy(), coord[1], delta, sign)
            if vec is None:
                return None
            return vec.reshape(mix.shape), fx
        if coord[0] == "f":
            mix, fx = state
            _, r, x = coord
            rows = fx.reshape(-1, self.nx)
            row = _move(rows[r].copy(), x, delta, sign)
            if row is None:
                return None
            rows = rows.copy()
            rows[r] = row
            return mix, rows.reshape(fx.shape)
        (cond,) = state
        _, v, j = coord
        sl = _move(cond[v].reshape(-1).copy(), j, delta, sign)
        if sl is None:
            return None
        cond = cond.copy()
        cond[v] = sl.reshape(cond[v].shape)
        return (cond,)

    def refine(self, state: tuple, value_fn, start_val: float, max_evals: int):
        """First-improvement coordinate ascent over shrinking step sizes."""
        best, best_val = state, start_val
        coords = self._coords()
        evals = 0
        for step in _STEPS:
            while evals < max_evals:
                improved = False
                for coord in coords:
                    for sign in (1, -1):
                        if evals >= max_evals:
                            break
                        cand = self._apply(best, coord, step, sign)
                        if cand is None:
                            continue
                        val = value_fn(cand)
                        evals += 1
                        if val > best_val + _IMPROVE_TOL:
                            best, best_val = cand, val
                            improved = True
                if not improved:
                    break
        return best, best_val

    # -- packaging ------------------------------------------------------------

    def aux_joint(self, state: tuple, mode: SideInfoMode) -> AuxiliaryJoint:
        arr = np.swapaxes(self._aux_vx(state), -1, -2)  # (U, K, A, X, V)
        axes = [
            ("U", tuple(f"u{i}" for i in range(self.nu))),
            ("K", tuple(f"k{i}" for i in range(self.nk))),
            ("A", tuple(f"a{i}" for i in range(self.na))),
            ("X", self.m.x_labels),
            ("V", self.m.v_labels),
        ]
        if not self.has_a:
            arr = arr[:, :, 0]
            del axes[2]
        arr = arr / arr.sum()
        return AuxiliaryJoint(JointPmf(tuple(axes), arr), mode)


def _resolve_sizes(
    theorem: str, m: ChannelModel, u_size, k_size, a_size
) -> tuple[int, int, int]:
    caps = remark_caps(theorem, len(m.x_labels), len(m.v_labels))
    has_a = theorem in _NEEDS_A
    if a_size is not None and not has_a:
        raise RegionError(f"{theorem} has no second auxiliary; a_size does not apply")
    out = []
    for name, given in (("u", u_size), ("k", k_size), ("a", a_size if has_a else None)):
        cap = caps.get(name, 1)
        size = cap if given is None else int(given)
        if not 1 <= size <= cap:
            raise RegionError(f"{name}_size={given!r} outside [1, {cap}] for {theorem}")
        out.append(size)
    return out[0], out[1], out[2]


def _check_budget_seed(budget: int, seed: int) -> tuple[int, int]:
    budget = int(budget)
    if budget < 1:
        raise RegionError(f"budget must be >= 1, got {budget!r}")
    seed = int(seed)
    if seed < 0:
        raise RegionError(f"seed must be a nonnegative integer, got {seed!r}")
    return budget, seed


def _search(eng: _Engine, base: str, wanted: tuple[str, ...], budget: int, seed: int,
            draw_obj, refine_evals: int) -> list[tuple]:
    """Run the candidate loop; returns (index, corners, state, objective)."""
    results = []
    incumbent = -math.inf
    near_used = 0
    near_cap = max(24, budget // 112)
    for i in range(budget):
        rng = np.random.default_rng((seed, i))
        state = eng.start(i, rng)
        obj = draw_obj(rng)
        cors = eng.corners(state, wanted)
        v0 = obj(cors[base][0])
        do_refine = i < _WARMUP or i % _STRIDE == 0
        if not do_refine and v0 >= incumbent - _NEAR_MARGIN and near_used < near_cap:
            do_refine = True
            near_used += 1
        if do_refine and refine_evals > 0:
            refined, vbest = eng.refine(
                state, lambda s: obj(eng.corners(s, (base,))[base][0]), v0, refine_evals
            )
            if vbest > v0:
                state, cors = refined, eng.corners(refined, wanted)
        else:
            vbest = v0
        incumbent = max(incumbent, vbest)
        results.append((i, cors, state, vbest))
    return results


def _quantize(triple: tuple[float, float, float]) -> tuple[int, int, int]:
    return tuple(round(c * 1e9) for c in triple)


def _pareto_indices(corners: list[tuple[float, float, float]]) -> list[int]:
    """Indices of non-dominated triples; exact dominance on 1e-9-quantized
    coordinates (transitive, so the kept set is deterministic), keeping the
    earliest of exactly tied points."""
    frontier: list[tuple[tuple[int, int, int], int]] = []
    for i, c in enumerate(corners):
        qt = _quantize(c)
        if any(all(f >= t for f, t in zip(fq, qt)) for fq, _ in frontier):
            continue
        frontier = [
            (fq, fi) for fq, fi in frontier
            if not (all(t >= f for t, f in zip(qt, fq)) and qt != fq)
        ]
        frontier.append((qt, i))
    return sorted(i for _, i in frontier)


@dataclass(frozen=True)
class ScanPoint:
    """One Pareto-frontier point with the auxiliary that produced it."""

    triple: RateTriple
    aux: AuxiliaryJoint
    bounds: BoundSet
    candidate_index: int


def region_scan(
    m: ChannelModel,
    theorem: str,
    budget: int,
    seed: int,
    *,
    u_size: int | None = None,
    k_size: int | None = None,
    a_size: int | None = None,
    refine_evals: int = 400,
) -> list[ScanPoint]:
    """Search auxiliary joints and return the Pareto frontier of corner triples.

    Deterministic under (seed, budget): candidate i is generated from
    (seed, i) alone, so a larger budget reuses every earlier candidate.
    Every returned point re-verifies against the public evaluator before
    being returned.
    """
    _check_theorem(theorem)
    budget, seed = _check_budget_seed(budget, seed)
    nu, nk, na = _resolve_sizes(theorem, m, u_size, k_size, a_size)
    eng = _Engine(m, theorem in _CAUSAL, theorem in _NEEDS_A, nu, nk, na)
    base = _SHAPE_BASE[theorem]

    def draw_obj(rng: np.random.Generator):
        if rng.random() < 0.4:
            return lambda t: min(t[1], t[2])
        w = rng.dirichlet((1.0, 1.0, 1.0))
        return lambda t: w[0] * t[0] + w[1] * t[1] + w[2] * t[2]

    wanted = tuple(sorted({base, theorem}))
    results = _search(eng, base, wanted, budget, seed, draw_obj, refine_evals)
    corners = [res[1][theorem][0] for res in results]
    keep = _pareto_indices(corners)

    mode = theorem_mode(theorem)
    points = []
    for i in keep:
        _, cors, state, _ = results[i]
        aux = eng.aux_joint(state, mode)
        bounds = eval_bounds(theorem, extend_to_full_joint(aux, m))
        triple = RateTriple(*cors[theorem][0])
        if not membership(bounds, triple):
            raise RegionError(
                f"internal: candidate {i} corner {triple} failed re-verification "
                f"against {bounds}"
            )
        points.append(ScanPoint(triple, aux, bounds, i))
    return points


def secrecy_capacity_search(
    m: ChannelModel,
    variant: str,
    budget: int,
    seed: int,
    *,
    u_size: int | None = None,
    k_size: int | None = None,
    refine_evals: int = 320,
) -> tuple[float, AuxiliaryJoint]:
    """Maximize the variant's secrecy-rate expression; returns (bits, argmax).

    Exact-capacity estimate for variant "cf" (that theorem is tight); a
    lower-bound estimate for the other variants.
    """
    mode = SideInfoMode.from_variant(variant)
    theorem = _VARIANT_THEOREM[variant]
    budget, seed = _check_budget_seed(budget, seed)
    nu, nk, _ = _resolve_sizes(theorem, m, u_size, k_size, None)
    eng = _Engine(m, mode.causal, False, nu, nk, 1)
    if variant == "c":
        objective = lambda t: t[2]  # noqa: E731 - corner re is the whole objective
    else:
        objective = lambda t: min(t[1], t[2])  # noqa: E731
    results = _search(
        eng, theorem, (theorem,), budget, seed, lambda rng: objective, refine_evals
    )
    best = max(results, key=lambda r: (r[3], -r[0]))
    value = max(0.0, best[3])
    return value, eng.aux_joint(best[2], mode)


def secrecy_capacity(
    m: ChannelModel, variant: str, budget: int, seed: int, **kwargs
) -> float:
    """The best secrecy rate found for the variant (see secrecy_capacity_search)."""
    value, _ = secrecy_capacity_search(m, variant, budget, seed, **kwargs)
    return value
