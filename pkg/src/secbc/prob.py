"""Exact finite-alphabet probability objects and information measures.

All distributions are dense numpy arrays over small labeled alphabets,
immutable after construction, and all measures are in bits (log base 2,
with 0 log 0 = 0 by continuity).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DistributionError",
    "FinitePmf",
    "JointPmf",
    "CondPmf",
    "entropy",
    "binary_entropy",
    "mutual_information",
    "conditional_mutual_information",
    "is_markov_chain",
    "condition_on",
    "permute_axis",
    "NORM_TOL",
]

# Construction tolerance: total mass must sit within this of 1, and any
# negative cell beyond this is treated as corrupt rather than clamped.
NORM_TOL = 1e-12


class DistributionError(ValueError):
    """A pmf, joint, or kernel failed validation."""


def _clean_mass(mass: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(mass)):
        raise DistributionError(f"{what}: mass contains non-finite entries")
    lowest = float(mass.min()) if mass.size else 0.0
    if lowest < -NORM_TOL:
        raise DistributionError(f"{what}: negative mass {lowest!r}")
    mass = np.where(mass < 0.0, 0.0, mass)
    total = float(mass.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise DistributionError(f"{what}: total mass {total!r} is not 1 within {NORM_TOL}")
    return mass


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def _check_labels(labels: Sequence[str], what: str) -> tuple[str, ...]:
    out = tuple(str(lab) for lab in labels)
    if not out:
        raise DistributionError(f"{what}: empty alphabet")
    if len(set(out)) != len(out):
        raise DistributionError(f"{what}: duplicate labels {out}")
    return out


@dataclass(frozen=True)
class FinitePmf:
    """A probability mass function over one labeled alphabet.

    Parameters
    ----------
    labels : ordered alphabet symbols, unique.
    mass : nonnegative vector summing to 1 within ``NORM_TOL``.
    """

    labels: tuple[str, ...]
    mass: np.ndarray

    def __post_init__(self) -> None:
        labels = _check_labels(self.labels, "FinitePmf")
        mass = np.asarray(self.mass, dtype=float).reshape(-1)
        if mass.size != len(labels):
            raise DistributionError(
                f"FinitePmf: {len(labels)} labels but {mass.size} mass entries"
            )
        mass = _clean_mass(mass, "FinitePmf")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mass", _freeze(mass))

    def __len__(self) -> int:
        return len(self.labels)

    def prob(self, label: str) -> float:
        return float(self.mass[self.labels.index(label)])

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "mass": [float(x) for x in self.mass]}

    @classmethod
    def from_dict(cls, d: dict) -> "FinitePmf":
        return cls(tuple(d["labels"]), np.asarray(d["mass"], dtype=float))

    @classmethod
    def uniform(cls, labels: Sequence[str]) -> "FinitePmf":
        n = len(tuple(labels))
        return cls(tuple(labels), np.full(n, 1.0 / n))


def _norm_axes(axes) -> tuple[tuple[str, tuple[str, ...]], ...]:
    out = []
    for name, labels in axes:
        out.append((str(name), _check_labels(labels, f"axis {name}")))
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        raise DistributionError(f"JointPmf: duplicate axis names {names}")
    return tuple(out)


@dataclass(frozen=True)
class JointPmf:
    """A joint pmf over several named axes, stored as a dense array.

    Axes keep their declaration order everywhere (marginals, serialization),
    so equal joints serialize to identical bytes.
    """

    axes: tuple[tuple[str, tuple[str, ...]], ...]
    mass: np.ndarray

    def __post_init__(self) -> None:
        axes = _norm_axes(self.axes)
        mass = np.asarray(self.mass, dtype=float)
        shape = tuple(len(labels) for _, labels in axes)
        if mass.shape != shape:
            raise DistributionError(
                f"JointPmf: mass shape {mass.shape} does not match axes {shape}"
            )
        mass = _clean_mass(mass, "JointPmf")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "mass", _freeze(mass))

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.axes)

    def axis_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.axes):
            if n == name:
                return i
        raise DistributionError(f"JointPmf has no axis {name!r}; axes are {self.axis_names}")

    def labels(self, name: str) -> tuple[str, ...]:
        return self.axes[self.axis_index(name)][1]

    def marginal(self, names: Iterable[str]) -> "JointPmf":
        """Marginal joint over ``names``, keeping declaration order."""
        keep = set(self._group(names))
        drop = tuple(i for i, (n, _) in enumerate(self.axes) if n not in keep)
        kept_axes = tuple(ax for ax in self.axes if ax[0] in keep)
        return JointPmf(kept_axes, self.mass.sum(axis=drop) if drop else self.mass)

    def pmf(self, name: str) -> FinitePmf:
        marg = self.marginal([name])
        return FinitePmf(marg.axes[0][1], marg.mass)

    def _group(self, names) -> tuple[str, ...]:
        if isinstance(names, str):
            names = [names]
        names = tuple(names)
        for n in names:
            self.axis_index(n)
        if len(set(names)) != len(names):
            raise DistributionError(f"repeated axis in group {names}")
        return names

    def to_dict(self) -> dict:
        return {
            "axes": [{"name": n, "labels": list(labels)} for n, labels in self.axes],
            "mass": [float(x) for x in self.mass.reshape(-1)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointPmf":
        axes = tuple((a["name"], tuple(a["labels"])) for a in d["axes"])
        shape = tuple(len(labels) for _, labels in axes)
        return cls(axes, np.asarray(d["mass"], dtype=float).reshape(shape))


@dataclass(frozen=True)
class CondPmf:
    """A stochastic kernel: one pmf over ``out_axes`` per conditioning tuple."""

    given_axes: tuple[tuple[str, tuple[str, ...]], ...]
    out_axes: tuple[tuple[str, tuple[str, ...]], ...]
    kernel: np.ndarray

    def __post_init__(self) -> None:
        given_axes = _norm_axes(self.given_axes)
        out_axes = _norm_axes(self.out_axes)
        if set(n for n, _ in given_axes) & set(n for n, _ in out_axes):
            raise DistributionError("CondPmf: given and out axes overlap")
        kernel = np.asarray(self.kernel, dtype=float)
        shape = tuple(len(v) for _, v in given_axes) + tuple(len(v) for _, v in out_axes)
        if kernel.shape != shape:
            raise DistributionError(
                f"CondPmf: kernel shape {kernel.shape} does not match axes {shape}"
            )
        if not np.all(np.isfinite(kernel)):
            raise DistributionError("CondPmf: non-finite kernel")
        if float(kernel.min()) < -NORM_TOL:
            raise DistributionError(f"CondPmf: negative kernel entry {float(kernel.min())!r}")
        kernel = np.where(kernel < 0.0, 0.0, kernel)
        out_dims = tuple(range(len(given_axes), kernel.ndim))
        sums = kernel.sum(axis=out_dims)
        bad = float(np.abs(sums - 1.0).max())
        if bad > NORM_TOL:
            raise DistributionError(f"CondPmf: row off normalization by {bad!r}")
        object.__setattr__(self, "given_axes", given_axes)
        object.__setattr__(self, "out_axes", out_axes)
        object.__setattr__(self, "kernel", _freeze(kernel))

    @property
    def given_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.given_axes)

    @property
    def out_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.out_axes)

    def row(self, *idx: int) -> np.ndarray:
        return self.kernel[tuple(idx)]

    def to_dict(self) -> dict:
        return {
            "given_axes": [{"name": n, "labels": list(v)} for n, v in self.given_axes],
            "out_axes": [{"name": n, "labels": list(v)} for n, v in self.out_axes],
            "kernel": [float(x) for x in self.kernel.reshape(-1)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CondPmf":
        given = tuple((a["name"], tuple(a["labels"])) for a in d["given_axes"])
        out = tuple((a["name"], tuple(a["labels"])) for a in d["out_axes"])
        shape = tuple(len(v) for _, v in given) + tuple(len(v) for _, v in out)
        return cls(given, out, np.asarray(d["kernel"], dtype=float).reshape(shape))


def _entropy_of_array(mass: np.ndarray) -> float:
    m = mass[mass > 0.0]
    if m.size == 0:
        return 0.0
    return float(-(m * np.log2(m)).sum()) + 0.0


def entropy(p: FinitePmf | JointPmf) -> float:
    """Shannon entropy H(p) in bits; H = -sum p log2 p with 0 log 0 = 0."""
    return _entropy_of_array(np.asarray(p.mass))


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2 (1-x) on [0, 1]; h(0) = h(1) = 0."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DistributionError(f"binary_entropy: {x!r} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x))


def _group_entropy(j: JointPmf, group: tuple[str, ...]) -> float:
    if not group:
        return 0.0
    keep = set(group)
    drop = tuple(i for i, (n, _) in enumerate(j.axes) if n not in keep)
    mass = j.mass.sum(axis=drop) if drop else j.mass
    return _entropy_of_array(mass)


def _clamp_measure(value: float, what: str) -> float:
    if value < -NORM_TOL:
        raise ArithmeticError(f"{what} evaluated to {value!r}; numerical inconsistency")
    return max(0.0, value)


def _disjoint(j: JointPmf, *groups) -> list[tuple[str, ...]]:
    normed = [j._group(g) if g else tuple() for g in groups]
    seen: set[str] = set()
    for g in normed:
        for name in g:
            if name in seen:
                raise DistributionError(f"axis {name!r} appears in more than one group")
            seen.add(name)
    return normed


def mutual_information(j: JointPmf, group_a, group_b) -> float:
    """I(A;B) = H(A) + H(B) - H(A,B), clamped at 0 from tiny float negatives.

    Parameters
    ----------
    group_a, group_b : disjoint, nonempty collections of axis names of ``j``.
    """
    a, b = _disjoint(j, group_a, group_b)
    if not a or not b:
        raise DistributionError("mutual_information: groups must be nonempty")
    value = _group_entropy(j, a) + _group_entropy(j, b) - _group_entropy(j, a + b)
    return _clamp_measure(value, "mutual information")


def conditional_mutual_information(j: JointPmf, group_a, group_b, group_c=()) -> float:
    """I(A;B|C) in bits; equals sum_c p(c) I(A;B|C=c).

    Computed through the entropy identity
    H(A,C) + H(B,C) - H(A,B,C) - H(C), which matches the cell-weighted sum
    to float precision. An empty ``group_c`` reduces to mutual information.
    """
    a, b, c = _disjoint(j, group_a, group_b, group_c)
    if not a or not b:
        raise DistributionError("conditional_mutual_information: A and B must be nonempty")
    value = (
        _group_entropy(j, a + c)
        + _group_entropy(j, b + c)
        - _group_entropy(j, a + b + c)
        - _group_entropy(j, c)
    )
    return _clamp_measure(value, "conditional mutual information")


def is_markov_chain(j: JointPmf, chain, tol: float) -> bool:
    """True iff the ordered groups form a Markov chain within ``tol`` bits.

    For every interior group G_i the conditional mutual information between
    everything before it and the next group, given G_i, must not exceed
    ``tol``; for three groups this is exactly I(G1; G3 | G2) <= tol, and in
    general it holds iff the joint factorizes group-by-group along the chain.
    """
    groups = [g if not isinstance(g, str) else (g,) for g in chain]
    groups = _disjoint(j, *groups)
    if len(groups) < 2 or any(not g for g in groups):
        raise DistributionError("is_markov_chain: need at least two nonempty groups")
    past: tuple[str, ...] = groups[0]
    for i in range(1, len(groups) - 1):
        leak = conditional_mutual_information(j, past, groups[i + 1], groups[i])
        if leak > tol:
            return False
        past = past + groups[i]
    return True


def condition_on(j: JointPmf, given, out) -> CondPmf:
    """Split a joint into the kernel p(out | given).

    Conditioning cells with zero probability get uniform rows; they carry no
    mass and never matter downstream, but keep the kernel total.
    """
    g, o = _disjoint(j, given, out)
    if not g or not o:
        raise DistributionError("condition_on: given and out must be nonempty")
    sub = j.marginal(g + o)
    order = [sub.axis_index(n) for n in g] + [sub.axis_index(n) for n in o]
    mass = np.transpose(sub.mass, order)
    out_dims = tuple(range(len(g), mass.ndim))
    denom = mass.sum(axis=out_dims, keepdims=True)
    out_cells = int(np.prod([mass.shape[d] for d in out_dims]))
    kernel = np.where(denom > 0.0, mass / np.where(denom == 0.0, 1.0, denom), 1.0 / out_cells)
    given_axes = tuple((n, j.labels(n)) for n in g)
    out_axes = tuple((n, j.labels(n)) for n in o)
    return CondPmf(given_axes, out_axes, kernel)


def permute_axis(j: JointPmf, axis_name: str, new_label_order: Sequence[str]) -> JointPmf:
    """Reindex one axis by a permutation of its labels (same distribution)."""
    idx = j.axis_index(axis_name)
    old = j.axes[idx][1]
    order = tuple(str(lab) for lab in new_label_order)
    if sorted(order) != sorted(old):
        raise DistributionError(f"permute_axis: {order} is not a permutation of {old}")
    perm = [old.index(lab) for lab in order]
    mass = np.take(j.mass, perm, axis=idx)
    axes = tuple((n, order if i == idx else labels) for i, (n, labels) in enumerate(j.axes))
    return JointPmf(axes, mass)
