"""Problem instances: the two-stage channel with encoder side information.

A ChannelModel is the pair of kernels Q1(y|x,v), Q2(z|y) plus the state
source p_V. Receiver 2's observation is always the degraded cascade of
receiver 1's. The binary example (state-flipped crossover channel followed
by a BSC) ships with its closed-form secrecy capacity as an independent
oracle for the search code.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prob import CondPmf, DistributionError, FinitePmf, binary_entropy

__all__ = [
    "ChannelModel",
    "SideInfoMode",
    "ConfigError",
    "cascade",
    "binary_example_model",
    "binary_secrecy_capacity_oracle",
    "parse_model_config",
    "load_model_config",
    "VARIANTS",
]

VARIANTS = ("n", "c", "nf", "cf")


class ConfigError(ValueError):
    """A model config file failed to parse or validate."""


@dataclass(frozen=True)
class SideInfoMode:
    """How the encoder sees the state: noncausal or causal, plus feedback.

    The four combinations select the four scheme families; ``variant`` is the
    short tag used by the CLI and the capacity search.
    """

    timing: str
    feedback: bool

    def __post_init__(self) -> None:
        if self.timing not in ("noncausal", "causal"):
            raise DistributionError(f"SideInfoMode timing {self.timing!r}")
        object.__setattr__(self, "feedback", bool(self.feedback))

    @property
    def causal(self) -> bool:
        return self.timing == "causal"

    @property
    def variant(self) -> str:
        base = "c" if self.causal else "n"
        return (base + "f") if self.feedback else base

    @classmethod
    def from_variant(cls, variant: str) -> "SideInfoMode":
        if variant not in VARIANTS:
            raise ConfigError(f"unknown scheme variant {variant!r}; choose from {VARIANTS}")
        timing = "causal" if variant.startswith("c") else "noncausal"
        return cls(timing, variant.endswith("f"))

    @property
    def theorem_family(self) -> tuple[str, ...]:
        return {
            "n": ("T1", "T2"),
            "c": ("T3", "T4"),
            "nf": ("T5", "T6"),
            "cf": ("T7",),
        }[self.variant]


@dataclass(frozen=True)
class ChannelModel:
    """(Q1, Q2, p_V) with axis names fixed to X, V, Y, Z."""

    q1: CondPmf
    q2: CondPmf
    pv: FinitePmf

    def __post_init__(self) -> None:
        if self.q1.given_names != ("X", "V") or self.q1.out_names != ("Y",):
            raise DistributionError(
                f"q1 must map (X,V)->Y, got {self.q1.given_names}->{self.q1.out_names}"
            )
        if self.q2.given_names != ("Y",) or self.q2.out_names != ("Z",):
            raise DistributionError(
                f"q2 must map (Y,)->Z, got {self.q2.given_names}->{self.q2.out_names}"
            )
        if self.q2.given_axes[0][1] != self.q1.out_axes[0][1]:
            raise DistributionError("q2's Y alphabet differs from q1's Y output alphabet")
        if self.pv.labels != self.q1.given_axes[1][1]:
            raise DistributionError("pv alphabet differs from q1's V alphabet")

    @property
    def x_labels(self) -> tuple[str, ...]:
        return self.q1.given_axes[0][1]

    @property
    def v_labels(self) -> tuple[str, ...]:
        return self.q1.given_axes[1][1]

    @property
    def y_labels(self) -> tuple[str, ...]:
        return self.q1.out_axes[0][1]

    @property
    def z_labels(self) -> tuple[str, ...]:
        return self.q2.out_axes[0][1]


def cascade(m: ChannelModel) -> CondPmf:
    """The end-to-end kernel Q3(z|x,v) = sum_y Q2(z|y) Q1(y|x,v)."""
    k3 = np.einsum("xvy,yz->xvz", m.q1.kernel, m.q2.kernel)
    return CondPmf(m.q1.given_axes, m.q2.out_axes, k3)


def _prob01(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DistributionError(f"{name}={x!r} outside [0, 1]")
    return x


def binary_example_model(p: float, q: float) -> ChannelModel:
    """The worked binary instance: all alphabets {0,1}, V uniform.

    Channel 1 flips x with probability p when v=0 and probability 1-p when
    v=1; channel 2 is a BSC with crossover q.
    """
    p = _prob01(p, "p")
    q = _prob01(q, "q")
    b = ("0", "1")
    k1 = np.empty((2, 2, 2))
    for x in range(2):
        # v=0: y == x with prob 1-p; v=1: y == x with prob p.
        k1[x, 0, x] = 1.0 - p
        k1[x, 0, 1 - x] = p
        k1[x, 1, x] = p
        k1[x, 1, 1 - x] = 1.0 - p
    q1 = CondPmf((("X", b), ("V", b)), (("Y", b),), k1)
    k2 = np.array([[1.0 - q, q], [q, 1.0 - q]])
    q2 = CondPmf((("Y", b),), (("Z", b),), k2)
    pv = FinitePmf(b, np.array([0.5, 0.5]))
    return ChannelModel(q1, q2, pv)


def binary_secrecy_capacity_oracle(p: float, q: float) -> float:
    """Closed-form causal-feedback secrecy capacity min{1-h(p), h(q)}.

    Kept apart from the search code on purpose: acceptance tests compare the
    optimizer against this formula as independent ground truth.
    """
    p = _prob01(p, "p")
    q = _prob01(q, "q")
    return min(1.0 - binary_entropy(p), binary_entropy(q))


# ---------------------------------------------------------------------------
# Flat key-value model files.
#
# Keys: alphabet.x / alphabet.v / alphabet.y / alphabet.z  (comma-separated)
#       pv.<v>              one state probability per line
#       q1.<y>|<x>,<v>      one channel-1 entry per line
#       q2.<z>|<y>          one channel-2 entry per line
# or the one-line shorthand:  preset = binary_example p=<f> q=<f>
# Rows may be off normalization by at most 1e-9 and are renormalized.

_ROW_TOL = 1e-9


def _parse_lines(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value.strip()
    return entries


def _parse_preset(value: str) -> ChannelModel:
    parts = value.split()
    if not parts or parts[0] != "binary_example":
        raise ConfigError(f"unknown preset {value!r}")
    kv = {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise ConfigError(f"preset token {tok!r} is not name=value")
        name, s = tok.split("=", 1)
        kv[name] = s
    try:
        p = float(kv["p"])
        q = float(kv["q"])
    except KeyError as missing:
        raise ConfigError(f"preset binary_example needs p and q; missing {missing}") from None
    except ValueError as bad:
        raise ConfigError(f"preset binary_example: {bad}") from None
    return binary_example_model(p, q)


def _row(entries: dict[str, str], keys: list[str], what: str) -> np.ndarray:
    vals = []
    for key in keys:
        if key not in entries:
            raise ConfigError(f"missing key {key!r}")
        try:
            vals.append(float(entries[key]))
        except ValueError:
            raise ConfigError(f"key {key!r}: {entries[key]!r} is not a number") from None
    row = np.asarray(vals)
    if row.min() < 0.0:
        raise ConfigError(f"{what}: negative probability")
    total = float(row.sum())
    if abs(total - 1.0) > _ROW_TOL:
        raise ConfigError(f"{what}: row sums to {total!r}, not 1 within {_ROW_TOL}")
    return row / total


def parse_model_config(text: str) -> ChannelModel:
    """Parse a flat key-value model file (see module comment for the keys)."""
    entries = _parse_lines(text)
    if "preset" in entries:
        extra = set(entries) - {"preset"}
        if extra:
            raise ConfigError(f"preset line cannot mix with explicit keys {sorted(extra)}")
        return _parse_preset(entries["preset"])

    alphabets = {}
    for ax in ("x", "v", "y", "z"):
        key = f"alphabet.{ax}"
        if key not in entries:
            raise ConfigError(f"missing key {key!r}")
        labels = tuple(s.strip() for s in entries[key].split(",") if s.strip())
        if not labels:
            raise ConfigError(f"{key}: empty alphabet")
        alphabets[ax] = labels

    xs, vs, ys, zs = (alphabets[a] for a in ("x", "v", "y", "z"))
    pv = _row(entries, [f"pv.{v}" for v in vs], "pv")
    k1 = np.empty((len(xs), len(vs), len(ys)))
    for i, x in enumerate(xs):
        for j, v in enumerate(vs):
            k1[i, j] = _row(entries, [f"q1.{y}|{x},{v}" for y in ys], f"q1 row ({x},{v})")
    k2 = np.empty((len(ys), len(zs)))
    for i, y in enumerate(ys):
        k2[i] = _row(entries, [f"q2.{z}|{y}" for z in zs], f"q2 row ({y})")

    known = {"preset"} | {f"alphabet.{a}" for a in "xvyz"}
    known |= {f"pv.{v}" for v in vs}
    known |= {f"q1.{y}|{x},{v}" for x in xs for v in vs for y in ys}
    known |= {f"q2.{z}|{y}" for y in ys for z in zs}
    stray = set(entries) - known
    if stray:
        raise ConfigError(f"unknown keys {sorted(stray)}")

    q1 = CondPmf((("X", xs), ("V", vs)), (("Y", ys),), k1)
    q2 = CondPmf((("Y", ys),), (("Z", zs),), k2)
    return ChannelModel(q1, q2, FinitePmf(vs, pv))


def load_model_config(path: str) -> ChannelModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read model file {path!r}: {err}") from None
    return parse_model_config(text)
