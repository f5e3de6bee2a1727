"""Tests for the two-stage channel models and the binary worked instance."""
import numpy as np
import pytest

from secbc.channels import (
    ChannelModel,
    ConfigError,
    SideInfoMode,
    VARIANTS,
    binary_example_model,
    binary_secrecy_capacity_oracle,
    cascade,
    load_model_config,
    parse_model_config,
)
from secbc.prob import (
    CondPmf,
    DistributionError,
    FinitePmf,
    JointPmf,
    binary_entropy,
    is_markov_chain,
)

B = ("0", "1")


def random_model(rng):
    """A random binary-alphabet model with Dirichlet rows."""
    k1 = np.stack(
        [[rng.dirichlet(np.ones(2)) for _ in range(2)] for _ in range(2)]
    )
    k2 = np.stack([rng.dirichlet(np.ones(2)) for _ in range(2)])
    q1 = CondPmf((("X", B), ("V", B)), (("Y", B),), k1)
    q2 = CondPmf((("Y", B),), (("Z", B),), k2)
    return ChannelModel(q1, q2, FinitePmf(B, rng.dirichlet(np.ones(2))))


# ---------------------------------------------------------------------------
# SideInfoMode


def test_side_info_mode_variant_roundtrip():
    expect = {
        "n": ("noncausal", False),
        "c": ("causal", False),
        "nf": ("noncausal", True),
        "cf": ("causal", True),
    }
    assert set(VARIANTS) == set(expect)
    for variant, (timing, feedback) in expect.items():
        mode = SideInfoMode.from_variant(variant)
        assert (mode.timing, mode.feedback) == (timing, feedback)
        assert mode.variant == variant
        assert mode.causal == (timing == "causal")


def test_side_info_mode_theorem_families():
    assert SideInfoMode.from_variant("n").theorem_family == ("T1", "T2")
    assert SideInfoMode.from_variant("c").theorem_family == ("T3", "T4")
    assert SideInfoMode.from_variant("nf").theorem_family == ("T5", "T6")
    assert SideInfoMode.from_variant("cf").theorem_family == ("T7",)


def test_side_info_mode_rejects_unknown():
    with pytest.raises(ConfigError):
        SideInfoMode.from_variant("x")
    with pytest.raises(DistributionError):
        SideInfoMode("sideways", False)


# ---------------------------------------------------------------------------
# Binary example model


def test_binary_example_kernel_entries():
    m = binary_example_model(0.1, 0.2)
    # First channel: flip probability p when v=0, 1-p when v=1.
    np.testing.assert_allclose(m.q1.kernel[0, 0], [0.9, 0.1], atol=1e-15)
    np.testing.assert_allclose(m.q1.kernel[1, 0], [0.1, 0.9], atol=1e-15)
    np.testing.assert_allclose(m.q1.kernel[0, 1], [0.1, 0.9], atol=1e-15)
    np.testing.assert_allclose(m.q1.kernel[1, 1], [0.9, 0.1], atol=1e-15)
    # Second channel: symmetric crossover q.
    np.testing.assert_allclose(m.q2.kernel, [[0.8, 0.2], [0.2, 0.8]], atol=1e-15)
    np.testing.assert_allclose(m.pv.mass, [0.5, 0.5], atol=1e-15)
    assert m.x_labels == m.v_labels == m.y_labels == m.z_labels == B


def test_binary_example_identity_plane_at_p_zero():
    m = binary_example_model(0.0, 0.2)
    np.testing.assert_allclose(m.q1.kernel[:, 0, :], np.eye(2), atol=1e-15)
    np.testing.assert_allclose(m.q1.kernel[:, 1, :], np.eye(2)[::-1], atol=1e-15)


def test_binary_example_uninformative_at_one_half():
    m = binary_example_model(0.5, 0.2)
    np.testing.assert_allclose(m.q1.kernel, np.full((2, 2, 2), 0.5), atol=1e-15)


def test_binary_example_rejects_out_of_range():
    for p, q in ((-0.1, 0.2), (1.5, 0.2), (0.1, -1.0), (0.1, 2.0)):
        with pytest.raises(DistributionError):
            binary_example_model(p, q)


def test_v_relabel_matches_flipped_p():
    # Swapping the state labels turns the p instance into the (1-p) instance,
    # so the state-averaged end-to-end statistics agree.
    m1 = binary_example_model(0.3, 0.2)
    m2 = binary_example_model(0.7, 0.2)
    np.testing.assert_allclose(
        m1.q1.kernel[:, ::-1, :], m2.q1.kernel, atol=1e-15
    )
    q3a, q3b = cascade(m1).kernel, cascade(m2).kernel
    xz_a = (q3a * m1.pv.mass[None, :, None]).sum(axis=1)
    xz_b = (q3b * m2.pv.mass[None, :, None]).sum(axis=1)
    np.testing.assert_allclose(xz_a, xz_b, atol=1e-12)


# ---------------------------------------------------------------------------
# Cascade


def test_cascade_with_identity_second_channel():
    rng = np.random.default_rng(3)
    m = random_model(rng)
    ident = CondPmf((("Y", B),), (("Z", B),), np.eye(2))
    m_id = ChannelModel(m.q1, ident, m.pv)
    np.testing.assert_allclose(cascade(m_id).kernel, m.q1.kernel, atol=1e-15)


def test_cascade_of_deterministic_first_stage():
    # y = x regardless of v, then a symmetric crossover: every conditioning
    # cell of the cascade is a crossover row for its x.
    k1 = np.zeros((2, 2, 2))
    k1[0, :, 0] = 1.0
    k1[1, :, 1] = 1.0
    q1 = CondPmf((("X", B), ("V", B)), (("Y", B),), k1)
    q = 0.2
    q2 = CondPmf((("Y", B),), (("Z", B),), np.array([[1 - q, q], [q, 1 - q]]))
    m = ChannelModel(q1, q2, FinitePmf.uniform(B))
    q3 = cascade(m).kernel
    for v in range(2):
        np.testing.assert_allclose(q3[0, v], [0.8, 0.2], atol=1e-15)
        np.testing.assert_allclose(q3[1, v], [0.2, 0.8], atol=1e-15)


def test_cascade_matches_direct_summation():
    m = binary_example_model(0.1, 0.2)
    got = cascade(m).kernel
    want = np.zeros((2, 2, 2))
    for x in range(2):
        for v in range(2):
            for z in range(2):
                want[x, v, z] = sum(
                    m.q2.kernel[y, z] * m.q1.kernel[x, v, y] for y in range(2)
                )
    np.testing.assert_allclose(got, want, atol=1e-15)
    np.testing.assert_allclose(got.sum(axis=-1), np.ones((2, 2)), atol=1e-12)


def test_channel_model_rejects_alphabet_mismatch():
    m = binary_example_model(0.1, 0.2)
    other = CondPmf((("Y", ("a", "b")),), (("Z", B),), np.eye(2))
    with pytest.raises(DistributionError):
        ChannelModel(m.q1, other, m.pv)
    bad_pv = FinitePmf(("p", "q"), np.array([0.5, 0.5]))
    with pytest.raises(DistributionError):
        ChannelModel(m.q1, m.q2, bad_pv)


def test_model_chain_markov_property():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = random_model(rng)
        p_xv = rng.dirichlet(np.ones(4)).reshape(2, 2)
        mass = (
            p_xv[:, :, None, None]
            * m.q1.kernel[:, :, :, None]
            * m.q2.kernel[None, None, :, :]
        )
        j = JointPmf((("X", B), ("V", B), ("Y", B), ("Z", B)), mass)
        assert is_markov_chain(j, (("X", "V"), ("Y",), ("Z",)), 1e-9)


# ---------------------------------------------------------------------------
# Closed-form capacity oracle


def test_oracle_trivial_boundaries():
    for q in (0.0, 0.1, 0.4):
        assert binary_secrecy_capacity_oracle(0.5, q) == pytest.approx(0.0, abs=1e-15)
    for p in (0.0, 0.1, 0.4):
        assert binary_secrecy_capacity_oracle(p, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_oracle_matches_closed_form():
    got = binary_secrecy_capacity_oracle(0.1, 0.2)
    assert got == pytest.approx(0.5310044064107188, abs=1e-15)
    assert got == pytest.approx(
        min(1.0 - binary_entropy(0.1), binary_entropy(0.2)), abs=1e-15
    )
    # Small q: the eavesdropper-side term is the binding one.
    assert binary_secrecy_capacity_oracle(0.1, 0.05) == pytest.approx(
        binary_entropy(0.05), abs=1e-15
    )


def test_oracle_symmetries():
    for p in (0.05, 0.2, 0.35):
        for q in (0.1, 0.25, 0.45):
            base = binary_secrecy_capacity_oracle(p, q)
            assert binary_secrecy_capacity_oracle(1 - p, q) == pytest.approx(
                base, abs=1e-15
            )
            assert binary_secrecy_capacity_oracle(p, 1 - q) == pytest.approx(
                base, abs=1e-15
            )


def test_oracle_rejects_out_of_range():
    with pytest.raises(DistributionError):
        binary_secrecy_capacity_oracle(-0.1, 0.2)
    with pytest.raises(DistributionError):
        binary_secrecy_capacity_oracle(0.1, 1.2)


# ---------------------------------------------------------------------------
# Model config files


EXPLICIT_CONFIG = """\
# binary instance written out key by key
alphabet.x = 0,1
alphabet.v = 0,1
alphabet.y = 0,1
alphabet.z = 0,1

pv.0 = 0.5
pv.1 = 0.5
q1.0|0,0 = 0.9
q1.1|0,0 = 0.1
q1.0|1,0 = 0.1
q1.1|1,0 = 0.9
q1.0|0,1 = 0.1
q1.1|0,1 = 0.9
q1.0|1,1 = 0.9
q1.1|1,1 = 0.1
q2.0|0 = 0.8
q2.1|0 = 0.2
q2.0|1 = 0.2
q2.1|1 = 0.8
"""


def test_parse_model_config_explicit_keys():
    m = parse_model_config(EXPLICIT_CONFIG)
    want = binary_example_model(0.1, 0.2)
    np.testing.assert_allclose(m.q1.kernel, want.q1.kernel, atol=1e-12)
    np.testing.assert_allclose(m.q2.kernel, want.q2.kernel, atol=1e-12)
    np.testing.assert_allclose(m.pv.mass, want.pv.mass, atol=1e-12)


def test_parse_model_config_preset_shorthand():
    m = parse_model_config("preset = binary_example p=0.1 q=0.2\n")
    want = binary_example_model(0.1, 0.2)
    np.testing.assert_allclose(m.q1.kernel, want.q1.kernel, atol=1e-15)
    np.testing.assert_allclose(m.q2.kernel, want.q2.kernel, atol=1e-15)


def test_parse_model_config_renormalizes_tiny_row_slack():
    text = EXPLICIT_CONFIG.replace("pv.0 = 0.5", "pv.0 = 0.500000002")
    with pytest.raises(ConfigError):
        parse_model_config(text)
    text = EXPLICIT_CONFIG.replace("pv.0 = 0.5", "pv.0 = 0.5000000002")
    m = parse_model_config(text)
    assert abs(float(m.pv.mass.sum()) - 1.0) <= 1e-12


def test_parse_model_config_rejects_malformed_inputs():
    with pytest.raises(ConfigError):
        parse_model_config("alphabet.x = 0,1\nalphabet.x = 0,1\n")  # duplicate
    with pytest.raises(ConfigError):
        parse_model_config(EXPLICIT_CONFIG.replace("q2.0|1 = 0.2\n", ""))  # missing
    with pytest.raises(ConfigError):
        parse_model_config(EXPLICIT_CONFIG + "q9.weird = 1\n")  # stray key
    with pytest.raises(ConfigError):
        parse_model_config("preset = binary_example p=0.1 q=0.2\npv.0 = 1\n")  # mixed
    with pytest.raises(ConfigError):
        parse_model_config("preset = ternary_thing a=1\n")  # unknown preset
    with pytest.raises(ConfigError):
        parse_model_config("preset = binary_example p=0.1\n")  # missing q
    with pytest.raises(ConfigError):
        parse_model_config(EXPLICIT_CONFIG.replace("0.9", "zonk"))  # not a number
    with pytest.raises(ConfigError):
        parse_model_config("just some words\n")  # no key=value shape


def test_load_model_config_reads_file(tmp_path):
    path = tmp_path / "model.cfg"
    path.write_text("preset = binary_example p=0.3 q=0.1\n", encoding="utf-8")
    m = load_model_config(str(path))
    np.testing.assert_allclose(
        m.q1.kernel, binary_example_model(0.3, 0.1).q1.kernel, atol=1e-15
    )
    with pytest.raises(ConfigError):
        load_model_config(str(tmp_path / "absent.cfg"))
