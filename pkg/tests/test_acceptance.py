"""Acceptance gate: one test per release criterion, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines;
the first criterion searches sixteen capacity points at full budget and
dominates the runtime (a few minutes).
"""
import contextlib
import filecmp
import itertools
import math
import os
import time

import numpy as np
import pytest

from secbc.channels import (
    ChannelModel,
    SideInfoMode,
    binary_example_model,
    binary_secrecy_capacity_oracle,
)
from secbc.cli import main
from secbc.codec import CodeParams, build_codebook, key_from_feedback, one_time_pad_joint
from secbc.prob import (
    CondPmf,
    FinitePmf,
    JointPmf,
    binary_entropy,
    conditional_mutual_information,
    entropy,
    mutual_information,
    permute_axis,
)
from secbc.regions import AuxiliaryJoint, eval_bounds, extend_to_full_joint, state_cancelling_aux
from secbc.regions import secrecy_capacity
from secbc.sim import exact_equivocation, run_trials

B = ("0", "1")
MODEL = binary_example_model(0.1, 0.2)
MASTER_SEED = 20260816


@contextlib.contextmanager
def criterion(num, name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {num} {name}: FAIL")
        raise
    print(f"ACCEPTANCE {num} {name}: PASS")


def test_criterion_1_binary_example_capacity_reproduction():
    with criterion(1, "binary-example capacity reproduction"):
        for p, q in itertools.product((0.05, 0.1, 0.2, 0.3), (0.1, 0.2, 0.3, 0.4)):
            started = time.monotonic()
            found = secrecy_capacity(binary_example_model(p, q), "cf", 20000, MASTER_SEED)
            elapsed = time.monotonic() - started
            target = binary_secrecy_capacity_oracle(p, q)
            assert abs(found - target) <= 0.02, (p, q, found, target)
            assert elapsed <= 60.0, (p, q, elapsed)


def test_criterion_2_action_symbol_reductions():
    with criterion(2, "constant-action bound reductions"):
        rng = np.random.default_rng(MASTER_SEED)
        mode = SideInfoMode("noncausal", False)
        for _ in range(1000):
            p, q = rng.uniform(0.01, 0.49, size=2)
            m = binary_example_model(float(p), float(q))
            mass = rng.dirichlet(np.ones(16)).reshape(2, 2, 1, 2, 2)
            with_a = AuxiliaryJoint(
                JointPmf((("U", B), ("K", B), ("A", ("a0",)), ("X", B), ("V", B)), mass),
                mode,
            )
            without_a = AuxiliaryJoint(
                JointPmf((("U", B), ("K", B), ("X", B), ("V", B)), mass.reshape(2, 2, 2, 2)),
                mode,
            )
            full_a = extend_to_full_joint(with_a, m)
            full = extend_to_full_joint(without_a, m)
            outer = eval_bounds("T2", full_a)
            inner = eval_bounds("T1", full)
            assert abs(outer.r1_cap - inner.r1_cap) <= 1e-9
            assert abs(outer.re_cap - inner.re_cap) <= 1e-9
            assert abs(eval_bounds("T6", full_a).r1_cap - eval_bounds("T5", full).r1_cap) <= 1e-9


def test_criterion_3_feedback_gain_inequality():
    with criterion(3, "feedback gain bounded by H(Y|Z)"):
        rng = np.random.default_rng(3)
        mode = SideInfoMode("noncausal", False)
        for _ in range(1000):
            pv = rng.dirichlet(np.ones(2))
            m = ChannelModel(
                CondPmf((("X", B), ("V", B)), (("Y", B),), rng.dirichlet(np.ones(2), size=(2, 2))),
                CondPmf((("Y", B),), (("Z", B),), rng.dirichlet(np.ones(2), size=2)),
                FinitePmf(B, pv),
            )
            mass = rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2)
            mass = mass / mass.sum(axis=(0, 1, 2), keepdims=True) * pv.reshape(1, 1, 1, 2)
            full = extend_to_full_joint(
                AuxiliaryJoint(JointPmf((("U", B), ("K", B), ("X", B), ("V", B)), mass), mode),
                m,
            )
            gain = conditional_mutual_information(
                full, ("K",), ("Y",), ("U",)
            ) - conditional_mutual_information(full, ("K",), ("Z",), ("U",))
            yz = full.marginal(("Y", "Z"))
            hyz = entropy(yz) - entropy(yz.marginal(("Z",)))
            assert gain <= hyz + 1e-9


def test_criterion_4_one_time_pad_exactness():
    with criterion(4, "one-time pad leaks nothing"):
        skewed = {
            3: FinitePmf(("0", "1", "2"), (0.5, 0.3, 0.2)),
            5: FinitePmf(tuple(str(i) for i in range(5)), (0.4, 0.3, 0.15, 0.1, 0.05)),
        }
        for modulus in range(2, 9):
            for p_s in (None, skewed.get(modulus)):
                joint = one_time_pad_joint(modulus, p_s)
                assert mutual_information(joint, ("S",), ("C",)) <= 1e-12
                c_marginal = joint.marginal(("C",)).mass
                assert np.all(np.abs(c_marginal - 1.0 / modulus) <= 1e-12)


def test_criterion_5_equivocation_oracle_agreement():
    with criterion(5, "exact equivocation matches brute force"):
        scheme = SideInfoMode("causal", True)
        aux = state_cancelling_aux(MODEL, scheme)
        params = CodeParams(
            n_block=4, r0=0.0, r1=0.5, gamma=0.0, gamma1=0.0, eps_typ=0.35, seed=MASTER_SEED
        )
        cb = build_codebook(MODEL, aux, params)
        n, s_count = params.n_block, cb.counts.k_bins
        assert s_count == 4
        fast = exact_equivocation(cb, MODEL, params, scheme)

        # Brute force: walk every pair of first-channel output words outright,
        # rebuilding the (message, both eavesdropper words) law term by term.
        p_y_uk = np.einsum(
            "ukvx,xvy,v->uky", cb.x_kernel.kernel, MODEL.q1.kernel, MODEL.pv.mass
        )
        q2 = MODEL.q2.kernel
        u_word = cb.u_book[0, 0]
        k_first = cb.k_books[0, 0, 0, 0]

        def word_weight(k_word, y):
            return float(np.prod([p_y_uk[u_word[i], k_word[i], y[i]] for i in range(n)]))

        def z_law(y):
            row = q2[y[0]]
            for i in range(1, n):
                row = np.kron(row, q2[y[i]])
            return row

        table = np.zeros((s_count, 2**n, 2**n))
        for y1 in itertools.product(range(2), repeat=n):
            w1 = word_weight(k_first, y1)
            key = key_from_feedback(np.array(y1), s_count, y_size=2)
            z1 = z_law(y1)
            for s in range(s_count):
                k_word = cb.k_books[0, 0, (s + key) % s_count, 0]
                for y2 in itertools.product(range(2), repeat=n):
                    table[s] += (w1 * word_weight(k_word, y2) / s_count) * np.outer(
                        z1, z_law(y2)
                    )

        def h_bits(t):
            t = t[t > 0]
            return -float(np.sum(t * np.log2(t)))

        flat = table.reshape(s_count, -1)
        brute = (h_bits(flat.reshape(-1)) - h_bits(flat.sum(axis=0))) / n
        assert fast == pytest.approx(brute, abs=1e-9)
        floor = min(math.log2(s_count) / n, binary_entropy(0.2)) - 0.15
        assert fast >= floor


def test_criterion_6_error_probability_trend():
    with criterion(6, "longer blocks do not hurt error rates"):
        scheme = SideInfoMode("causal", True)
        aux = state_cancelling_aux(MODEL, scheme)
        r1 = 0.8 * (1.0 - binary_entropy(0.1))  # 20% inside the confidential cap
        pooled = {}
        for n_block in (8, 16):
            err1 = err2 = 0.0
            for k in range(10):
                params = CodeParams(
                    n_block=n_block, r0=0.0, r1=r1, gamma=0.0, gamma1=0.0,
                    eps_typ=0.125, seed=k,
                )
                report = run_trials(MODEL, aux, params, scheme, 100, 1000 + k)
                err1 += report.pe1 * report.trials
                err2 += report.pe2 * report.trials
            pe1, pe2 = err1 / 1000.0, err2 / 1000.0
            z95 = 1.959963984540054
            pooled[n_block] = (
                pe1, z95 * math.sqrt(pe1 * (1 - pe1) / 1000.0),
                pe2, z95 * math.sqrt(pe2 * (1 - pe2) / 1000.0),
            )
        short, long = pooled[8], pooled[16]
        assert long[0] <= short[0] + short[1] + long[1], pooled
        assert long[2] <= short[2] + short[3] + long[3], pooled


def test_criterion_7_information_measure_properties():
    with criterion(7, "information-measure property suite"):
        rng = np.random.default_rng(7)
        for _ in range(10000):
            na, nb, nc = (int(s) for s in rng.integers(2, 4, size=3))
            ax = lambda pre, n: (pre.upper(), tuple(f"{pre}{j}" for j in range(n)))
            joint = JointPmf(
                (ax("a", na), ax("b", nb), ax("c", nc)),
                rng.dirichlet(np.ones(na * nb * nc)).reshape(na, nb, nc),
            )
            whole = mutual_information(joint, ("A",), ("B", "C"))
            parts = mutual_information(joint, ("A",), ("B",)) + conditional_mutual_information(
                joint, ("A",), ("C",), ("B",)
            )
            assert abs(whole - parts) <= 1e-9  # chain rule
            assert conditional_mutual_information(joint, ("A",), ("C",), ("B",)) >= 0.0

            # Data processing on a fresh A -> B -> C chain.
            pa = rng.dirichlet(np.ones(na))
            t_ab = rng.dirichlet(np.ones(nb), size=na)
            t_bc = rng.dirichlet(np.ones(nc), size=nb)
            chain = JointPmf(
                (ax("a", na), ax("b", nb), ax("c", nc)),
                pa[:, None, None] * t_ab[:, :, None] * t_bc[None, :, :],
            )
            assert (
                mutual_information(chain, ("A",), ("C",))
                <= mutual_information(chain, ("A",), ("B",)) + 1e-9
            )

            # Relabeling an axis never moves any measure.
            perm = [f"b{j}" for j in range(nb)]
            rng.shuffle(perm)
            relabeled = permute_axis(joint, "B", perm)
            assert abs(
                mutual_information(relabeled, ("A",), ("B",))
                - mutual_information(joint, ("A",), ("B",))
            ) <= 1e-9


def test_criterion_8_cli_byte_determinism(tmp_path, capsys):
    with criterion(8, "CLI reruns are byte-identical"):
        preset = ["--preset", "binary_example", "--p", "0.1", "--q", "0.2"]
        stdout_per_run = []
        for run_dir in (tmp_path / "a", tmp_path / "b"):
            run_dir.mkdir()
            d = str(run_dir)
            chunks = []
            for argv in (
                ["region", *preset, "--theorem", "T7", "--budget", "300", "--seed", "11",
                 "--out", f"{d}/region.csv", "--aux-out", f"{d}/region_aux.json",
                 "--plot", f"{d}/region.png"],
                ["capacity", *preset, "--variant", "cf", "--budget", "300", "--seed", "11",
                 "--out", f"{d}/cap.txt", "--aux-out", f"{d}/cap_aux.json"],
                ["simulate", *preset, "--scheme", "cf", "--N", "8", "--blocks", "3",
                 "--trials", "500", "--seed", "7", "--out", f"{d}/sim.json",
                 "--csv", f"{d}/sim.csv", "--plot", f"{d}/sim.png"],
                ["example", "--p", "0.1", "--q", "0.2", "--budget", "150", "--seed", "3",
                 "--out", f"{d}/example.txt", "--plot", f"{d}/example.png"],
                ["plotdata", "--in", f"{d}/region.csv", "--out", f"{d}/cols.txt",
                 "--plot", f"{d}/cols.png"],
            ):
                assert main(argv) == 0, argv
                chunks.append(capsys.readouterr().out)
            stdout_per_run.append(chunks)
        assert stdout_per_run[0] == stdout_per_run[1]
        names = sorted(os.listdir(tmp_path / "a"))
        assert len(names) == 12
        for name in names:
            assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False), name
