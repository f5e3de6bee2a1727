"""Command-line front end: region scans, capacity search, coding trials.

Every job is fully determined by its arguments — randomized commands demand
an explicit ``--seed`` and rerunning any job with identical arguments
produces byte-identical outputs. All text outputs begin with a ``# key=value``
config echo; JSON outputs carry the same record in a ``config`` object, and
rendered figures embed it in their PNG metadata.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Sequence

from .channels import (
    ChannelModel,
    SideInfoMode,
    VARIANTS,
    binary_example_model,
    binary_secrecy_capacity_oracle,
    load_model_config,
)
from .codec import CodeParams
from .prob import JointPmf
from .regions import (
    THEOREMS,
    AuxiliaryJoint,
    ScanPoint,
    eval_bounds,
    extend_to_full_joint,
    region_scan,
    secrecy_capacity_search,
    state_cancelling_aux,
)
from .sim import SimReport, run_trials

__all__ = [
    "main",
    "REGION_CSV_HEADER",
    "SIM_CSV_HEADER",
    "format_config_echo",
    "parse_config_echo",
    "region_csv_text",
    "parse_region_csv",
    "sim_csv_text",
    "plotdata_text",
    "json_dumps",
]

REGION_CSV_HEADER = "theorem,r0,r1,re,clamped,seed,candidate_index"
SIM_CSV_HEADER = "scheme,N,trials,pe1,pe1_ci,pe2,pe2_ci,delta_exact,hyz"

_FIG_DPI = 144
_FIG_SOFTWARE = "secbc"

_WORKERS_ENV = "SECBC_WORKERS"


class CliError(ValueError):
    """Configuration problem surfaced to the user with exit code 2."""


# ---------------------------------------------------------------------------
# Formatting


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def format_config_echo(config: dict) -> str:
    """Sorted ``# key=value`` lines; the echo every text output starts with."""
    return "".join(f"# {k}={_fmt(v)}\n" for k, v in sorted(config.items()))


def parse_config_echo(text: str) -> dict:
    """Inverse of format_config_echo: the echo keys as strings."""
    out: dict[str, str] = {}
    for line in text.splitlines():
        if line.startswith("# ") and "=" in line:
            key, _, val = line[2:].partition("=")
            out[key.strip()] = val.strip()
    return out


def json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def region_csv_text(points: Sequence[ScanPoint], seed: int, config: dict) -> str:
    """Region frontier as CSV: config echo, header, one row per triple."""
    rows = sorted(
        points,
        key=lambda p: (p.triple.r0, p.triple.r1, p.triple.re, p.candidate_index),
    )
    lines = [format_config_echo(config), REGION_CSV_HEADER + "\n"]
    for p in rows:
        t = p.triple
        lines.append(
            f"{p.bounds.theorem},{_fmt(t.r0)},{_fmt(t.r1)},{_fmt(t.re)},"
            f"{1 if p.bounds.clamped else 0},{int(seed)},{p.candidate_index}\n"
        )
    return "".join(lines)


def parse_region_csv(text: str) -> tuple[dict, list[dict]]:
    """Parse a region CSV back into (config echo, data rows)."""
    config = parse_config_echo(text)
    rows: list[dict] = []
    header_seen = False
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        if not header_seen:
            if line.strip() != REGION_CSV_HEADER:
                raise CliError(
                    f"malformed region CSV: expected header {REGION_CSV_HEADER!r}, "
                    f"got {line.strip()!r}"
                )
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise CliError(f"malformed region CSV row: {line!r}")
        try:
            rows.append(
                {
                    "theorem": parts[0],
                    "r0": float(parts[1]),
                    "r1": float(parts[2]),
                    "re": float(parts[3]),
                    "clamped": int(parts[4]),
                    "seed": int(parts[5]),
                    "candidate_index": int(parts[6]),
                }
            )
        except ValueError as err:
            raise CliError(f"malformed region CSV row: {line!r} ({err})") from None
    if not header_seen:
        raise CliError("malformed region CSV: header line missing")
    return config, rows


def sim_csv_text(reports: Sequence[SimReport], config: dict) -> str:
    """SimReports as CSV rows under the documented header."""
    lines = [format_config_echo(config), SIM_CSV_HEADER + "\n"]
    for r in reports:
        delta = math.nan if r.delta_exact is None else r.delta_exact
        lines.append(
            f"{r.scheme},{r.n_block},{r.trials},{_fmt(r.pe1)},{_fmt(r.pe1_ci)},"
            f"{_fmt(r.pe2)},{_fmt(r.pe2_ci)},{_fmt(delta)},{_fmt(r.hyz)}\n"
        )
    return "".join(lines)


def plotdata_text(rows: Sequence[dict], config: dict) -> str:
    """Gnuplot-style columns: per fixed r0, sorted (r1, re) rows.

    Blocks are separated by blank lines and introduced by ``# r0 = <val>``;
    an empty frontier yields only the config echo.
    """
    groups: dict[float, list[tuple[float, float]]] = {}
    for row in rows:
        groups.setdefault(row["r0"], []).append((row["r1"], row["re"]))
    parts = [format_config_echo(config)]
    for r0 in sorted(groups):
        parts.append(f"# r0 = {_fmt(r0)}\n")
        for r1, re in sorted(groups[r0]):
            parts.append(f"{_fmt(r1)} {_fmt(re)}\n")
        parts.append("\n")
    return "".join(parts)


# ---------------------------------------------------------------------------
# Figures


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def _save_figure(fig, path: str, echo: str) -> None:
    fig.savefig(
        path,
        dpi=_FIG_DPI,
        format="png",
        metadata={"Software": _FIG_SOFTWARE, "Description": echo},
    )


def render_region_figure(rows: Sequence[dict], path: str, echo: str) -> None:
    """Scatter the (r1, re) frontier, one series per common-rate slice."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    groups: dict[float, list[tuple[float, float]]] = {}
    for row in rows:
        groups.setdefault(row["r0"], []).append((row["r1"], row["re"]))
    for r0 in sorted(groups):
        pts = sorted(groups[r0])
        ax.plot(
            [p[0] for p in pts],
            [p[1] for p in pts],
            marker="o",
            linestyle="-",
            label=f"R0 = {_fmt(r0)}",
        )
    ax.set_xlabel("confidential rate R1 (bits/symbol)")
    ax.set_ylabel("equivocation rate Re (bits/symbol)")
    ax.set_title("achievable-rate frontier")
    if groups:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save_figure(fig, path, echo)
    plt.close(fig)


def render_sim_figure(report: SimReport, path: str, echo: str) -> None:
    """Bar chart of the two error-rate estimates with confidence whiskers."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    labels = ["receiver 1", "receiver 2"]
    values = [report.pe1, report.pe2]
    errs = [
        0.0 if math.isnan(report.pe1_ci) else report.pe1_ci,
        0.0 if math.isnan(report.pe2_ci) else report.pe2_ci,
    ]
    ax.bar(labels, values, yerr=errs, capsize=6, color=["#4878d0", "#ee854a"])
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("estimated error probability")
    ax.set_title(f"scheme {report.scheme}, N={report.n_block}, {report.trials} trials")
    fig.tight_layout()
    _save_figure(fig, path, echo)
    plt.close(fig)


def render_example_figure(
    p: float, q: float, oracle: float, search: float | None, path: str, echo: str
) -> None:
    """Capacity-vs-q curve for the binary example, with this point marked."""
    plt = _pyplot()
    import numpy as np

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    qs = np.linspace(0.0, 0.5, 201)
    ax.plot(
        qs,
        [binary_secrecy_capacity_oracle(p, float(qq)) for qq in qs],
        label=f"closed form, flip probability p = {_fmt(p)}",
    )
    ax.plot([q], [oracle], marker="o", color="black", label="requested point")
    if search is not None:
        ax.plot([q], [search], marker="x", color="red", label="search result")
    ax.set_xlabel("eavesdropper channel crossover q")
    ax.set_ylabel("secrecy capacity (bits/symbol)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save_figure(fig, path, echo)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Model and auxiliary resolution


def _add_model_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--preset", choices=["binary_example"], help="built-in model family")
    sub.add_argument("--p", type=float, help="state-dependent flip probability (preset)")
    sub.add_argument("--q", type=float, help="eavesdropper crossover probability (preset)")
    sub.add_argument("--model", help="path to a key=value channel model file")


def _resolve_model(args) -> tuple[ChannelModel, dict]:
    if args.model is not None:
        if args.preset is not None or args.p is not None or args.q is not None:
            raise CliError("give either --model or --preset with --p/--q, not both")
        return load_model_config(args.model), {"model": args.model}
    if args.preset is None:
        raise CliError("a model is required: --preset binary_example --p P --q Q, or --model FILE")
    if args.p is None or args.q is None:
        raise CliError("--preset binary_example needs both --p and --q")
    return (
        binary_example_model(args.p, args.q),
        {"preset": args.preset, "p": args.p, "q": args.q},
    )


def _load_aux(path: str, scheme: SideInfoMode) -> AuxiliaryJoint:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if "auxiliary" in payload:
        payload = payload["auxiliary"]
    try:
        mode = SideInfoMode(payload["mode"]["timing"], bool(payload["mode"]["feedback"]))
        joint = JointPmf.from_dict(payload["joint"])
    except (KeyError, TypeError) as err:
        raise CliError(f"auxiliary file {path!r} malformed: {err}") from None
    if mode != scheme:
        raise CliError(
            f"auxiliary file {path!r} was built for scheme {mode.variant!r}, "
            f"not {scheme.variant!r}"
        )
    return AuxiliaryJoint(joint, mode)


def _aux_json(aux: AuxiliaryJoint) -> dict:
    return {
        "mode": {"timing": aux.mode.timing, "feedback": aux.mode.feedback},
        "joint": aux.joint.to_dict(),
    }


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _check_workers_env() -> None:
    raw = os.environ.get(_WORKERS_ENV)
    if raw is None:
        return
    try:
        workers = int(raw)
    except ValueError:
        raise CliError(f"{_WORKERS_ENV}={raw!r} is not an integer") from None
    if workers < 1:
        raise CliError(f"{_WORKERS_ENV}={raw!r} must be >= 1")
    # Execution is sequential with per-trial derived seeds, so any accepted
    # worker count yields bitwise-identical results by construction.


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_region(args) -> int:
    m, model_cfg = _resolve_model(args)
    points = region_scan(
        m,
        args.theorem,
        args.budget,
        args.seed,
        u_size=args.u_size,
        k_size=args.k_size,
        a_size=args.a_size,
        refine_evals=args.refine_evals,
    )
    config = {
        "command": "region",
        **model_cfg,
        "theorem": args.theorem,
        "budget": args.budget,
        "seed": args.seed,
        "refine_evals": args.refine_evals,
    }
    for name in ("u_size", "k_size", "a_size"):
        if getattr(args, name) is not None:
            config[name] = getattr(args, name)
    text = region_csv_text(points, args.seed, config)
    _write_text(args.out, text)
    if args.aux_out is not None:
        payload = {
            "config": config,
            "points": [
                {
                    "triple": {"r0": p.triple.r0, "r1": p.triple.r1, "re": p.triple.re},
                    "candidate_index": p.candidate_index,
                    "clamped": p.bounds.clamped,
                    "auxiliary": _aux_json(p.aux),
                }
                for p in sorted(points, key=lambda p: p.candidate_index)
            ],
        }
        _write_text(args.aux_out, json_dumps(payload))
    if args.plot is not None:
        _, rows = parse_region_csv(text)
        render_region_figure(rows, args.plot, format_config_echo(config))
    return 0


def _cmd_capacity(args) -> int:
    m, model_cfg = _resolve_model(args)
    value, aux = secrecy_capacity_search(
        m,
        args.variant,
        args.budget,
        args.seed,
        u_size=args.u_size,
        k_size=args.k_size,
        refine_evals=args.refine_evals,
    )
    config = {
        "command": "capacity",
        **model_cfg,
        "variant": args.variant,
        "budget": args.budget,
        "seed": args.seed,
        "refine_evals": args.refine_evals,
    }
    for name in ("u_size", "k_size"):
        if getattr(args, name) is not None:
            config[name] = getattr(args, name)
    text = format_config_echo(config) + f"capacity {_fmt(value)}\n"
    _write_text(args.out, text)
    if args.out is not None:
        sys.stdout.write(text)
    if args.aux_out is not None:
        payload = {"config": config, "capacity": value, "auxiliary": _aux_json(aux)}
        _write_text(args.aux_out, json_dumps(payload))
    return 0


def _cmd_simulate(args) -> int:
    m, model_cfg = _resolve_model(args)
    scheme = SideInfoMode.from_variant(args.scheme)
    if args.aux is not None:
        aux = _load_aux(args.aux, scheme)
    else:
        aux = state_cancelling_aux(m, scheme)
    full = extend_to_full_joint(aux, m)
    bounds = eval_bounds(scheme.theorem_family[0], full)
    r0 = args.r0 if args.r0 is not None else 0.8 * bounds.r0_cap
    r1 = args.r1 if args.r1 is not None else 0.8 * bounds.r1_cap
    params = CodeParams(
        n_block=args.N,
        r0=r0,
        r1=r1,
        gamma=args.gamma,
        gamma1=args.gamma1,
        eps_typ=args.eps_typ,
        seed=args.seed,
    )
    report = run_trials(m, aux, params, scheme, args.trials, args.seed, n_blocks=args.blocks)
    config = {
        "command": "simulate",
        **model_cfg,
        **{k: v for k, v in report.config.items()},
        "aux": args.aux if args.aux is not None else "state_cancelling",
        "seed": args.seed,
    }
    payload = report.to_json_dict()
    payload["config"] = config
    text = json_dumps(payload)
    sys.stdout.write(text)
    if args.out is not None:
        _write_text(args.out, text)
    if args.csv is not None:
        _write_text(args.csv, sim_csv_text([report], config))
    if args.plot is not None:
        render_sim_figure(report, args.plot, format_config_echo(config))
    return 0


def _cmd_example(args) -> int:
    if not 0.0 <= args.p <= 0.5 or not 0.0 <= args.q <= 0.5:
        raise CliError("--p and --q must lie in [0, 0.5] (crossover probabilities)")
    oracle = binary_secrecy_capacity_oracle(args.p, args.q)
    config = {"command": "example", "p": args.p, "q": args.q}
    search = None
    if args.budget is not None:
        if args.seed is None:
            raise CliError("--budget needs an explicit --seed for the search")
        config.update({"budget": args.budget, "seed": args.seed})
        m = binary_example_model(args.p, args.q)
        search, _ = secrecy_capacity_search(m, "cf", args.budget, args.seed)
    lines = [format_config_echo(config), f"oracle_capacity {_fmt(oracle)}\n"]
    if search is not None:
        lines.append(f"search_capacity {_fmt(search)}\n")
        lines.append(f"abs_error {_fmt(abs(search - oracle))}\n")
    text = "".join(lines)
    sys.stdout.write(text)
    if args.out is not None:
        _write_text(args.out, text)
    if args.plot is not None:
        render_example_figure(
            args.p, args.q, oracle, search, args.plot, format_config_echo(config)
        )
    return 0


def _cmd_plotdata(args) -> int:
    with open(getattr(args, "in"), "r", encoding="utf-8") as fh:
        text = fh.read()
    config, rows = parse_region_csv(text)
    config = dict(config)
    config["command"] = "plotdata"
    out = plotdata_text(rows, config)
    _write_text(args.out, out)
    if args.plot is not None:
        render_region_figure(rows, args.plot, format_config_echo(config))
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secbc",
        description=(
            "Rate regions, secrecy capacity, and coding simulations for a "
            "degraded broadcast channel with encoder side information."
        ),
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_region = subs.add_parser("region", help="scan an achievable-rate frontier to CSV")
    _add_model_args(p_region)
    p_region.add_argument("--theorem", choices=list(THEOREMS), required=True)
    p_region.add_argument("--budget", type=int, default=2000, help="candidate count")
    p_region.add_argument("--seed", type=int, required=True)
    p_region.add_argument("--u-size", type=int, dest="u_size")
    p_region.add_argument("--k-size", type=int, dest="k_size")
    p_region.add_argument("--a-size", type=int, dest="a_size")
    p_region.add_argument("--refine-evals", type=int, dest="refine_evals", default=400)
    p_region.add_argument("--out", help="CSV path (default: stdout)")
    p_region.add_argument("--aux-out", dest="aux_out", help="JSON path for frontier auxiliaries")
    p_region.add_argument("--plot", help="PNG path for the frontier figure")
    p_region.set_defaults(func=_cmd_region)

    p_cap = subs.add_parser("capacity", help="search the secrecy capacity of a scheme")
    _add_model_args(p_cap)
    p_cap.add_argument("--variant", choices=list(VARIANTS), required=True)
    p_cap.add_argument("--budget", type=int, default=2000)
    p_cap.add_argument("--seed", type=int, required=True)
    p_cap.add_argument("--u-size", type=int, dest="u_size")
    p_cap.add_argument("--k-size", type=int, dest="k_size")
    p_cap.add_argument("--refine-evals", type=int, dest="refine_evals", default=320)
    p_cap.add_argument("--out", help="text output path (also echoed to stdout)")
    p_cap.add_argument("--aux-out", dest="aux_out", help="JSON path for the best auxiliary")
    p_cap.set_defaults(func=_cmd_capacity)

    p_sim = subs.add_parser("simulate", help="Monte-Carlo coding trials for one scheme")
    _add_model_args(p_sim)
    p_sim.add_argument("--scheme", choices=list(VARIANTS), required=True)
    p_sim.add_argument("--N", type=int, default=8, help="blocklength per block")
    p_sim.add_argument("--blocks", type=int, help="blocks per feedback session (default 2)")
    p_sim.add_argument("--trials", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--r0", type=float, help="common rate (default 0.8 x cap)")
    p_sim.add_argument("--r1", type=float, help="confidential rate (default 0.8 x cap)")
    p_sim.add_argument("--gamma", type=float, default=0.05, help="u-bin oversize exponent")
    p_sim.add_argument("--gamma1", type=float, default=0.05, help="k-bin oversize exponent")
    p_sim.add_argument("--eps-typ", type=float, dest="eps_typ", default=0.2)
    p_sim.add_argument("--aux", help="JSON auxiliary joint (default: state-cancelling)")
    p_sim.add_argument("--out", help="JSON report path (stdout always gets the JSON)")
    p_sim.add_argument("--csv", help="CSV summary path")
    p_sim.add_argument("--plot", help="PNG path for the error-rate figure")
    p_sim.set_defaults(func=_cmd_simulate)

    p_ex = subs.add_parser("example", help="closed-form binary-example capacity")
    p_ex.add_argument("--p", type=float, required=True)
    p_ex.add_argument("--q", type=float, required=True)
    p_ex.add_argument("--budget", type=int, help="also run the search with this budget")
    p_ex.add_argument("--seed", type=int, help="seed for the optional search")
    p_ex.add_argument("--out", help="text output path (also echoed to stdout)")
    p_ex.add_argument("--plot", help="PNG path for the capacity curve")
    p_ex.set_defaults(func=_cmd_example)

    p_pd = subs.add_parser("plotdata", help="region CSV -> gnuplot-style columns")
    p_pd.add_argument("--in", required=True, help="region CSV produced by the region command")
    p_pd.add_argument("--out", help="output path (default: stdout)")
    p_pd.add_argument("--plot", help="PNG path for the frontier figure")
    p_pd.set_defaults(func=_cmd_plotdata)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if exc.code is not None else 0
        return code if isinstance(code, int) else 2
    try:
        _check_workers_env()
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
