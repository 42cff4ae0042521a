"""Command-line surface: run, sweep, stability, ergodicity, report.

Outputs are plot-ready CSV/JSON rather than rendered figures. Numeric values
are written as decimal text at 9 significant digits, which round-trips the
metric series losslessly; ``run`` with identical flags produces byte-identical
files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import economics
from .config_io import ConfigError, PRESET_NAMES, load_config
from .core import (
    RNG_ALGORITHM,
    Echelon,
    RngStream,
    ScenarioConfig,
    consumer,
    distributor,
    supplier,
)
from .engine import EVALUATION_ORDER, run_simulation
from .metrics import (
    MetricsSeries,
    PeriodRecord,
    estimate_sigma_c,
    influence_report,
    survival_curve,
    temporal_averages,
)
from .netdyn import (
    FrozenInstance,
    LologParams,
    TinyNetSpec,
    build_transition_matrix,
    edge_count,
    find_stable_configuration,
    is_stable,
    simulate_chain,
    stationary_distribution,
)

METRICS_COLUMNS = "period,mlsp,ncr,n_edges,n_nodes,mean_trust,mean_price,shock_type"


def _g(x: float) -> str:
    return format(float(x), ".9g")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _load_run_config(args) -> ScenarioConfig:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "shocks", None) == "off":
        overrides.append("shock_probability=0.0")
    source = args.config if getattr(args, "config", None) else args.preset
    return load_config(source, overrides)


# -- run ---------------------------------------------------------------------


def _metrics_csv(series: MetricsSeries) -> str:
    lines = [
        f"# evaluation_order = {EVALUATION_ORDER}",
        f"# rng_algorithm = {RNG_ALGORITHM}",
        METRICS_COLUMNS,
    ]
    for r in series.records:
        lines.append(
            f"{r.period},{_g(r.mlsp)},{_g(r.ncr)},{r.n_edges},{r.n_nodes},"
            f"{_g(r.mean_trust)},{_g(r.mean_price)},{r.shock_type}"
        )
    return "\n".join(lines) + "\n"


def _edges_csv(edges) -> str:
    lines = ["src_echelon,src_idx,dst_echelon,dst_idx"]
    for a, b in sorted(edges):
        lines.append(f"{a.echelon.value},{a.index},{b.echelon.value},{b.index}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    cfg = _load_run_config(args)
    result = run_simulation(cfg)
    out = Path(args.out)
    _write(out / "metrics.csv", _metrics_csv(result.metrics))
    _write(out / "edges.csv", _edges_csv(result.final_network.edges()))
    ranking = influence_report(
        result.final_network,
        result.final_beliefs,
        lambda link: result.final_link_profit.get(link, 0.0),
    )
    lines = ["echelon,index,influence"]
    lines += [f"{a.echelon.value},{a.index},{_g(score)}" for a, score in ranking]
    _write(out / "influence.csv", "\n".join(lines) + "\n")
    summary = {
        "preset": args.config if args.config else args.preset,
        "seed": cfg.seed,
        "mean_mlsp": float(result.metrics.mean_mlsp),
        "mean_ncr": float(result.metrics.mean_ncr),
        "shock_count": len(result.shock_log),
    }
    _write(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    print(
        f"wrote {out}/metrics.csv ({len(result.metrics.records)} rows), "
        f"edges.csv, influence.csv, summary.json"
    )
    return 0


# -- sweep -------------------------------------------------------------------


def cmd_sweep(args) -> int:
    cfg = _load_run_config(args)
    if args.steps < 2:
        raise ValueError("--steps must be >= 2")
    grid = np.linspace(args.sigma_min, args.sigma_max, args.steps)
    curve = survival_curve(cfg, grid, args.reps, common_seed=cfg.seed, n_jobs=1)
    s_star = (
        args.s_star
        if args.s_star is not None
        else 0.5 * (float(curve.s_fit.max()) + float(curve.s_fit.min()))
    )
    sigma_c = estimate_sigma_c(curve, s_star)
    out = Path(args.out)
    lines = ["sigma,s_raw,stderr,s_fit"]
    for s, r, e, f in zip(curve.sigmas, curve.s_raw, curve.stderr, curve.s_fit):
        lines.append(f"{_g(s)},{_g(r)},{_g(e)},{_g(f)}")
    _write(out / "curve.csv", "\n".join(lines) + "\n")
    threshold = {
        "s_star": s_star,
        "sigma_c": None if sigma_c is None else float(sigma_c),
    }
    _write(out / "threshold.json", json.dumps(threshold, indent=2) + "\n")
    print(f"wrote {out}/curve.csv ({args.steps} rows), threshold.json")
    print(f"s_star={_g(s_star)} sigma_c=" + ("null" if sigma_c is None else _g(sigma_c)))
    return 0


# -- stability ---------------------------------------------------------------


def frozen_snapshot(cfg: ScenarioConfig, seed: int) -> FrozenInstance:
    """Freeze one draw of prices into a deterministic stability instance.

    Profits are coupled through the configuration: a sourcing link is worth
    the distributor's per-consumer margin times its active consumer links; a
    consumer link is worth the surplus at the resale price of the cheapest
    currently-sourced supplier (nothing, while the distributor sources from
    no one).
    """
    rng = RngStream(seed).child("snapshot")
    sups = [supplier(i) for i in range(cfg.n_suppliers)]
    dists = [distributor(i) for i in range(cfg.n_distributors)]
    cons = [consumer(i) for i in range(cfg.n_consumers)]
    lo, hi = cfg.initial_price_range
    price = {s: float(rng.uniform(lo, hi)) for s in sups}
    demand = economics.DemandParams(cfg.demand_alpha, cfg.demand_beta)
    sd = [(s, d) for s in sups for d in dists]
    dc = [(d, c) for d in dists for c in cons]
    decider = {link: link[1] for link in sd + dc}

    def cheapest(d, edges):
        prices = [price[s] for (s, dd) in edges if dd == d and s in price]
        return min(prices) if prices else None

    def link_profit(link, edges):
        up, down = link
        if up.echelon is Echelon.SUPPLIER:
            n_cons = sum(1 for (dd, _) in edges if dd == down)
            _, surplus = economics.consumer_utility(demand, cfg.markup * price[up])
            margin = surplus / cfg.profit_scale
            return margin * n_cons - 0.05  # fixed sourcing overhead per link
        p = cheapest(up, edges)
        if p is None:
            return 0.0
        _, surplus = economics.consumer_utility(demand, cfg.markup * p)
        return surplus / cfg.profit_scale

    return FrozenInstance(tuple(sd + dc), decider, link_profit)


def cmd_stability(args) -> int:
    cfg = _load_run_config(args)
    instance = frozen_snapshot(cfg, cfg.seed)
    stable = find_stable_configuration(instance, cfg.epsilon, start=instance.candidates)
    verified = is_stable(instance, stable, cfg.epsilon)
    print(f"candidates: {len(instance.candidates)}")
    print(f"stable configuration: {len(stable)} links (verified: {verified})")
    for a, b in sorted(stable):
        print(f"  {a.echelon.value} {a.index} -> {b.echelon.value} {b.index}")
    return 0 if verified else 1


# -- ergodicity --------------------------------------------------------------


def cmd_ergodicity(args) -> int:
    rng = RngStream(args.seed)
    spec = TinyNetSpec.random(args.suppliers, args.distributors, rng.child("spec"))
    params = LologParams(args.theta_p, args.theta_t, args.theta_q)
    P = build_transition_matrix(spec, params, args.eta)
    pi = stationary_distribution(P)
    n_states = P.shape[0]
    print(f"states: {n_states} ({args.suppliers}x{args.distributors} candidate links)")
    print("stationary distribution:")
    for s in range(n_states):
        print(f"  state {s:>3} ({s:0{args.suppliers * args.distributors}b}): {_g(pi[s])}")
    values = np.array([edge_count(s) for s in range(n_states)])
    expectation = float(values @ pi)
    print(f"stationary mean edge count: {_g(expectation)}")
    for start in (0, n_states - 1):
        states = simulate_chain(P, args.t_sim, rng.child(f"sim{start}"), start)
        avg = float(values[states].mean())
        print(
            f"time average from state {start} (T={args.t_sim}): {_g(avg)}  "
            f"gap {_g(abs(avg - expectation))}"
        )
    if args.dump:
        out = Path(args.dump)
        lines = [",".join(_g(x) for x in row) for row in P]
        _write(out, "\n".join(lines) + "\n")
        print(f"wrote transition matrix to {out}")
    return 0


# -- report ------------------------------------------------------------------


def _parse_metrics_csv(text: str) -> MetricsSeries:
    series = MetricsSeries()
    rows = [l for l in text.splitlines() if l and not l.startswith("#")]
    if not rows or rows[0] != METRICS_COLUMNS:
        raise ValueError("metrics.csv header does not match the expected schema")
    for row in rows[1:]:
        p, m, n, ne, nn, mt, mp, st = row.split(",")
        series.records.append(
            PeriodRecord(int(p), float(m), float(n), int(ne), int(nn), float(mt), float(mp), st)
        )
    return series


def cmd_report(args) -> int:
    src = Path(args.indir)
    series = _parse_metrics_csv((src / "metrics.csv").read_text())
    mean_mlsp, mean_ncr = temporal_averages(series)
    print(f"periods: {len(series.records)}")
    print(f"mean MLSP: {_g(mean_mlsp)}")
    print(f"mean NCR: {_g(mean_ncr)}")
    influence_path = src / "influence.csv"
    if influence_path.exists():
        rows = influence_path.read_text().splitlines()[1:]
        parsed = []
        for row in rows:
            echelon, idx, score = row.split(",")
            parsed.append((echelon, int(idx), float(score)))
        parsed.sort(key=lambda t: (-t[2], t[0], t[1]))
        print("influence ranking:")
        for echelon, idx, score in parsed:
            print(f"  {echelon} {idx}: {_g(score)}")
    return 0


# -- dispatch ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscsim",
        description="Agent-based simulator of opportunistic supply chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p, with_out=True):
        p.add_argument("--preset", choices=PRESET_NAMES, default="fast_fashion")
        p.add_argument("--config", help="path to a config file (overrides --preset)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="config override, repeatable",
        )
        if with_out:
            p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="one simulation run, CSV/JSON outputs")
    add_config_flags(p_run)
    p_run.add_argument("--shocks", choices=("on", "off"), default="on")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="volatility sweep and survival threshold")
    add_config_flags(p_sweep)
    p_sweep.add_argument("--sigma-min", type=float, default=0.05)
    p_sweep.add_argument("--sigma-max", type=float, default=1.5)
    p_sweep.add_argument("--steps", type=int, default=15)
    p_sweep.add_argument("--reps", type=int, default=20)
    p_sweep.add_argument(
        "--s-star",
        type=float,
        default=None,
        help="survival threshold (default: fitted-curve midpoint)",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_stab = sub.add_parser("stability", help="improvement dynamics on a frozen snapshot")
    add_config_flags(p_stab, with_out=False)
    p_stab.set_defaults(func=cmd_stability)

    p_erg = sub.add_parser("ergodicity", help="exact chain analysis of a tiny instance")
    p_erg.add_argument("--suppliers", type=int, default=2)
    p_erg.add_argument("--distributors", type=int, default=2)
    p_erg.add_argument("--eta", type=float, default=0.05)
    p_erg.add_argument("--t-sim", type=int, default=100_000)
    p_erg.add_argument("--seed", type=int, default=0)
    p_erg.add_argument("--theta-p", type=float, default=2.0)
    p_erg.add_argument("--theta-t", type=float, default=0.3)
    p_erg.add_argument("--theta-q", type=float, default=0.15)
    p_erg.add_argument("--dump", help="write the transition matrix as CSV")
    p_erg.set_defaults(func=cmd_ergodicity)

    p_rep = sub.add_parser("report", help="recompute summaries from stored CSVs")
    p_rep.add_argument("--in", dest="indir", required=True)
    p_rep.set_defaults(func=cmd_report)

    return parser


def cli_dispatch(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
