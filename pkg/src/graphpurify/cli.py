"""Command-line surface emitting reproducible CSV artifacts.

Every run writes RFC-4180-style CSV (dot decimals, LF endings) with the
full resolved configuration embedded as header comments, so re-running a
command with the same flags reproduces the file byte for byte.  Exit codes:
0 success, 1 protocol failure (unpurifiable input), 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import analytic, flags, lattice, scans
from .graphs import GraphFormatError, TwoColorableGraph, build_graph
from .protocol import (
    P1,
    P2,
    PurificationFailure,
    Strategy,
    hashing_yield,
    parity_readout,
    run_sequence,
)
from .states import LabelDistribution, diagnostics, make_state

OUTDIR_ENV = "GRAPHPURIFY_OUTDIR"


class UsageError(ValueError):
    pass


def _parse_range(text: str) -> list[int]:
    """Integer range 'a..b' (inclusive) or a single integer."""
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def _parse_grid(text: str) -> list[float]:
    """Float grid 'start:stop:step' (stop inclusive up to rounding) or comma list."""
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return [start + i * step for i in range(count)]
    return [float(t) for t in text.split(",")]


def _parse_state(graph: TwoColorableGraph, text: str) -> LabelDistribution:
    parts = text.split(":")
    name = parts[0]
    param = float(parts[1]) if len(parts) > 1 else None
    alias = {"werner": "werner", "channel": "channel_noise", "binary": "binary_family", "pure": "pure"}
    if name not in alias:
        raise UsageError(f"unknown state family {text!r} (pure, werner:x, channel:q, binary:F)")
    return make_state(graph, alias[name], param)


def _parse_strategy(text: str) -> Strategy:
    parts = text.split(":")
    if parts[0] == "alternate":
        start = parts[1] if len(parts) > 1 else P1
        if start not in (P1, P2):
            raise UsageError(f"alternate start must be P1 or P2, got {start!r}")
        return Strategy.alternate(start)
    if parts[0] == "adaptive":
        return Strategy.adaptive()
    if parts[0] == "fixed":
        if len(parts) < 2:
            raise UsageError("fixed strategy needs a token list, e.g. fixed:P1,P1,P2")
        seq = tuple(parts[1].split(","))
        if any(tok not in (P1, P2) for tok in seq):
            raise UsageError(f"fixed sequence tokens must be P1/P2, got {parts[1]!r}")
        return Strategy.fixed(seq)
    raise UsageError(f"unknown strategy {text!r}")


def _out_path(args: argparse.Namespace, default_name: str) -> str:
    if args.out:
        return args.out
    outdir = os.environ.get(OUTDIR_ENV, ".")
    return os.path.join(outdir, default_name)


def _write_csv(
    path: str,
    command: str,
    config: dict,
    header: Sequence[str],
    rows: Iterable[Sequence],
) -> None:
    lines = [f"# graphpurify {command}"]
    cfg = " ".join(f"{k}={v}" for k, v in sorted(config.items()))
    lines.append(f"# config: {cfg}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        print(path)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _pool_map(fn: Callable, items: list, jobs: int) -> list:
    """Order-preserving map, optionally over a process pool."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- workers (module level so they pickle) --------------------------------------


def _fmin_worker(task: tuple[str, float, str]) -> tuple[int, float, float]:
    spec, gate_noise, scan = task
    graph = build_graph(spec)
    rec = scans.find_threshold(graph, scan, gate_noise)
    return graph.n, rec.threshold, rec.f_min


def _pmin_gate_worker(task: tuple[str, float]) -> tuple[int, float]:
    spec, _ = task
    graph = build_graph(spec)
    rec = scans.find_threshold(graph, "p_min")
    return graph.n, rec.threshold


def _pmin_binary_worker(task: tuple[str, bool]) -> tuple[str, float]:
    spec, phase_on_a = task
    graph = build_graph(spec)
    return spec, scans.binary_error_pmin(graph, phase_on_a=phase_on_a)


def _fmax_worker(task: tuple[str, float]) -> tuple[float, float, float]:
    spec, p = task
    graph = build_graph(spec)
    f_min, f_max = scans.purification_window(graph, p)
    return p, f_min, f_max


def _compare_worker(task: tuple[str, float]) -> tuple[float, float, float]:
    spec, p = task
    graph = build_graph(spec)
    f_multi = scans.find_fmax(graph, p)
    f_bi = scans.bipartite_bound(p, graph)
    return p, f_multi, f_bi


# -- subcommands ------------------------------------------------------------------


def _cmd_graph_show(args) -> int:
    graph = build_graph(args.graph)
    config = {"graph": args.graph, "n": graph.n, "colorA": "+".join(map(str, sorted(graph.color_a)))}
    _write_csv(
        _out_path(args, "graph.csv"),
        "graph show",
        config,
        ("vertex_a", "vertex_b"),
        graph.edges,
    )
    return 0


def _cmd_purify_run(args) -> int:
    graph = build_graph(args.graph)
    state = _parse_state(graph, args.state)
    strategy = _parse_strategy(args.strategy)
    result = run_sequence(state, strategy, args.p, args.max_steps, args.tol)
    costs = result.cumulative_costs()
    rows = [
        (e.step, e.which, e.fidelity, e.success_prob, costs[i])
        for i, e in enumerate(result.trace)
    ]
    config = {
        "graph": args.graph, "state": args.state, "p": args.p,
        "strategy": args.strategy, "max-steps": args.max_steps, "tol": args.tol,
        "outcome": result.outcome,
    }
    _write_csv(
        _out_path(args, "purify.csv"),
        "purify run",
        config,
        ("step", "protocol", "fidelity", "success_prob", "cumulative_cost"),
        rows,
    )
    return 1 if result.outcome == "unpurifiable" else 0


def _cmd_scan(args) -> int:
    jobs = args.jobs or os.cpu_count() or 1
    config = {"jobs": jobs, "p": args.p}
    if args.mode in ("fmin", "qmin"):
        scan = "x_min" if args.mode == "fmin" else "q_min"
        specs = _family_specs(args)
        config.update(graphs="+".join(specs))
        tasks = [(spec, args.p, scan) for spec in specs]
        rows = _pool_map(_fmin_worker, tasks, jobs)
        name = "fig2.csv" if args.mode == "fmin" else "fig1.csv"
        _write_csv(_out_path(args, name), f"scan {args.mode}", config,
                   ("n", scan, "f_min"), rows)
        return 0
    if args.mode == "fmax":
        if not args.graph:
            raise UsageError("scan fmax needs --graph")
        grid = _parse_grid(args.p_grid)
        config.update(graph=args.graph, p_grid=args.p_grid)
        rows = _pool_map(_fmax_worker, [(args.graph, p) for p in grid], jobs)
        _write_csv(_out_path(args, "fig3.csv"), "scan fmax", config,
                   ("p", "f_min", "f_max"), rows)
        return 0
    if args.mode == "pmin":
        config.update(model=args.model)
        if args.model == "gate":
            specs = _family_specs(args)
            config.update(graphs="+".join(specs))
            rows = _pool_map(_pmin_gate_worker, [(s, args.p) for s in specs], jobs)
            _write_csv(_out_path(args, "fig4.csv"), "scan pmin", config,
                       ("n", "p_min"), rows)
        else:
            phase_on_a = args.model == "binaryAB"
            specs = _family_specs(args) if args.family else [args.graph]
            config.update(graphs="+".join(specs))
            rows = _pool_map(_pmin_binary_worker, [(s, phase_on_a) for s in specs], jobs)
            _write_csv(_out_path(args, "pmin_binary.csv"), "scan pmin", config,
                       ("graph", "p_min"), rows)
        return 0
    raise UsageError(f"unknown scan mode {args.mode!r}")


def _family_specs(args) -> list[str]:
    if args.graph:
        return [args.graph]
    if not args.family or not args.n:
        raise UsageError("need --graph or (--family and --n)")
    return [f"{args.family}:{n}" for n in _parse_range(args.n)]


def _cmd_analytic(args) -> int:
    if args.model == "ghz":
        ns = _parse_range(args.n)
        if args.pcrit:
            rows = [(n, analytic.ghz_pcrit(n)) for n in ns]
            _write_csv(_out_path(args, "ghz_pcrit.csv"), "analytic ghz",
                       {"n": args.n, "pcrit": True}, ("n", "p_crit"), rows)
        else:
            rows = []
            for n in ns:
                res = analytic.ghz_binary(args.x, args.p, n)
                rows.append((n, res.fidelity_after,
                             res.x_max if res.x_max is not None else "undefined", res.p_crit))
            _write_csv(_out_path(args, "ghz_step.csv"), "analytic ghz",
                       {"n": args.n, "x": args.x, "p": args.p},
                       ("n", "fidelity_after", "x_max", "p_crit"), rows)
        return 0
    if args.model == "cluster":
        ms = _parse_range(args.m)
        if args.qcrit:
            rows = [(m, analytic.closed_cluster_qcrit(m)) for m in ms]
            _write_csv(_out_path(args, "fig5.csv"), "analytic cluster",
                       {"m": args.m, "qcrit": True}, ("m", "q_crit"), rows)
        else:
            rows = []
            for m in ms:
                res = analytic.closed_cluster(args.q, m)
                rows.append((m, res.a, res.b, res.c, res.discriminant,
                             res.x_minus if res.x_minus is not None else "undefined",
                             res.x_plus if res.x_plus is not None else "undefined",
                             int(res.purifiable)))
            _write_csv(_out_path(args, "cluster_window.csv"), "analytic cluster",
                       {"m": args.m, "q": args.q},
                       ("m", "a", "b", "c", "delta", "x_minus", "x_plus", "purifiable"), rows)
        return 0
    raise UsageError(f"unknown analytic model {args.model!r}")


def _cmd_hashing(args) -> int:
    graph = build_graph(args.graph)
    state = _parse_state(graph, args.state)
    res = hashing_yield(state)
    rows = [(args.graph, args.state, res.rate, res.raw)]
    config = {"graph": args.graph, "state": args.state,
              "parity-trials": args.parity_trials, "seed": args.seed}
    if args.parity_trials:
        rng = np.random.default_rng(args.seed)
        failures = 0
        for _ in range(args.parity_trials):
            m = int(rng.integers(2, 6))
            labels = [int(rng.integers(0, 1 << graph.n)) for _ in range(m)]
            side = "A" if rng.integers(2) else "B"
            mask = graph.mask_a if side == "A" else graph.mask_b
            expected = 0
            for lab in labels:
                expected ^= lab & mask
            if parity_readout(graph, labels, side, rng) != expected:
                failures += 1
        rows = [(args.graph, args.state, res.rate, res.raw, args.parity_trials, failures)]
        _write_csv(_out_path(args, "hashing.csv"), "hashing yield", config,
                   ("graph", "state", "yield", "yield_raw", "parity_trials", "parity_failures"),
                   rows)
        return 0 if failures == 0 else 1
    _write_csv(_out_path(args, "hashing.csv"), "hashing yield", config,
               ("graph", "state", "yield", "yield_raw"), rows)
    return 0


def _cmd_flags(args) -> int:
    graph = build_graph(f"chain:{args.n}")
    state = _parse_state(graph, args.state)
    matrix = flags.FlagMatrix.from_state(state)
    trace = flags.flag_run(matrix, args.p, args.steps)
    rows = [(step, which, f, f_cond, succ) for step, which, f, f_cond, succ in trace.rows]
    _write_csv(_out_path(args, "fig7.csv"), "flags run",
               {"n": args.n, "p": args.p, "steps": args.steps, "state": args.state},
               ("step", "protocol", "fidelity", "conditional_fidelity", "success_prob"), rows)
    return 0


def _cmd_lattice(args) -> int:
    ns = _parse_range(args.n)
    rows = lattice.table_rows(args.p, ns)
    _write_csv(_out_path(args, "table1.csv"), "lattice table",
               {"p": args.p, "n": args.n}, ("n", "created_fidelity", "f_max"), rows)
    return 0


def _cmd_compare(args) -> int:
    jobs = args.jobs or os.cpu_count() or 1
    grid = _parse_grid(args.p_grid)
    rows = _pool_map(_compare_worker, [(args.target, p) for p in grid], jobs)
    _write_csv(_out_path(args, "fig6.csv"), "compare bipartite",
               {"target": args.target, "p_grid": args.p_grid, "jobs": jobs},
               ("p", "f_max_multiparty", "f_upper_bipartite"), rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphpurify",
        description="Entanglement purification simulator for two-colorable graph states",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_graph = sub.add_parser("graph", help="graph utilities")
    graph_sub = p_graph.add_subparsers(dest="subcommand", required=True)
    g_show = graph_sub.add_parser("show", help="emit the edge list of a graph spec")
    g_show.add_argument("--graph", required=True, help="graph spec, e.g. ghz:4, chain:6, gnk:10,4")
    g_show.add_argument("--out", default=None, help="output CSV path ('-' for stdout)")
    g_show.set_defaults(func=_cmd_graph_show)

    p_purify = sub.add_parser("purify", help="run the recurrence protocol")
    purify_sub = p_purify.add_subparsers(dest="subcommand", required=True)
    pr = purify_sub.add_parser("run", help="iterate the recurrence, emit a trace")
    pr.add_argument("--graph", required=True)
    pr.add_argument("--state", default="werner:0.9", help="pure | werner:x | channel:q | binary:F")
    pr.add_argument("--p", type=float, default=1.0, help="gate reliability (1 = perfect)")
    pr.add_argument("--strategy", default="alternate:P1",
                    help="alternate:P1|alternate:P2|adaptive|fixed:P1,P2,...")
    pr.add_argument("--max-steps", type=int, default=200)
    pr.add_argument("--tol", type=float, default=1e-10)
    pr.add_argument("--out", default=None)
    pr.set_defaults(func=_cmd_purify_run)

    p_scan = sub.add_parser("scan", help="threshold and fixed-point scans")
    p_scan.add_argument("mode", choices=("fmin", "fmax", "qmin", "pmin"))
    p_scan.add_argument("--graph", default=None)
    p_scan.add_argument("--family", default=None, help="graph family for --n ranges (ghz, chain)")
    p_scan.add_argument("--n", default=None, help="range like 2..7")
    p_scan.add_argument("--p", type=float, default=1.0, help="gate reliability for fmin/qmin scans")
    p_scan.add_argument("--p-grid", default="0.95:1.0:0.01", help="grid for fmax scans")
    p_scan.add_argument("--model", choices=("gate", "binaryAB", "binaryB"), default="gate")
    p_scan.add_argument("--jobs", type=int, default=None, help="worker processes (default: cores)")
    p_scan.add_argument("--out", default=None)
    p_scan.set_defaults(func=_cmd_scan)

    p_analytic = sub.add_parser("analytic", help="closed-form threshold models")
    p_analytic.add_argument("model", choices=("ghz", "cluster"))
    p_analytic.add_argument("--pcrit", action="store_true")
    p_analytic.add_argument("--qcrit", action="store_true")
    p_analytic.add_argument("--n", default="2..14", help="vertex-count range for ghz")
    p_analytic.add_argument("--m", default="3..49", help="half-size range for cluster (odd)")
    p_analytic.add_argument("--x", type=float, default=0.9)
    p_analytic.add_argument("--p", type=float, default=1.0)
    p_analytic.add_argument("--q", type=float, default=0.9)
    p_analytic.add_argument("--out", default=None)
    p_analytic.set_defaults(func=_cmd_analytic)

    p_hash = sub.add_parser("hashing", help="hashing yield and parity readout")
    hash_sub = p_hash.add_subparsers(dest="subcommand", required=True)
    hy = hash_sub.add_parser("yield", help="asymptotic hashing yield of a state")
    hy.add_argument("--graph", required=True)
    hy.add_argument("--state", default="werner:0.9")
    hy.add_argument("--parity-trials", type=int, default=0,
                    help="also run randomized parity-readout trials")
    hy.add_argument("--seed", type=int, default=0)
    hy.add_argument("--out", default=None)
    hy.set_defaults(func=_cmd_hashing)

    p_flags = sub.add_parser("flags", help="error-flag tracking for chains")
    flags_sub = p_flags.add_subparsers(dest="subcommand", required=True)
    fr = flags_sub.add_parser("run", help="trace plain and conditional fidelity")
    fr.add_argument("--n", type=int, default=4)
    fr.add_argument("--p", type=float, default=0.97)
    fr.add_argument("--steps", type=int, default=30)
    fr.add_argument("--state", default="channel:0.9")
    fr.add_argument("--out", default=None)
    fr.set_defaults(func=_cmd_flags)

    p_lattice = sub.add_parser("lattice", help="noisy chain creation and purification")
    lattice_sub = p_lattice.add_subparsers(dest="subcommand", required=True)
    lt = lattice_sub.add_parser("table", help="created fidelity and purified F_max per length")
    lt.add_argument("--p", type=float, default=0.99)
    lt.add_argument("--n", default="2..6")
    lt.add_argument("--out", default=None)
    lt.set_defaults(func=_cmd_lattice)

    p_cmp = sub.add_parser("compare", help="multiparty vs bipartite-based purification")
    cmp_sub = p_cmp.add_subparsers(dest="subcommand", required=True)
    cb = cmp_sub.add_parser("bipartite", help="fixed-point fidelity vs pair-based bound")
    cb.add_argument("--target", required=True, help="target graph spec (ghz:3 or chain:4)")
    cb.add_argument("--p-grid", default="0.96:1.0:0.005")
    cb.add_argument("--jobs", type=int, default=None)
    cb.add_argument("--out", default=None)
    cb.set_defaults(func=_cmd_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, GraphFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PurificationFailure as exc:
        print(f"protocol failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
