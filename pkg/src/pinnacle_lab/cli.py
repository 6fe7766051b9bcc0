"""pinnacle-lab command line: simulate, oracle, dirichlet, kernel, pvar,
nested-probe, asm, predict, analyze, experiment.

All outputs are CSV with a header row.  Exit codes: 0 success, 2 config
error, 3 numeric failure, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import asm as asm_mod
from . import contours as contours_mod
from . import experiments as exp_mod
from . import harmonic as harmonic_mod
from . import oracle as oracle_mod
from . import predict as predict_mod
from . import pvar as pvar_mod
from .errors import BudgetError, ConfigError, NumericError
from .lattice import ModelParams, read_snapshot, write_snapshot
from .sampler import ChainSpec, Schedule, run_chain


def _parse_p(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _cmd_simulate(args) -> int:
    params = ModelParams(p=_parse_p(args.p), beta=args.beta, floor=args.floor,
                         boundary_height=args.boundary)
    spec = ChainSpec(params=params, L=args.L, seed=args.seed,
                     sweeps_burnin=args.burnin, sweeps_sample=args.sweeps,
                     thinning=args.thin, schedule=Schedule(args.schedule))
    sink = None
    if args.snapshot_every:
        if not args.snapshot_dir:
            raise ConfigError("--snapshot-every needs --snapshot-dir")
        snap_dir = Path(args.snapshot_dir)
        snap_dir.mkdir(parents=True, exist_ok=True)

        def sink(index, config):
            write_snapshot(snap_dir / f"snapshot_{index:08d}.txt", config, params)

    stream = run_chain(spec, snapshot_every=args.snapshot_every,
                       snapshot_sink=sink)
    _write_rows(args.out,
                ["sweep_index", "max_height", "mean_height", "center_height"],
                zip(stream.sweep_index.tolist(), stream.max_height.tolist(),
                    stream.mean_height.tolist(), stream.center_height.tolist()))
    return 0


def _cmd_oracle(args) -> int:
    params = ModelParams(p=_parse_p(args.p), beta=args.beta, floor=args.floor,
                         boundary_height=args.boundary)
    ensemble = oracle_mod.enumerate_ensemble(args.L, args.K, params)
    center = ((args.L - 1) // 2, (args.L - 1) // 2)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "key", "value"])
        writer.writerow(["meta", "log_Z", ensemble.log_Z])
        lo = ensemble.lo
        for h in range(lo, lo + ensemble.n_levels + 1):
            writer.writerow(["marginal_tail_center", h,
                             oracle_mod.marginal_tail(ensemble, center, h)])
        for rank in range(ensemble.n_states):
            p = float(ensemble.probs[rank])
            if ensemble.admissible is not None and not ensemble.admissible[rank]:
                continue
            writer.writerow(["config", rank, p])
    return 0


def _cmd_dirichlet(args) -> int:
    profile = harmonic_mod.solve_dirichlet(args.r, args.h, args.tol)
    direct, identity = harmonic_mod.conductance_identity_check(
        args.r, args.h, args.tol)
    rows = [["site", f"{x},{y}", profile.value((x, y))]
            for (x, y) in profile.ball.sites]
    rows.append(["summary", "I_r(h)", direct])
    rows.append(["summary", "identity_value", identity])
    rows.append(["summary", "asymptotic", harmonic_mod.asymptotic_I(args.r, args.h)])
    rows.append(["summary", "exit_time", harmonic_mod.exit_time(args.r)])
    _write_rows(args.out, ["kind", "key", "value"], rows)
    return 0


def _cmd_kernel(args) -> int:
    table = harmonic_mod.potential_kernel(args.R, args.tol)
    R = table.half_width
    rows = [[x, y, table.a(x, y)]
            for x in range(-R, R + 1) for y in range(-R, R + 1)]
    _write_rows(args.out, ["x", "y", "a"], rows)
    return 0


def _cmd_pvar(args) -> int:
    result = pvar_mod.minimize_p_energy(args.p, args.R, args.tol)
    rows = [["site", f"{x},{y}", result.value((x, y))]
            for (x, y) in result.ball.sites]
    rows.append(["summary", "energy", result.energy])
    rows.append(["summary", "residual", result.residual])
    rows.append(["summary", "sweeps", result.sweeps])
    _write_rows(args.out, ["kind", "key", "value"], rows)
    return 0


def _cmd_nested_probe(args) -> int:
    family, energy, ratio = pvar_mod.probe_nested_lower_bound(
        args.h, args.p, args.budget)
    rows = [["energy", energy], ["ratio_E_over_h2", ratio],
            ["lengths", " ".join(str(v) for v in family.lengths())]]
    if args.out:
        _write_rows(args.out, ["key", "value"], rows)
    else:
        for key, value in rows:
            print(f"{key} = {value}")
    return 0


def _cmd_asm(args) -> int:
    if args.dump_bijection:
        out = Path(args.dump_bijection)
        out.mkdir(parents=True, exist_ok=True)
        for k, family in enumerate(asm_mod.iter_path_families(args.h)):
            config = asm_mod.paths_to_six_vertex(family)
            matrix = asm_mod.six_vertex_to_asm(config)
            lines = [f"family {k}"]
            for i in range(family.h):
                pts = family.path_points(i)
                lines.append(f"  path {i}: " + " ".join(map(str, pts)))
            lines.append("six-vertex types (rows top to bottom):")
            for y in range(config.h - 1, -1, -1):
                lines.append("  " + " ".join(
                    str(config.vertex_type(x, y)) for x in range(config.h)))
            lines.append("asm:")
            for row in matrix.entries:
                lines.append("  " + " ".join(f"{v:+d}" for v in row))
            (out / f"family_{k:04d}.txt").write_text("\n".join(lines) + "\n")
        return 0
    if args.mode == "enumerate":
        value = asm_mod.enumerate_path_families(args.h)
    elif args.mode == "formula":
        value = asm_mod.asm_product_formula(args.h)
    else:
        value = asm_mod.six_vertex_count(args.h)
    if args.out:
        _write_rows(args.out, ["h", "mode", "count"], [[args.h, args.mode, value]])
    else:
        print(value)
    return 0


def _cmd_predict(args) -> int:
    params = ModelParams(p=_parse_p(args.p), beta=args.beta)
    if args.backend == "analytic":
        tail = predict_mod.analytic_tail_estimate(
            params, h_max=args.h_max, c_p=args.c_p, c_bracket=args.c_bracket)
    else:
        if not args.tail_csv:
            raise ConfigError("empirical backend needs --tail-csv")
        table = {}
        with open(args.tail_csv) as fh:
            for row in csv.DictReader(fh):
                table[int(row["h"])] = float(row["tail"])
        if not table:
            raise ConfigError(f"no tail rows in {args.tail_csv}")
        tail = predict_mod.TailEstimate(
            backend="empirical", params=params, table=table,
            h_min=min(table), n_samples=1, provenance=args.tail_csv)
    rows = []
    for L in args.L:
        m = predict_mod.predict_M(L, tail)
        hh = predict_mod.predict_H(L, args.beta, tail)
        star = (predict_mod.predict_M_star(L, args.beta, tail)
                if params.p == 2.0 else None)
        rows.append([
            L, m.value, hh.value, star.value if star else "",
            predict_mod.asymptote_M(L, args.beta),
            predict_mod.asymptote_H(L, args.beta),
            predict_mod.asymptote_M_star(L, args.beta),
            (hh.value / m.value) if m.value else "",
            ";".join(m.warnings + hh.warnings),
        ])
    _write_rows(args.out,
                ["L", "M", "H", "M_star", "asym_M", "asym_H", "asym_M_star",
                 "H_over_M", "warnings"], rows)
    return 0


def _cmd_analyze(args) -> int:
    config, _params = read_snapshot(args.snapshot)
    h_lo, h_hi = (int(v) for v in args.levels.split(":"))
    rows = []
    for h in range(h_lo, h_hi + 1):
        stats = contours_mod.area_statistics(
            contours_mod.extract_level_lines(config, h), config.L)
        rows.append([h, stats.n_contours, stats.n_macroscopic, stats.max_area,
                     stats.total_area, int(stats.has_negative_macroscopic)])
    _write_rows(args.out,
                ["h", "n_contours", "n_macroscopic", "max_area", "total_area",
                 "has_negative_macroscopic"], rows)
    return 0


def _cmd_experiment(args) -> int:
    config = exp_mod.load_config(args.config)
    if args.out_dir:
        config.out_dir = args.out_dir
    report = exp_mod.run_experiment(config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_csv(out_dir / f"{report.name.lower()}_rows.csv")
    if report.summary:
        report.write_summary(out_dir / f"{report.name.lower()}_summary.csv")
    for name, (snapshot, params) in report.artifacts.items():
        write_snapshot(out_dir / f"{name}.txt", snapshot, params)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinnacle-lab")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a heat-bath chain")
    sim.add_argument("--L", type=int, required=True)
    sim.add_argument("--p", default="2")
    sim.add_argument("--beta", type=float, required=True)
    sim.add_argument("--floor", action="store_true")
    sim.add_argument("--boundary", type=int, default=0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--burnin", type=int, default=1000)
    sim.add_argument("--sweeps", type=int, default=1000)
    sim.add_argument("--thin", type=int, default=1)
    sim.add_argument("--schedule", choices=["sequential", "checkerboard"],
                     default="sequential")
    sim.add_argument("--out", required=True)
    sim.add_argument("--snapshot-every", type=int, default=0)
    sim.add_argument("--snapshot-dir", default="")
    sim.set_defaults(func=_cmd_simulate)

    orc = sub.add_parser("oracle", help="exact Boltzmann table on a tiny box")
    orc.add_argument("--L", type=int, required=True)
    orc.add_argument("--K", type=int, required=True)
    orc.add_argument("--p", default="2")
    orc.add_argument("--beta", type=float, required=True)
    orc.add_argument("--floor", action="store_true")
    orc.add_argument("--boundary", type=int, default=0)
    orc.add_argument("--out", required=True)
    orc.set_defaults(func=_cmd_oracle)

    dir_ = sub.add_parser("dirichlet", help="pinnacle Dirichlet solve")
    dir_.add_argument("--r", type=float, required=True)
    dir_.add_argument("--h", type=float, default=1.0)
    dir_.add_argument("--tol", type=float, default=1e-10)
    dir_.add_argument("--out", required=True)
    dir_.set_defaults(func=_cmd_dirichlet)

    ker = sub.add_parser("kernel", help="potential kernel table")
    ker.add_argument("--R", type=int, required=True)
    ker.add_argument("--tol", type=float, default=1e-10)
    ker.add_argument("--out", required=True)
    ker.set_defaults(func=_cmd_kernel)

    pv = sub.add_parser("pvar", help="p-Dirichlet minimizer")
    pv.add_argument("--p", type=float, required=True)
    pv.add_argument("--R", type=float, required=True)
    pv.add_argument("--tol", type=float, default=1e-8)
    pv.add_argument("--out", required=True)
    pv.set_defaults(func=_cmd_pvar)

    npb = sub.add_parser("nested-probe", help="nested rectangle energy search")
    npb.add_argument("--h", type=int, required=True)
    npb.add_argument("--p", type=float, required=True)
    npb.add_argument("--budget", type=int, default=20000)
    npb.add_argument("--out")
    npb.set_defaults(func=_cmd_nested_probe)

    asmp = sub.add_parser("asm", help="path family / six-vertex / ASM counts")
    asmp.add_argument("--h", type=int, required=True)
    asmp.add_argument("--mode", choices=["enumerate", "formula", "sixvertex"],
                      default="formula")
    asmp.add_argument("--out")
    asmp.add_argument("--dump-bijection", default="")
    asmp.set_defaults(func=_cmd_asm)

    pred = sub.add_parser("predict", help="M(L), H(L), M*(L) predictors")
    pred.add_argument("--p", default="2")
    pred.add_argument("--beta", type=float, required=True)
    pred.add_argument("--L", type=float, nargs="+", required=True)
    pred.add_argument("--backend", choices=["analytic", "empirical"],
                      default="analytic")
    pred.add_argument("--tail-csv", default="")
    pred.add_argument("--h-max", type=int, default=64)
    pred.add_argument("--c-p", type=float, default=None)
    pred.add_argument("--c-bracket", type=float, default=None)
    pred.add_argument("--out", required=True)
    pred.set_defaults(func=_cmd_predict)

    ana = sub.add_parser("analyze", help="level-line statistics of a snapshot")
    ana.add_argument("--snapshot", required=True)
    ana.add_argument("--levels", required=True, help="h1:h2 inclusive")
    ana.add_argument("--out", required=True)
    ana.set_defaults(func=_cmd_analyze)

    expp = sub.add_parser("experiment", help="run a configured experiment")
    expp.add_argument("--config", required=True)
    expp.add_argument("--out-dir", default="")
    expp.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except NumericError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 3
    except BudgetError as err:
        print(f"budget exceeded: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
