"""End-to-end experiments: maximum concentration, entropic repulsion under a
floor, tail-rate fits, and the tile-size relation.

Desk-scale runs sit far from the asymptotic regime, so every check here is a
trend check: medians non-decreasing in L, floored means above unfloored
means, modal plateau fractions, fitted slopes within stated bands.
Equilibration is verified operationally by agreement between hot and cold
starts on summary observables, not by mixing theory.

All randomness derives from the experiment seed: trial t at box size L uses
seed  base + 1000003 * L + t,  so reports are reproducible row by row.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
import numpy as np

from .contours import area_statistics, extract_level_lines
from .errors import ConfigError
from .lattice import HeightConfig, ModelParams
from .predict import TailEstimate, empirical_tail
from .sampler import (ChainSpec, HeightHistogram, Schedule, monotone_pair,
                      run_chain)

EXPERIMENT_NAMES = ("MAX_HEIGHT", "FLOOR_PLATEAU", "LDP_TAIL", "TILE_RELATION")


@dataclass
class ExperimentConfig:
    experiment: str
    params: ModelParams
    L_list: list
    trials: int
    seed: int
    burnin: int
    samples: int
    thinning: int = 1
    schedule: Schedule = Schedule.CHECKERBOARD
    out_dir: str = "."
    h_range: tuple = (1, 3)
    min_tail_hits: int = 10

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_NAMES:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for L in self.L_list:
            if L < 8:
                raise ConfigError(f"box size {L} too small, need L >= 8")

    def chain_spec(self, L: int, trial: int) -> ChainSpec:
        return ChainSpec(params=self.params, L=L,
                         seed=self.seed + 1000003 * L + trial,
                         sweeps_burnin=self.burnin, sweeps_sample=self.samples,
                         thinning=self.thinning, schedule=self.schedule)


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def load_config(path) -> ExperimentConfig:
    """key = value file, '#' comments; see README for the schema."""
    fields = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            fields[key.lower()] = value
    try:
        experiment = fields.pop("experiment").upper()
        p = float(fields.pop("p", "2"))
        beta = float(fields.pop("beta"))
        floor = _parse_bool(fields.pop("floor", "0"))
        boundary = int(fields.pop("boundary", "0"))
        L_list = [int(v) for v in fields.pop("l").replace(",", " ").split()]
        trials = int(fields.pop("trials", "1"))
        seed = int(fields.pop("seed", "0"))
        burnin = int(fields.pop("burnin", "1000"))
        samples = int(fields.pop("samples", "1000"))
        thinning = int(fields.pop("thinning", "1"))
        schedule = Schedule(fields.pop("schedule", "checkerboard").lower())
        out_dir = fields.pop("out_dir", ".")
        h_range = tuple(int(v) for v in fields.pop("h_range", "1:3").split(":"))
    except KeyError as missing:
        raise ConfigError(f"config is missing required key {missing}") from None
    except ValueError as bad:
        raise ConfigError(f"bad config value: {bad}") from None
    if fields:
        raise ConfigError(f"unknown config keys: {sorted(fields)}")
    if experiment == "FLOOR_PLATEAU":
        floor = True
    if experiment in ("MAX_HEIGHT", "LDP_TAIL") and floor:
        raise ConfigError(f"{experiment} runs without a floor")
    params = ModelParams(p=p, beta=beta, floor=floor, boundary_height=boundary)
    return ExperimentConfig(experiment=experiment, params=params, L_list=L_list,
                            trials=trials, seed=seed, burnin=burnin,
                            samples=samples, thinning=thinning,
                            schedule=schedule, out_dir=out_dir, h_range=h_range)


@dataclass
class ExperimentReport:
    name: str
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    # snapshots behind the rows, re-analyzable offline: name -> (config, params)
    artifacts: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            writer.writerows(self.rows)

    def write_summary(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["key", "value"])
            for k in sorted(self.summary):
                writer.writerow([k, self.summary[k]])


def best_two_consecutive_mass(counts: dict) -> tuple:
    """(mass fraction, lower level) of the best {m, m+1} window."""
    total = sum(counts.values())
    if total == 0:
        raise ConfigError("empty histogram")
    best, best_m = -1.0, 0
    for m in range(min(counts), max(counts) + 1):
        mass = (counts.get(m, 0) + counts.get(m + 1, 0)) / total
        if mass > best:
            best, best_m = mass, m
    return best, best_m


def run_max_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Maximum height per (L, trial); two-point concentration summary."""
    if config.params.floor:
        raise ConfigError("MAX_HEIGHT runs without a floor")
    rows = []
    summary = {}
    for L in config.L_list:
        finals = []
        for trial in range(config.trials):
            spec = config.chain_spec(L, trial)
            stream = run_chain(spec)
            x_L = (int(stream.max_height[-1]) if len(stream)
                   else int(stream.final.heights.max()))
            rows.append([L, trial, x_L])
            finals.append(x_L)
        counts = {}
        for v in finals:
            counts[v] = counts.get(v, 0) + 1
        mass, m = best_two_consecutive_mass(counts)
        summary[f"L={L} median_XL"] = float(np.median(finals))
        summary[f"L={L} best_two_mass"] = mass
        summary[f"L={L} best_two_window"] = f"{{{m},{m + 1}}}"
    return ExperimentReport(name="MAX_HEIGHT",
                            columns=["L", "trial", "X_L"],
                            rows=rows, summary=summary)


def hot_cold_agreement(config: ExperimentConfig, L: int,
                       hot_height: int = 3) -> tuple:
    """Mean-height agreement between cold (flat) and hot (raised) starts,
    in units of the combined standard error."""
    spec = config.chain_spec(L, trial=990)
    b = config.params.boundary_height
    cold = run_chain(spec, HeightConfig.flat(L, max(b, 0) if config.params.floor else b, b))
    hot = run_chain(spec, HeightConfig.flat(L, b + hot_height, b))

    def err(stream):
        x = stream.mean_height
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))

    mc, sc = err(cold)
    mh, sh = err(hot)
    gap = abs(mc - mh) / max(math.hypot(sc, sh), 1e-12)
    return gap, mc, mh


def run_floor_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Plateau statistics of the floored surface per box size.

    Records the pooled height histogram, its modal level and modal-two-level
    fraction, macroscopic contour tallies of a final snapshot, and a
    same-seed coupled comparison of floored vs unfloored mean heights (the
    monotone coupling keeps its ordering assertion active throughout).
    """
    if not config.params.floor or config.params.boundary_height != 0:
        raise ConfigError("FLOOR_PLATEAU needs floor on and boundary 0")
    rows = []
    summary = {}
    artifacts = {}
    for L in config.L_list:
        hist = HeightHistogram()
        spec = config.chain_spec(L, trial=0)
        stream = run_chain(spec, accumulators=(hist,))
        total = sum(hist.counts.values())
        modal = max(hist.counts, key=hist.counts.get)
        mass2, m2 = best_two_consecutive_mass(hist.counts)
        levels = sorted(hist.counts)
        contour_rows = []
        snap = stream.final
        artifacts[f"final_L{L}"] = (snap, config.params)
        for h in range(max(1, min(levels)), max(levels) + 1):
            stats = area_statistics(extract_level_lines(snap, h), L)
            contour_rows.append(stats)
            rows.append([L, h, hist.counts.get(h, 0), stats.n_contours,
                         stats.n_macroscopic, stats.max_area,
                         int(stats.has_negative_macroscopic)])
        # coupled floored/unfloored comparison, shared randomness
        pair_spec = ChainSpec(
            params=ModelParams(p=config.params.p, beta=config.params.beta,
                               floor=False, boundary_height=0),
            L=L, seed=spec.seed, sweeps_burnin=config.burnin,
            sweeps_sample=config.samples, thinning=config.thinning,
            schedule=config.schedule)
        pair = monotone_pair(pair_spec, HeightConfig.flat(L, 0),
                             HeightConfig.flat(L, 0),
                             lower_floor=False, upper_floor=True)
        summary[f"L={L} modal_level"] = modal
        summary[f"L={L} modal_fraction"] = hist.counts[modal] / total
        summary[f"L={L} modal_two_fraction"] = mass2
        summary[f"L={L} modal_two_window"] = f"{{{m2},{m2 + 1}}}"
        summary[f"L={L} floored_mean"] = float(pair.upper_mean.mean())
        summary[f"L={L} unfloored_mean"] = float(pair.lower_mean.mean())
        summary[f"L={L} n_macroscopic_total"] = sum(
            s.n_macroscopic for s in contour_rows)
        summary[f"L={L} has_negative_macroscopic"] = any(
            s.has_negative_macroscopic for s in contour_rows)
    return ExperimentReport(
        name="FLOOR_PLATEAU",
        columns=["L", "h", "pooled_count", "n_contours", "n_macroscopic",
                 "max_area", "has_negative_macroscopic"],
        rows=rows, summary=summary, artifacts=artifacts)


_FIT_SHAPES = {
    "h": lambda h: float(h),
    "h^p": None,          # filled per params
    "h^2/log h": lambda h: h * h / math.log(h) if h >= 2 else None,
    "h^2": lambda h: float(h * h),
}


def tail_shape(params: ModelParams):
    """(name, callable) of the p-appropriate rate shape in h."""
    p = params.p
    if p == 1.0:
        return "h", _FIT_SHAPES["h"]
    if p == 2.0:
        return "h^2/log h", _FIT_SHAPES["h^2/log h"]
    if math.isinf(p) or p > 2.0:
        return "h^2", _FIT_SHAPES["h^2"]
    return "h^p", lambda h: float(h) ** p


@dataclass
class TailFit:
    shape: str
    slope: float
    slope_se: float
    used_h: list
    dropped_h: list
    per_h: dict          # h -> -log tail / shape(h)


def fit_tail_rate(tail: TailEstimate, h_values, min_hits: int = 10) -> TailFit:
    """Least squares of -log tail(h) against the p-appropriate shape,
    through the origin, weighted by tail-hit counts.

    Heights whose tail rests on fewer than min_hits samples are dropped
    (floor of empirical support), as are shape-undefined heights.
    """
    name, shape = tail_shape(tail.params)
    xs, ys, ws, used, dropped, per_h = [], [], [], [], [], {}
    for h in h_values:
        t = tail(h)
        hits = t * tail.n_samples if tail.backend == "empirical" else math.inf
        s = shape(h)
        if t <= 0.0 or hits < min_hits or s is None:
            dropped.append(h)
            continue
        xs.append(s)
        ys.append(-math.log(t))
        ws.append(hits if math.isfinite(hits) else 1.0)
        used.append(h)
        per_h[h] = -math.log(t) / s
    if not used:
        raise ConfigError("no fit support: every height dropped")
    x = np.array(xs)
    y = np.array(ys)
    w = np.array(ws)
    slope = float((w * x * y).sum() / (w * x * x).sum())
    resid = y - slope * x
    dof = max(len(x) - 1, 1)
    slope_se = float(math.sqrt((w * resid * resid).sum()
                               / ((w * x * x).sum() * dof)))
    return TailFit(shape=name, slope=slope, slope_se=slope_se, used_h=used,
                   dropped_h=dropped, per_h=per_h)


def run_ldp_tail_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Empirical center-site tail and its fitted rate slope."""
    if config.params.floor:
        raise ConfigError("LDP_TAIL estimates pi: floor off")
    L = config.L_list[0]
    if L < 64:
        raise ConfigError("LDP_TAIL needs L >= 64")
    spec = config.chain_spec(L, trial=0)
    stream = run_chain(spec)
    tail = empirical_tail(stream)
    h_lo, h_hi = config.h_range
    fit = fit_tail_rate(tail, range(h_lo, h_hi + 1), config.min_tail_hits)
    rows = []
    for h in sorted(tail.table):
        rows.append([L, h, tail(h), tail.se[h], int(tail(h) * tail.n_samples),
                     h in fit.used_h])
    summary = {
        "L": L, "shape": fit.shape, "slope": fit.slope,
        "slope_se": fit.slope_se, "used_h": fit.used_h,
        "dropped_h": fit.dropped_h, "n_samples": tail.n_samples,
        "reference_4beta": 4.0 * config.params.beta,
    }
    return ExperimentReport(
        name="LDP_TAIL",
        columns=["L", "h", "tail", "se", "hits", "in_fit"],
        rows=rows, summary=summary)


def check_tile_relation(beta: float, h_range, tail: TailEstimate) -> ExperimentReport:
    """Admissible tile side windows [(4 beta + 2)/tail, (4 beta + 4)/tail]."""
    rows = []
    for h in h_range:
        t = tail(h)
        if t <= 0.0:
            rows.append([h, t, math.inf, math.inf])
            continue
        rows.append([h, t, (4 * beta + 2) / t, (4 * beta + 4) / t])
    return ExperimentReport(name="TILE_RELATION",
                            columns=["h", "tail", "ell_min", "ell_max"],
                            rows=rows)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    if config.experiment == "MAX_HEIGHT":
        return run_max_experiment(config)
    if config.experiment == "FLOOR_PLATEAU":
        return run_floor_experiment(config)
    if config.experiment == "LDP_TAIL":
        return run_ldp_tail_experiment(config)
    if config.experiment == "TILE_RELATION":
        from .predict import analytic_tail_estimate
        tail = analytic_tail_estimate(config.params,
                                      h_max=max(config.h_range))
        return check_tile_relation(config.params.beta,
                                   range(config.h_range[0],
                                         config.h_range[1] + 1), tail)
    raise ConfigError(f"unknown experiment {config.experiment}")
