"""Tail rate functions for every gradient exponent and the derived
predictors for the maximum and the plateau height.

ANALYTIC tails drop every lower-order correction and are therefore
leading-order surrogates: useful for threshold scans and coefficient-ratio
checks, never claimed sharp at finite L.  EMPIRICAL tails come from chain
samples of the center-site height with binomial standard errors.

Predictors (thresholds are inclusive, exactly as defined):

* M(L)  = max{h : tail(h) >= L^-2 (log L)^5},   the unconstrained maximum;
* H(L)  = max{h : tail(h) >= 5 beta / L},       the floored plateau height;
* M*(L) = H(L) + M(L),                          the floored maximum
  (plateau plus an excursion of unconstrained-maximum size on top of it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .lattice import ModelParams
from .sampler import SampleStream

SQRT2 = math.sqrt(2.0)
RSOS_LOG2716 = 2.0 * math.log(27.0 / 16.0)


def rate_exponent(params: ModelParams, h: int, c_p: float | None = None,
                  c_bracket: float | None = None) -> float:
    """-log of the analytic tail surrogate at height h.

    c_p is the truncated-minimizer constant for 1 < p < 2 (measure it with
    pvar; no closed form exists); c_bracket picks a constant inside the
    [c1, c2] bracket available for 2 < p < inf, and the output inherits that
    bracket dependence.
    """
    if h < 1:
        raise ConfigError("rate exponent defined for h >= 1")
    beta = params.beta
    p = params.p
    if math.isinf(p):
        return 4.0 * (beta + RSOS_LOG2716) * h * h
    if p == 1.0:
        return 4.0 * beta * h
    if p == 2.0:
        if h < 2:
            raise ConfigError("p = 2 rate needs h >= 2 (log h > 0)")
        return 2.0 * math.pi * beta * h * h / math.log(h)
    if p < 2.0:
        if c_p is None:
            raise ConfigError("1 < p < 2 needs the measured constant c_p")
        return c_p * beta * h ** p
    if c_bracket is None:
        raise ConfigError("2 < p < inf needs a bracket constant c")
    return c_bracket * beta * h * h


@dataclass
class TailEstimate:
    """h -> estimate of pi(eta_0 >= h), analytic or empirical.

    ``log_table`` carries -log tail exactly; threshold scans run on it so
    that rates beyond float underflow (around 745) still compare correctly.
    """

    backend: str                      # "analytic" | "empirical"
    params: ModelParams
    table: dict                      # h -> probability, h >= h_min
    h_min: int
    se: dict | None = None           # empirical only
    n_samples: int = 0
    provenance: str = ""
    log_table: dict | None = None    # h -> -log tail

    def __call__(self, h: int) -> float:
        if h < self.h_min:
            return 1.0
        return self.table.get(h, 0.0)

    def neg_log(self, h: int) -> float:
        """-log tail(h); +inf where the tail vanishes."""
        if h < self.h_min:
            return 0.0
        if self.log_table is not None and h in self.log_table:
            return self.log_table[h]
        t = self.table.get(h, 0.0)
        return -math.log(t) if t > 0.0 else math.inf

    def max_tabulated(self) -> int:
        keys = self.log_table if self.log_table is not None else self.table
        return max(keys, default=self.h_min - 1)


def analytic_tail(params: ModelParams, h: int, c_p: float | None = None,
                  c_bracket: float | None = None) -> float:
    """exp(-rate) with the leading-order rate; 1.0 for h <= 0."""
    if h <= 0:
        return 1.0
    return math.exp(-rate_exponent(params, h, c_p=c_p, c_bracket=c_bracket))


def analytic_tail_estimate(params: ModelParams, h_max: int = 64,
                           c_p: float | None = None,
                           c_bracket: float | None = None) -> TailEstimate:
    h_min = 2 if params.p == 2.0 else 1
    log_table = {h: rate_exponent(params, h, c_p=c_p, c_bracket=c_bracket)
                 for h in range(h_min, h_max + 1)}
    table = {h: math.exp(-r) for h, r in log_table.items()}
    return TailEstimate(backend="analytic", params=params, table=table,
                        h_min=h_min, provenance="leading-order surrogate",
                        log_table=log_table)


def empirical_tail(stream: SampleStream, min_L: int = 64) -> TailEstimate:
    """Tail of the center-site height over a chain's retained samples.

    The chain must target the unfloored zero-boundary measure: with a floor
    the estimand would be the conditioned surface, not pi.  L >= 64 keeps
    the center at least log^2 L sites from the boundary at desk scales.
    """
    spec = stream.spec
    if spec.params.floor:
        raise ConfigError("empirical tails estimate pi: run without a floor")
    if spec.params.boundary_height != 0:
        raise ConfigError("empirical tails need zero boundary height")
    if spec.L < min_L:
        raise ConfigError(f"box side {spec.L} too small, need >= {min_L}")
    heights = stream.center_height
    n = len(heights)
    if n == 0:
        raise ConfigError("empty sample stream")
    table = {}
    se = {}
    h_min = int(heights.min())
    for h in range(h_min, int(heights.max()) + 1):
        phat = float((heights >= h).mean())
        table[h] = phat
        se[h] = math.sqrt(phat * (1.0 - phat) / n)
    return TailEstimate(backend="empirical", params=spec.params, table=table,
                        h_min=h_min, se=se, n_samples=n,
                        provenance=f"chain seed={spec.seed} L={spec.L} n={n}")


# -- threshold predictors ------------------------------------------------------

@dataclass
class Prediction:
    value: int
    threshold: float
    warnings: list = field(default_factory=list)
    asymptote: float | None = None


def _threshold_scan(tail: TailEstimate, neg_log_threshold: float) -> Prediction:
    """Largest h with tail(h) >= threshold, i.e. -log tail(h) <= the given
    -log threshold (inclusive both ways); h = 0 baseline.

    Runs in the log domain: thresholds like L^-2 log^5 L underflow float64
    long before the comparison stops being meaningful.
    """
    threshold = math.exp(-neg_log_threshold) if neg_log_threshold < 745 else 0.0
    if neg_log_threshold < 0.0:
        return Prediction(value=0, threshold=threshold,
                          warnings=["degenerate threshold >= 1"])
    h = tail.h_min
    last_ok = tail.h_min - 1
    top = tail.max_tabulated()
    while h <= top:
        if tail.neg_log(h) <= neg_log_threshold:
            last_ok = h
        else:
            break
        h += 1
    pred = Prediction(value=last_ok, threshold=threshold)
    if last_ok == top:
        pred.warnings.append("threshold not crossed within tabulated range")
    if last_ok < tail.h_min and tail.h_min > 1:
        pred.warnings.append(
            f"surrogate undefined below h={tail.h_min}; value truncated")
    return pred


def asymptote_M(L: float, beta: float) -> float:
    """sqrt(log L loglog L / (2 pi beta)), the maximum's growth law."""
    return math.sqrt(math.log(L) * math.log(math.log(L)) / (2 * math.pi * beta))


def asymptote_H(L: float, beta: float) -> float:
    return math.sqrt(math.log(L) * math.log(math.log(L)) / (4 * math.pi * beta))


def asymptote_M_star(L: float, beta: float) -> float:
    return (1 + SQRT2) / (2 * math.sqrt(math.pi * beta)) * math.sqrt(
        math.log(L) * math.log(math.log(L)))


def predict_M(L: float, tail: TailEstimate) -> Prediction:
    """max{h : tail(h) >= L^-2 log^5 L}."""
    if L <= 1:
        raise ConfigError("L must exceed 1")
    neg_log = 2.0 * math.log(L) - 5.0 * math.log(math.log(L))
    pred = _threshold_scan(tail, neg_log)
    if tail.params.p == 2.0 and tail.backend == "analytic":
        pred.asymptote = asymptote_M(L, tail.params.beta)
    return pred


def predict_H(L: float, beta: float, tail: TailEstimate) -> Prediction:
    """max{h : tail(h) >= 5 beta / L}; also exposes the p = 1 comparison
    value ceil(log L / 4 beta) via the asymptote field for SOS tails."""
    if L <= 1:
        raise ConfigError("L must exceed 1")
    pred = _threshold_scan(tail, math.log(L) - math.log(5.0 * beta))
    if tail.backend == "analytic":
        if tail.params.p == 2.0:
            pred.asymptote = asymptote_H(L, beta)
        elif tail.params.p == 1.0:
            pred.asymptote = math.ceil(math.log(L) / (4.0 * beta))
    return pred


@dataclass
class MStarPrediction:
    value: int
    window: tuple
    M: Prediction
    H: Prediction
    asymptote: float
    warnings: list


def predict_M_star(L: float, beta: float, tail: TailEstimate) -> MStarPrediction:
    """Floored-maximum window center: the plateau plus an unconstrained-size
    excursion, M* = H + M; the window is {M*, M*+1, M*+2}."""
    if tail.params.p != 2.0:
        raise ConfigError("M* composition is stated for p = 2")
    m = predict_M(L, tail)
    hh = predict_H(L, beta, tail)
    value = m.value + hh.value
    warnings = m.warnings + hh.warnings
    if warnings:
        warnings = warnings + ["window centered at H + M under degenerate scan"]
    return MStarPrediction(value=value, window=(value, value + 1, value + 2),
                           M=m, H=hh, asymptote=asymptote_M_star(L, beta),
                           warnings=warnings)


def ratio_scan(beta: float, exponents=range(3, 13)) -> list[dict]:
    """Closed-form H/M and M*/M along L = 10^e.

    The asymptote ratios are L-independent: H/M = 1/sqrt(2) and
    M*/M = 1 + 1/sqrt(2) (the coefficient ratio of the floored-maximum and
    maximum growth laws).
    """
    rows = []
    for e in exponents:
        L = 10.0 ** e
        m, hh, ms = asymptote_M(L, beta), asymptote_H(L, beta), asymptote_M_star(L, beta)
        rows.append({"L": L, "M": m, "H": hh, "M_star": ms,
                     "H_over_M": hh / m, "M_star_over_M": ms / m})
    return rows
