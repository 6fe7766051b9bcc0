"""Brute-force Boltzmann tables on tiny truncated state spaces.

Ground truth for the sampler and the contour extractor.  Heights are
truncated to [j - K, j + K] around the boundary height j (or [0, K] under a
floor with j = 0 style setups), so a boundary-j ensemble is exactly the
boundary-0 ensemble relabeled by +j.  Truncation is an oracle artifact: with
K >= 3 and beta >= 1 the excluded mass is far below the comparison
tolerances used in the tests.

Configurations are indexed by their mixed-radix rank (site raster order,
least significant site last), which doubles as the stable config hash in CSV
output.  Weights are accumulated in chunks; exact log-weights are kept next
to the normalized probabilities because float64 probabilities underflow for
deeply suppressed states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, ConfigError
from .lattice import HeightConfig, ModelParams

_MAX_STATES = 10 ** 8
_CHUNK = 1 << 20


@dataclass
class TruncatedEnsemble:
    """Exhaustive normalized table over the truncated state space.

    ``probs[rank]`` is the Boltzmann probability of the configuration with
    the given mixed-radix rank; ``neg_beta_H[rank]`` the exact log-weight.
    """

    L: int
    K: int
    params: ModelParams
    lo: int                    # smallest admissible height
    n_levels: int              # heights run lo .. lo + n_levels - 1
    probs: np.ndarray
    neg_beta_H: np.ndarray
    log_Z: float
    admissible: np.ndarray | None = None   # bool mask when RSOS prunes states

    @property
    def n_states(self) -> int:
        return len(self.probs)

    def rank_of(self, heights) -> int:
        h = np.asarray(heights, dtype=np.int64).ravel()
        if len(h) != self.L * self.L:
            raise ConfigError("wrong number of sites")
        digits = h - self.lo
        if (digits < 0).any() or (digits >= self.n_levels).any():
            raise ConfigError("heights outside the truncation window")
        rank = 0
        for d in digits:
            rank = rank * self.n_levels + int(d)
        return rank

    def config_of(self, rank: int) -> HeightConfig:
        digits = np.empty(self.L * self.L, dtype=np.int64)
        for s in range(self.L * self.L - 1, -1, -1):
            digits[s] = rank % self.n_levels
            rank //= self.n_levels
        return HeightConfig(digits.reshape(self.L, self.L) + self.lo,
                            self.params.boundary_height)

    def probability(self, heights) -> float:
        return float(self.probs[self.rank_of(heights)])

    def site_marginal(self, site: tuple[int, int]) -> np.ndarray:
        """Exact marginal distribution of one site over the height levels."""
        x, y = site
        s = y * self.L + x
        period = self.n_levels ** (self.L * self.L - 1 - s)
        out = np.zeros(self.n_levels)
        for start in range(0, self.n_states, _CHUNK):
            ranks = np.arange(start, min(start + _CHUNK, self.n_states),
                              dtype=np.int64)
            digit = (ranks // period) % self.n_levels
            np.add.at(out, digit, self.probs[start:start + len(ranks)])
        return out


def _site_digits(ranks: np.ndarray, n_sites: int, n_levels: int) -> np.ndarray:
    digits = np.empty((len(ranks), n_sites), dtype=np.int64)
    r = ranks.copy()
    for s in range(n_sites - 1, -1, -1):
        digits[:, s] = r % n_levels
        r //= n_levels
    return digits


def _chunk_energies(grids: np.ndarray, boundary: int, p: float) -> np.ndarray:
    """Gradient energies of a (n, L, L) stack under constant boundary."""
    diffs = [
        grids[:, 1:, :] - grids[:, :-1, :],
        grids[:, :, 1:] - grids[:, :, :-1],
        grids[:, 0, :] - boundary, grids[:, -1, :] - boundary,
        grids[:, :, 0] - boundary, grids[:, :, -1] - boundary,
    ]
    if math.isinf(p):
        return sum((d != 0).sum(axis=tuple(range(1, d.ndim))) for d in diffs)
    if p == 2.0:
        return sum((d * d).sum(axis=tuple(range(1, d.ndim))) for d in diffs)
    if p == 1.0:
        return sum(np.abs(d).sum(axis=tuple(range(1, d.ndim))) for d in diffs)
    return sum((np.abs(d).astype(float) ** p).sum(axis=tuple(range(1, d.ndim)))
               for d in diffs)


def _rsos_admissible(grids: np.ndarray, boundary: int) -> np.ndarray:
    ok = np.ones(len(grids), dtype=bool)
    for d in (grids[:, 1:, :] - grids[:, :-1, :],
              grids[:, :, 1:] - grids[:, :, :-1],
              grids[:, 0, :] - boundary, grids[:, -1, :] - boundary,
              grids[:, :, 0] - boundary, grids[:, :, -1] - boundary):
        ok &= (np.abs(d) <= 1).all(axis=tuple(range(1, d.ndim)))
    return ok


def enumerate_ensemble(L: int, K: int, params: ModelParams) -> TruncatedEnsemble:
    """Exhaustive Boltzmann table for the L x L box with height cutoff K."""
    if L < 1 or L > 4:
        raise ConfigError("exact enumeration supports 1 <= L <= 4")
    if K < 0:
        raise ConfigError("K must be >= 0")
    j = params.boundary_height
    if params.floor:
        lo = max(0, j - K)
        hi = j + K
    else:
        lo = j - K
        hi = j + K
    n_levels = hi - lo + 1
    n_sites = L * L
    n_states = n_levels ** n_sites
    if n_states > _MAX_STATES:
        raise BudgetError(
            f"state space has {n_states} configurations, budget is {_MAX_STATES}")

    neg_beta_H = np.empty(n_states, dtype=np.float64)
    admissible = np.ones(n_states, dtype=bool) if params.is_rsos else None
    for start in range(0, n_states, _CHUNK):
        ranks = np.arange(start, min(start + _CHUNK, n_states), dtype=np.int64)
        grids = (_site_digits(ranks, n_sites, n_levels) + lo).reshape(-1, L, L)
        energies = _chunk_energies(grids, j, params.p)
        neg_beta_H[start:start + len(ranks)] = -params.beta * energies
        if params.is_rsos:
            admissible[start:start + len(ranks)] = _rsos_admissible(grids, j)

    if params.is_rsos:
        neg_beta_H = np.where(admissible, neg_beta_H, -np.inf)
    m = neg_beta_H.max()
    log_Z = m + math.log(np.exp(neg_beta_H - m).sum())
    probs = np.exp(neg_beta_H - log_Z)
    return TruncatedEnsemble(L=L, K=K, params=params, lo=lo, n_levels=n_levels,
                             probs=probs, neg_beta_H=neg_beta_H, log_Z=log_Z,
                             admissible=admissible)


def marginal_tail(ensemble: TruncatedEnsemble, site: tuple[int, int], h: int) -> float:
    """Exact pi(eta_site >= h) from the table."""
    lo = ensemble.lo
    hi = lo + ensemble.n_levels - 1
    if h <= lo:
        return 1.0
    if h > hi:
        return 0.0
    marg = ensemble.site_marginal(site)
    return float(marg[h - lo:].sum())


def total_variation(ensemble: TruncatedEnsemble, counter) -> float:
    """TV distance between the table and an empirical ConfigCounter.

    Sampled configurations outside the truncation window count their full
    empirical mass (the table assigns them zero).
    """
    n = sum(counter.counts.values())
    if n == 0:
        raise ConfigError("empty sample")
    seen_model_mass = 0.0
    acc = 0.0
    for heights, c in counter.items():
        emp = c / n
        try:
            p = ensemble.probability(heights)
        except ConfigError:
            p = 0.0
        else:
            seen_model_mass += p
        acc += abs(emp - p)
    return 0.5 * (acc + (1.0 - seen_model_mass))
