"""Heat-bath Markov chain for the box measure and its floored version.

Every site update draws the new height from the exact single-site
conditional weight(k) ~ exp(-beta * sum_{y~x} |k - eta_y|^p).  For finite p
the candidate window is [min_y - W, max_y + W] with W = ceil((40/beta)^(1/p)) + 2,
which keeps the neglected conditional mass below 1e-15 of the total; for
p = infinity the window is the RSOS-admissible interval [max_y - 1, min_y + 1]
and the weight is exp(-beta * #{y : eta_y != k}).  A floor restricts the
window to k >= 0.

Randomness is counter-based: the uniform used at (sweep s, site i) is entry
i of a Philox stream keyed by the chain seed with counter s, independent of
the visit schedule and of any worker decomposition.  Sites are visited in
raster order (SEQUENTIAL) or one parity class at a time (CHECKERBOARD); in
the latter case all same-parity updates are conditionally independent given
the other class, so they may execute concurrently without changing the
retained stream.

New heights are read off by inverse CDF.  Because the conditionals are
stochastically monotone in the neighbor heights, feeding two ordered chains
the same uniforms preserves sitewise ordering; ``monotone_pair`` runs that
coupling and asserts the ordering after every sweep.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, OrderingViolationError
from .lattice import HeightConfig, ModelParams, assert_admissible

_SCALAR_SIZE_LIMIT = 256  # boxes below this many sites skip numpy dispatch


class Schedule(Enum):
    SEQUENTIAL = "sequential"
    CHECKERBOARD = "checkerboard"


@dataclass(frozen=True)
class ChainSpec:
    params: ModelParams
    L: int
    seed: int
    sweeps_burnin: int
    sweeps_sample: int
    thinning: int = 1
    schedule: Schedule = Schedule.SEQUENTIAL

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError("L must be >= 1")
        if self.thinning < 1:
            raise ConfigError("thinning must be >= 1")
        if self.sweeps_burnin < 0 or self.sweeps_sample < 0:
            raise ConfigError("sweep counts must be >= 0")


def default_burnin(L: int) -> int:
    """Burn-in default, 200*L sweeps; calibrated for beta <= 2, override
    above that (acceptance checks use oracle comparison, not mixing theory)."""
    return 200 * L


@dataclass
class SampleStream:
    """Retained observables (and optionally snapshots) of one chain run."""

    spec: ChainSpec
    sweep_index: np.ndarray
    max_height: np.ndarray
    mean_height: np.ndarray
    center_height: np.ndarray
    final: HeightConfig
    snapshots: list[HeightConfig] | None = None

    def __len__(self):
        return len(self.sweep_index)


def center_site(L: int) -> tuple[int, int]:
    c = (L - 1) // 2
    return (c, c)


_SWEEP_BLOCK = 64


def _sweep_uniforms(seed: int, sweep: int, n: int) -> np.ndarray:
    """Uniforms for one sweep, addressed by (seed, sweep, raster site index).

    Sweep s reads slice s - s0 of the Philox stream whose counter is the
    block index s0 / block; the map (seed, sweep, site) -> uniform never
    depends on the visit schedule or on any worker decomposition.
    """
    block_index, offset = divmod(sweep, _SWEEP_BLOCK)
    bits = np.random.Philox(key=np.uint64(seed),
                            counter=np.array([0, 0, 0, block_index],
                                             dtype=np.uint64))
    block = np.random.Generator(bits).random(_SWEEP_BLOCK * n)
    return block[offset * n:(offset + 1) * n]


class _UniformSource:
    """Blocked reader of the per-sweep uniforms (one Philox init per block)."""

    def __init__(self, seed: int, n: int):
        self.seed = seed
        self.n = n
        self.block_index = -1
        self.block = None

    def sweep(self, s: int) -> np.ndarray:
        block_index, offset = divmod(s, _SWEEP_BLOCK)
        if block_index != self.block_index:
            bits = np.random.Philox(key=np.uint64(self.seed),
                                    counter=np.array([0, 0, 0, block_index],
                                                     dtype=np.uint64))
            self.block = np.random.Generator(bits).random(_SWEEP_BLOCK * self.n)
            self.block_index = block_index
        return self.block[offset * self.n:(offset + 1) * self.n]


class HeatBathKernel:
    """Single-site conditional for fixed model parameters.

    Exposes a scalar cached-CDF path (used for small boxes and the public
    single-site update) and a vectorized path that updates a whole parity
    class at once.  Both build the identical candidate window and weights.
    """

    def __init__(self, params: ModelParams):
        self.params = params
        self.beta = params.beta
        self.p = params.p
        self.rsos = params.is_rsos
        self.floor = params.floor
        if self.rsos:
            self.W = 1
        else:
            self.W = math.ceil((40.0 / self.beta) ** (1.0 / self.p)) + 2
        self._cache: dict[tuple[int, ...], tuple[int, list[float], float]] = {}

    # -- window and weights ---------------------------------------------

    def window(self, neighbors) -> tuple[int, int]:
        mn, mx = min(neighbors), max(neighbors)
        if self.rsos:
            lo, hi = mx - 1, mn + 1
        else:
            lo, hi = mn - self.W, mx + self.W
        if self.floor:
            lo = max(lo, 0)
        if lo > hi:
            raise ConfigError(f"empty candidate window for neighbors {neighbors}")
        return lo, hi

    def _energies(self, ks: np.ndarray, neighbors) -> np.ndarray:
        if self.rsos:
            e = np.zeros(len(ks))
            for c in neighbors:
                e += ks != c
            return e
        if self.p == 2.0:
            e = np.zeros(len(ks), dtype=np.int64)
            for c in neighbors:
                d = ks - c
                e += d * d
            return e.astype(float)
        if self.p == 1.0:
            e = np.zeros(len(ks), dtype=np.int64)
            for c in neighbors:
                e += np.abs(ks - c)
            return e.astype(float)
        e = np.zeros(len(ks))
        for c in neighbors:
            e += np.abs(ks - c).astype(float) ** self.p
        return e

    def conditional(self, neighbors) -> tuple[int, np.ndarray]:
        """(window base, normalized probabilities) for the given 4 neighbor
        heights."""
        lo, hi = self.window(neighbors)
        ks = np.arange(lo, hi + 1, dtype=np.int64)
        e = self._energies(ks, neighbors)
        w = np.exp(-self.beta * (e - e.min()))
        return lo, w / w.sum()

    def _cdf_entry(self, key: tuple[int, ...]):
        entry = self._cache.get(key)
        if entry is None:
            lo, probs = self.conditional(key)
            cdf = np.cumsum(probs)
            entry = (lo, cdf.tolist(), float(cdf[-1]))
            self._cache[key] = entry
        return entry

    def draw(self, neighbors, u: float) -> int:
        """Inverse-CDF draw of the new height given neighbor heights."""
        key = tuple(sorted(neighbors))
        lo, cdf, total = self._cdf_entry(key)
        return lo + bisect_left(cdf, u * total)

    # -- vectorized parity-class update ----------------------------------

    def update_class(self, padded: np.ndarray, ys: np.ndarray, xs: np.ndarray,
                     u: np.ndarray) -> None:
        """Redraw heights at padded[ys, xs] from their conditionals, in place."""
        c1 = padded[ys, xs + 1]
        c2 = padded[ys, xs - 1]
        c3 = padded[ys + 1, xs]
        c4 = padded[ys - 1, xs]
        mn = np.minimum(np.minimum(c1, c2), np.minimum(c3, c4))
        mx = np.maximum(np.maximum(c1, c2), np.maximum(c3, c4))
        if self.rsos:
            base = mx - 1
            top = mn + 1
        else:
            base = mn - self.W
            top = mx + self.W
        if self.floor:
            base = np.maximum(base, 0)
        width = int((top - base).max()) + 1
        k = base[:, None] + np.arange(width, dtype=np.int64)[None, :]
        if self.rsos:
            e = ((k != c1[:, None]).astype(np.float64)
                 + (k != c2[:, None]) + (k != c3[:, None]) + (k != c4[:, None]))
        elif self.p == 2.0:
            e = np.zeros(k.shape, dtype=np.int64)
            for c in (c1, c2, c3, c4):
                d = k - c[:, None]
                e += d * d
            e = e.astype(np.float64)
        elif self.p == 1.0:
            e = np.zeros(k.shape, dtype=np.int64)
            for c in (c1, c2, c3, c4):
                e += np.abs(k - c[:, None])
            e = e.astype(np.float64)
        else:
            e = np.zeros(k.shape, dtype=np.float64)
            for c in (c1, c2, c3, c4):
                e += np.abs(k - c[:, None]).astype(np.float64) ** self.p
        e *= self.beta
        e[k > top[:, None]] = np.inf
        np.exp(e.min(axis=1, keepdims=True) - e, out=e)
        np.cumsum(e, axis=1, out=e)
        t = u * e[:, -1]
        idx = (e < t[:, None]).sum(axis=1)
        padded[ys, xs] = base + idx


class _ChainState:
    """Padded lattice plus precomputed visit orders for one chain."""

    def __init__(self, spec: ChainSpec, initial: HeightConfig, kernel: HeatBathKernel):
        L = spec.L
        if initial.L != L:
            raise ConfigError(f"initial config is {initial.L}x{initial.L}, spec wants {L}")
        assert_admissible(initial, spec.params)
        self.L = L
        self.stride = L + 2
        self.boundary = initial.boundary_height
        self.kernel = kernel
        self.padded = np.full((L + 2, L + 2), self.boundary, dtype=np.int64)
        self.padded[1:-1, 1:-1] = initial.heights
        self.scalar = L * L < _SCALAR_SIZE_LIMIT
        ys, xs = np.mgrid[0:L, 0:L]
        parity = (ys + xs) & 1
        raster = ys * L + xs
        if spec.schedule is Schedule.SEQUENTIAL:
            groups = [np.ones((L, L), dtype=bool)]
        else:
            groups = [parity == 0, parity == 1]
        self.classes = []
        for g in groups:
            self.classes.append((ys[g].ravel() + 1, xs[g].ravel() + 1, raster[g].ravel()))
        if self.scalar:
            self.flat = self.padded.ravel().tolist()
            self.scalar_orders = [
                ([int(y * self.stride + x) for y, x in zip(ys_, xs_)], us_.tolist())
                for ys_, xs_, us_ in self.classes]
        self.sequential = spec.schedule is Schedule.SEQUENTIAL

    def sweep(self, u: np.ndarray) -> None:
        if self.scalar:
            flat = self.flat
            stride = self.stride
            kernel = self.kernel
            draw = kernel.draw
            ul = u.tolist()
            for order, uidx in self.scalar_orders:
                for pos, r in zip(order, uidx):
                    nbs = (flat[pos - 1], flat[pos + 1],
                           flat[pos - stride], flat[pos + stride])
                    flat[pos] = draw(nbs, ul[r])
            return
        if self.sequential:
            # raster order: per-site scalar semantics even on big boxes
            padded = self.padded
            stride = self.stride
            flat = padded.ravel()
            kernel = self.kernel
            ul = u.tolist()
            ys, xs, rs = self.classes[0]
            for y, x, r in zip(ys.tolist(), xs.tolist(), rs.tolist()):
                pos = y * stride + x
                nbs = (int(flat[pos - 1]), int(flat[pos + 1]),
                       int(flat[pos - stride]), int(flat[pos + stride]))
                flat[pos] = kernel.draw(nbs, ul[r])
            return
        for ys, xs, rs in self.classes:
            self.kernel.update_class(self.padded, ys, xs, u[rs])

    def heights(self) -> np.ndarray:
        if self.scalar:
            arr = np.array(self.flat, dtype=np.int64).reshape(self.L + 2, self.L + 2)
            return arr[1:-1, 1:-1]
        return self.padded[1:-1, 1:-1]

    def config(self) -> HeightConfig:
        return HeightConfig(self.heights().copy(), self.boundary)


def default_initial(spec: ChainSpec) -> HeightConfig:
    b = spec.params.boundary_height
    v = max(b, 0) if spec.params.floor else b
    return HeightConfig.flat(spec.L, v, b)


def heat_bath_update(config: HeightConfig, site: tuple[int, int],
                     params: ModelParams, random_draw: float) -> HeightConfig:
    """One exact heat-bath update at an interior site; returns a new config."""
    x, y = site
    if not (0 <= x < config.L and 0 <= y < config.L):
        raise ConfigError(f"site {site} not interior to the {config.L}-box")
    assert_admissible(config, params)
    kernel = HeatBathKernel(params)
    h = config.heights
    L = config.L
    b = config.boundary_height
    nbs = tuple(
        int(h[ny, nx]) if 0 <= nx < L and 0 <= ny < L else b
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)))
    out = config.copy()
    out.heights[y, x] = kernel.draw(nbs, random_draw)
    return out


def run_chain(spec: ChainSpec, initial: HeightConfig | None = None,
              keep_snapshots: bool = False, accumulators=(),
              snapshot_every: int | None = None,
              snapshot_sink=None) -> SampleStream:
    """Burn in, then sample; returns ``spec.sweeps_sample`` retained samples
    spaced ``spec.thinning`` sweeps apart.

    ``accumulators`` are objects with an ``update(heights)`` method invoked on
    every retained sample (histograms, tail counters, ...).  They keep memory
    flat when a run retains more snapshots than it is practical to store.
    """
    if initial is None:
        initial = default_initial(spec)
    kernel = HeatBathKernel(spec.params)
    state = _ChainState(spec, initial, kernel)
    n = spec.sweeps_sample
    sweep_index = np.empty(n, dtype=np.int64)
    max_h = np.empty(n, dtype=np.int64)
    mean_h = np.empty(n, dtype=np.float64)
    center_h = np.empty(n, dtype=np.int64)
    cy, cx = center_site(spec.L)
    snapshots = [] if keep_snapshots else None
    total = spec.sweeps_burnin + n * spec.thinning
    uniforms = _UniformSource(spec.seed, spec.L * spec.L)
    got = 0
    for s in range(total):
        state.sweep(uniforms.sweep(s))
        k = s - spec.sweeps_burnin + 1
        if k >= 1 and k % spec.thinning == 0:
            h = state.heights()
            sweep_index[got] = s
            max_h[got] = h.max()
            mean_h[got] = h.mean()
            center_h[got] = h[cy, cx]
            for acc in accumulators:
                acc.update(h)
            if keep_snapshots:
                snapshots.append(HeightConfig(h.copy(), state.boundary))
            if snapshot_every and (got + 1) % snapshot_every == 0 and snapshot_sink:
                snapshot_sink(got, HeightConfig(h.copy(), state.boundary))
            got += 1
    return SampleStream(spec=spec, sweep_index=sweep_index, max_height=max_h,
                        mean_height=mean_h, center_height=center_h,
                        final=state.config(), snapshots=snapshots)


@dataclass
class PairStream:
    """Output of the monotone coupling: per-sweep ordering flags plus
    per-retained-sample mean heights of both chains."""

    spec: ChainSpec
    ordering_ok: np.ndarray
    lower_mean: np.ndarray
    upper_mean: np.ndarray
    lower_final: HeightConfig
    upper_final: HeightConfig


def monotone_pair(spec: ChainSpec, lower_init: HeightConfig,
                  upper_init: HeightConfig,
                  lower_floor: bool | None = None,
                  upper_floor: bool | None = None) -> PairStream:
    """Drive two ordered chains with shared uniforms via inverse-CDF updates.

    The per-chain floor may be overridden to compare the floored measure
    against the unfloored one (same seed): a floored upper chain started
    equal to an unfloored lower chain stays above it sitewise.

    Raises OrderingViolationError the first sweep the sitewise ordering
    fails; that is a correctness bug, not noise.
    """
    if not (lower_init.heights <= upper_init.heights).all():
        raise ConfigError("lower_init must be sitewise <= upper_init")
    if lower_init.boundary_height > upper_init.boundary_height:
        raise ConfigError("lower boundary must be <= upper boundary")

    def chain_for(floor_override, init):
        params = spec.params if floor_override is None else ModelParams(
            p=spec.params.p, beta=spec.params.beta, floor=floor_override,
            boundary_height=spec.params.boundary_height)
        return _ChainState(spec, init, HeatBathKernel(params))

    lo = chain_for(lower_floor, lower_init)
    up = chain_for(upper_floor, upper_init)
    total = spec.sweeps_burnin + spec.sweeps_sample * spec.thinning
    ordering = np.zeros(total, dtype=bool)
    n = spec.sweeps_sample
    lo_mean = np.empty(n)
    up_mean = np.empty(n)
    uniforms = _UniformSource(spec.seed, spec.L * spec.L)
    got = 0
    for s in range(total):
        u = uniforms.sweep(s)
        lo.sweep(u)
        up.sweep(u)
        hl, hu = lo.heights(), up.heights()
        if not (hl <= hu).all():
            raise OrderingViolationError(
                f"sitewise ordering violated at sweep {s}")
        ordering[s] = True
        k = s - spec.sweeps_burnin + 1
        if k >= 1 and k % spec.thinning == 0:
            lo_mean[got] = hl.mean()
            up_mean[got] = hu.mean()
            got += 1
    return PairStream(spec=spec, ordering_ok=ordering, lower_mean=lo_mean,
                      upper_mean=up_mean, lower_final=lo.config(),
                      upper_final=up.config())


# -- accumulators -------------------------------------------------------------

class ConfigCounter:
    """Counts retained configurations by value (small boxes only)."""

    def __init__(self):
        self.counts: Counter[bytes] = Counter()
        self.shape = None

    def update(self, heights: np.ndarray) -> None:
        self.shape = heights.shape
        self.counts[heights.tobytes()] += 1

    def items(self):
        for key, c in self.counts.items():
            yield np.frombuffer(key, dtype=np.int64).reshape(self.shape), c


class CenterTally:
    """Histogram of the center-site height over retained samples."""

    def __init__(self, L: int):
        self.site = center_site(L)
        self.counts: Counter[int] = Counter()
        self.n = 0

    def update(self, heights: np.ndarray) -> None:
        self.counts[int(heights[self.site])] += 1
        self.n += 1


class HeightHistogram:
    """Pooled histogram of all site heights over retained samples."""

    def __init__(self):
        self.counts: Counter[int] = Counter()
        self.n_samples = 0

    def update(self, heights: np.ndarray) -> None:
        values, counts = np.unique(heights, return_counts=True)
        for v, c in zip(values.tolist(), counts.tolist()):
            self.counts[v] += c
        self.n_samples += 1
