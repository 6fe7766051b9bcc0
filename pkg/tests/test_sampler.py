import math

import numpy as np
import pytest

from pinnacle_lab.errors import ConfigError
from pinnacle_lab.lattice import (INFINITY, HeightConfig, ModelParams,
                                  energy_delta, hamiltonian)
from pinnacle_lab.oracle import enumerate_ensemble, total_variation
from pinnacle_lab.sampler import (ChainSpec, ConfigCounter, HeatBathKernel,
                                  Schedule, _sweep_uniforms, _UniformSource,
                                  center_site, heat_bath_update, monotone_pair,
                                  run_chain)


def direct_conditional(params, neighbors, lo, hi):
    """Independent normalization of the heat-bath weights on [lo, hi]."""
    ks = np.arange(lo, hi + 1)
    if math.isinf(params.p):
        e = sum((ks != c).astype(float) for c in neighbors)
    else:
        e = sum(np.abs(ks - c).astype(float) ** params.p for c in neighbors)
    w = np.exp(-params.beta * e)
    return w / w.sum()


def test_conditional_zero_neighbors_p2():
    kernel = HeatBathKernel(ModelParams(p=2, beta=1))
    lo, probs = kernel.conditional((0, 0, 0, 0))
    expected = direct_conditional(ModelParams(p=2, beta=1), (0, 0, 0, 0), lo,
                                  lo + len(probs) - 1)
    assert probs == pytest.approx(expected, rel=1e-14)
    # direct normalization gives P(0) = 0.96466...; window tail mass < 1e-15
    assert probs[-lo] == pytest.approx(0.9646629465271074, abs=1e-12)


def test_conditional_zero_neighbors_floor():
    kernel = HeatBathKernel(ModelParams(p=2, beta=1, floor=True))
    lo, probs = kernel.conditional((0, 0, 0, 0))
    assert lo == 0
    assert probs[0] == pytest.approx(0.9820136815145024, abs=1e-12)


def test_conditional_rsos_split_neighbors_is_uniform():
    # neighbors (0,0,1,1): admissible {0,1}, both at 2 disagreements
    for beta in (0.7, 3.0, 30.0):
        kernel = HeatBathKernel(ModelParams(p=INFINITY, beta=beta))
        lo, probs = kernel.conditional((0, 0, 1, 1))
        assert lo == 0
        assert probs == pytest.approx([0.5, 0.5])


def test_window_rule_matches_spec_formula():
    for p, beta in ((2.0, 1.0), (1.0, 1.5), (2.5, 0.25)):
        kernel = HeatBathKernel(ModelParams(p=p, beta=beta))
        assert kernel.W == math.ceil((40.0 / beta) ** (1.0 / p)) + 2
        lo, hi = kernel.window((0, 2, 1, 1))
        assert (lo, hi) == (0 - kernel.W, 2 + kernel.W)


def test_detailed_balance_on_the_window():
    """P(k1)/P(k2) = exp(-beta (H(k1) - H(k2))), exactly on the window."""
    rng = np.random.default_rng(0)
    for p in (1.0, 2.0, 2.5, INFINITY):
        params = ModelParams(p=p, beta=0.8)
        kernel = HeatBathKernel(params)
        for _ in range(20):
            if math.isinf(p):
                base = int(rng.integers(-2, 3))
                nbs = tuple(base + int(rng.integers(-1, 2)) for _ in range(4))
            else:
                nbs = tuple(int(v) for v in rng.integers(-3, 4, size=4))
            lo, probs = kernel.conditional(nbs)
            hi = lo + len(probs) - 1
            # probe candidates near the neighbor hull, where the conditional
            # mass is far above the declared 1e-15 window truncation
            k1 = max(lo, min(nbs) - 1)
            k2 = min(hi, max(nbs) + 1)
            if k1 == k2:
                continue
            c = HeightConfig.flat(3, 0)
            for (dx, dy), v in zip(((1, 0), (-1, 0), (0, 1), (0, -1)), nbs):
                c.heights[1 + dy, 1 + dx] = v
            c.heights[1, 1] = k2
            d = energy_delta(c, (1, 1), k1, params)
            ratio = probs[k1 - lo] / probs[k2 - lo]
            assert ratio == pytest.approx(math.exp(-params.beta * d), rel=1e-12)


def test_heat_bath_update_public_op():
    config = HeightConfig.flat(3, 0)
    out = heat_bath_update(config, (1, 1), ModelParams(p=2, beta=1), 0.5)
    assert out.heights[1, 1] == 0          # median of the conditional
    assert (config.heights == 0).all()     # input untouched
    out = heat_bath_update(config, (1, 1), ModelParams(p=2, beta=1), 0.999)
    assert out.heights[1, 1] >= 1


def test_empty_stream():
    spec = ChainSpec(ModelParams(p=2, beta=1), L=3, seed=0, sweeps_burnin=5,
                     sweeps_sample=0)
    stream = run_chain(spec)
    assert len(stream) == 0


def test_same_seed_reproduces_the_stream():
    spec = ChainSpec(ModelParams(p=2, beta=1), L=3, seed=99, sweeps_burnin=20,
                     sweeps_sample=30)
    a = run_chain(spec, keep_snapshots=True)
    b = run_chain(spec, keep_snapshots=True)
    assert np.array_equal(a.max_height, b.max_height)
    assert all((x.heights == y.heights).all()
               for x, y in zip(a.snapshots, b.snapshots))


def test_observables_match_snapshots():
    spec = ChainSpec(ModelParams(p=2, beta=0.8), L=5, seed=2, sweeps_burnin=10,
                     sweeps_sample=25, thinning=2)
    stream = run_chain(spec, keep_snapshots=True)
    cy, cx = center_site(5)
    for k, snap in enumerate(stream.snapshots):
        assert stream.max_height[k] == snap.heights.max()
        assert stream.mean_height[k] == snap.heights.mean()
        assert stream.center_height[k] == snap.heights[cy, cx]


def test_uniform_addressing_is_blocked_but_stable():
    # the blocked reader and the one-shot helper must agree at every sweep
    src = _UniformSource(31337, 9)
    for s in (0, 1, 63, 64, 65, 500):
        assert np.array_equal(src.sweep(s), _sweep_uniforms(31337, s, 9))


def test_scalar_and_vector_paths_target_same_conditional():
    """One checkerboard half-sweep on a constant background must produce
    draws from the identical inverse CDF in both implementations."""
    params = ModelParams(p=2, beta=1.0)
    kernel = HeatBathKernel(params)
    padded = np.zeros((18, 18), dtype=np.int64)
    ys = np.arange(1, 17, dtype=np.int64)
    xs = np.full(16, 8, dtype=np.int64)
    u = np.linspace(0.001, 0.999, 16)
    kernel.update_class(padded, ys, xs, u)
    for y, val, uu in zip(ys, padded[ys, xs], u):
        assert val == kernel.draw((0, 0, 0, 0), uu)


def test_chain_agrees_with_exact_oracle_small():
    """2x2 box vs brute-force table, both schedules (reduced-size version of
    the acceptance criterion)."""
    params = ModelParams(p=2, beta=1.0)
    ens = enumerate_ensemble(2, 2, params)
    for schedule in (Schedule.SEQUENTIAL, Schedule.CHECKERBOARD):
        counter = ConfigCounter()
        spec = ChainSpec(params, L=2, seed=5, sweeps_burnin=500,
                         sweeps_sample=60_000, schedule=schedule)
        run_chain(spec, accumulators=(counter,))
        assert total_variation(ens, counter) < 0.02


def test_floored_chain_never_dips_below_zero():
    spec = ChainSpec(ModelParams(p=2, beta=0.6, floor=True), L=4, seed=8,
                     sweeps_burnin=0, sweeps_sample=200)
    stream = run_chain(spec, keep_snapshots=True)
    assert all((s.heights >= 0).all() for s in stream.snapshots)


def test_rsos_chain_stays_admissible():
    from pinnacle_lab.lattice import assert_admissible
    params = ModelParams(p=INFINITY, beta=0.8)
    spec = ChainSpec(params, L=4, seed=8, sweeps_burnin=0, sweeps_sample=100)
    stream = run_chain(spec, keep_snapshots=True)
    for snap in stream.snapshots:
        assert_admissible(snap, params)


def test_monotone_pair_identical_inits_stays_ordered():
    spec = ChainSpec(ModelParams(p=2, beta=1.0), L=6, seed=3, sweeps_burnin=0,
                     sweeps_sample=100)
    pair = monotone_pair(spec, HeightConfig.flat(6, 0), HeightConfig.flat(6, 0))
    assert pair.ordering_ok.all()
    assert np.array_equal(pair.lower_mean, pair.upper_mean)  # identical coupling


def test_monotone_pair_ordered_inits():
    spec = ChainSpec(ModelParams(p=2, beta=1.5), L=8, seed=3, sweeps_burnin=0,
                     sweeps_sample=300)
    pair = monotone_pair(spec, HeightConfig.flat(8, 0), HeightConfig.flat(8, 3))
    assert pair.ordering_ok.all()


def test_monotone_pair_floored_dominates_unfloored():
    spec = ChainSpec(ModelParams(p=2, beta=1.0), L=8, seed=17, sweeps_burnin=0,
                     sweeps_sample=400)
    pair = monotone_pair(spec, HeightConfig.flat(8, 0), HeightConfig.flat(8, 0),
                         lower_floor=False, upper_floor=True)
    assert pair.ordering_ok.all()
    assert (pair.upper_mean >= pair.lower_mean).all()
    assert pair.upper_mean.mean() > pair.lower_mean.mean()


def test_monotone_pair_rejects_unordered_inits():
    spec = ChainSpec(ModelParams(p=2, beta=1.0), L=4, seed=0, sweeps_burnin=0,
                     sweeps_sample=1)
    hi = HeightConfig.flat(4, 1)
    lo = HeightConfig.flat(4, 0)
    lo.heights[0, 0] = 5
    with pytest.raises(ConfigError):
        monotone_pair(spec, lo, hi)


def test_chain_spec_validation():
    with pytest.raises(ConfigError):
        ChainSpec(ModelParams(), L=3, seed=0, sweeps_burnin=0, sweeps_sample=1,
                  thinning=0)
    with pytest.raises(ConfigError):
        ChainSpec(ModelParams(), L=3, seed=0, sweeps_burnin=-1, sweeps_sample=1)
