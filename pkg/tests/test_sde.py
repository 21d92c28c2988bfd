"""Euler-Maruyama exit sampling, histograms, observables, and decay fits."""

import math

import numpy as np
import pytest

from wellexit import sde
from wellexit.errors import (
    AllCensored,
    OverlappingRegions,
    StartOutsideDomain,
    ZeroCount,
)
from wellexit.exitlaw import exact_exit_probability_1d
from wellexit.landscape import (
    Interval,
    Polynomial,
    ball,
    double_well_1d,
    double_well_2d,
)

import oracles

FLAT = Polynomial({(0,): 0.0})
UNIT = Interval(0.0, 1.0)


def _first_coord_counts(samples, cut=0.0):
    left = sum(1 for s in samples if not s.censored and s.exit_point[0] < cut)
    right = sum(1 for s in samples if not s.censored and s.exit_point[0] > cut)
    return left, right


# ---------------------------------------------------------------------------
# configuration validation
# ---------------------------------------------------------------------------

def test_config_rejects_bad_fields():
    ok = dict(h=1.0, n_paths=10, seed=1, start=0.5, max_time=1.0)
    sde.SimConfig(**ok)
    for bad in (dict(h=0.0), dict(h=-1.0), dict(max_time=0.0),
                dict(n_paths=-1), dict(seed=-1), dict(seed=2 ** 64),
                dict(dt=0.0), dict(dt=-0.1)):
        with pytest.raises(ValueError):
            sde.SimConfig(**{**ok, **bad})


def test_start_outside_domain_raises():
    cfg = sde.SimConfig(h=1.0, n_paths=4, seed=1, start=1.5, max_time=1.0)
    with pytest.raises(StartOutsideDomain):
        sde.simulate_exit(FLAT, UNIT, cfg)


def test_zero_paths_give_empty_list():
    cfg = sde.SimConfig(h=1.0, n_paths=0, seed=1, start=0.5, max_time=1.0)
    assert sde.simulate_exit(FLAT, UNIT, cfg) == []


def test_resolve_dt():
    cfg = sde.SimConfig(h=1.0, n_paths=1, seed=1, start=0.5, max_time=1.0,
                        dt=0.003)
    assert sde.resolve_dt(FLAT, UNIT, cfg) == 0.003
    auto = sde.SimConfig(h=1.0, n_paths=1, seed=1, start=0.5, max_time=1.0)
    dt = sde.resolve_dt(FLAT, UNIT, auto)
    assert 0.0 < dt < 1.0          # zero drift must not blow the heuristic up


def test_coarse_dt_warns():
    f = double_well_1d()
    cfg = sde.SimConfig(h=0.2, n_paths=2, seed=1, start=-1.0, max_time=0.5,
                        dt=0.05)
    with pytest.warns(UserWarning, match="stability"):
        sde.simulate_exit(f, Interval(-1.5, 1.5), cfg)


def test_compiled_backend_is_built():
    assert sde.HAVE_COMPILED


# ---------------------------------------------------------------------------
# exit sampling against exact laws
# ---------------------------------------------------------------------------

def test_driftless_splits_evenly():
    cfg = sde.SimConfig(h=1.0, n_paths=10_000, seed=42, start=0.5,
                        max_time=50.0)
    samples = sde.simulate_exit(FLAT, UNIT, cfg)
    assert len(samples) == 10_000
    assert not any(s.censored for s in samples)
    hist = sde.histogram(samples, [sde.Endpoint(0.0), sde.Endpoint(1.0)],
                         dom=UNIT)
    assert hist.leftover == 0
    lo, hi = hist.wilson(0, 3.0)
    assert lo <= 0.5 <= hi


def test_driftless_linear_hitting_probability():
    # exact law for Brownian motion: P[exit left | start x] = (b-x)/(b-a).
    # dt is deliberately small so the crossing bias (~0.58 sqrt(h dt)) is
    # buried inside the Monte Carlo band.
    rng = np.random.default_rng(2024)
    for x in rng.uniform(0.1, 0.9, size=5):
        cfg = sde.SimConfig(h=1.0, n_paths=4000, seed=int(1000 * x),
                            start=float(x), max_time=50.0, dt=1e-4)
        samples = sde.simulate_exit(FLAT, UNIT, cfg)
        hist = sde.histogram(samples, [sde.Endpoint(0.0)], dom=UNIT)
        lo, hi = hist.wilson(0, 3.0)
        assert lo <= 1.0 - x <= hi, f"start {x}"


def test_constant_drift_matches_scale_function():
    f = Polynomial({(1,): 1.0})
    cfg = sde.SimConfig(h=0.1, n_paths=10_000, seed=7, start=0.5,
                        max_time=50.0)
    samples = sde.simulate_exit(f, UNIT, cfg)
    hist = sde.histogram(samples, [sde.Endpoint(0.0)], dom=UNIT)
    exact = exact_exit_probability_1d(f, (0.0, 1.0), 0.5, 0.1)
    lo, hi = hist.wilson(0, 3.0)
    assert lo <= exact <= hi


def test_double_well_side_probability_within_3_sigma():
    f = double_well_1d(tilt=-0.3)
    dom = Interval(-1.22, 1.33)
    cfg = sde.SimConfig(h=0.35, n_paths=20_000, seed=5, start=-1.0,
                        max_time=120.0)
    samples = sde.simulate_exit(f, dom, cfg)
    _, right = _first_coord_counts(samples)
    # the Euler chain sees boundaries pushed out by ~0.58 sqrt(h dt)
    dt = sde.resolve_dt(f, dom, cfg)
    shift = 0.5826 * math.sqrt(cfg.h * dt)
    p_shift = 1.0 - exact_exit_probability_1d(
        f, (dom.a - shift, dom.b + shift), -1.0, cfg.h)
    sigma = math.sqrt(p_shift * (1.0 - p_shift) / cfg.n_paths)
    assert abs(right / cfg.n_paths - p_shift) <= 3.0 * sigma


def test_halving_dt_stays_inside_statistical_band():
    f = double_well_1d(tilt=-0.3)
    dom = Interval(-1.22, 1.33)
    base = sde.resolve_dt(f, dom, sde.SimConfig(
        h=0.35, n_paths=1, seed=0, start=-1.0, max_time=1.0))
    ps = []
    for dt in (base, base / 2.0):
        cfg = sde.SimConfig(h=0.35, n_paths=20_000, seed=11, start=-1.0,
                            max_time=120.0, dt=dt)
        samples = sde.simulate_exit(f, dom, cfg)
        _, right = _first_coord_counts(samples)
        ps.append(right / cfg.n_paths)
    pbar = sum(ps) / 2.0
    band = 3.0 * math.sqrt(2.0 * pbar * (1.0 - pbar) / 20_000)
    assert abs(ps[0] - ps[1]) <= band


# ---------------------------------------------------------------------------
# determinism and backend parity
# ---------------------------------------------------------------------------

def test_bit_identical_reruns_threads_and_backends():
    f = double_well_1d()
    dom = Interval(-1.5, 1.5)
    cfg = sde.SimConfig(h=0.3, n_paths=300, seed=99, start=-1.0,
                        max_time=100.0)
    a = sde.simulate_exit(f, dom, cfg)
    assert sde.simulate_exit(f, dom, cfg) == a
    assert sde.simulate_exit(f, dom, cfg, n_threads=4) == a
    assert sde.simulate_exit(f, dom, cfg, backend="numpy") == a


def test_backend_parity_2d_ball():
    f = double_well_2d(c=3.0)
    dom = ball([0.0, 0.0], 1.5)
    cfg = sde.SimConfig(h=0.5, n_paths=64, seed=3, start=(1.0, 0.0),
                        max_time=30.0)
    fast = sde.simulate_exit(f, dom, cfg, backend="compiled")
    slow = sde.simulate_exit(f, dom, cfg, backend="numpy")
    assert fast == slow


def test_streams_are_keyed_by_path_index():
    # a shorter run is a prefix of a longer one: path i never depends on
    # how many other paths exist
    f = double_well_1d()
    dom = Interval(-1.5, 1.5)
    mk = lambda n: sde.SimConfig(h=0.4, n_paths=n, seed=17, start=-1.0,
                                 max_time=50.0)
    long = sde.simulate_exit(f, dom, mk(50))
    short = sde.simulate_exit(f, dom, mk(30))
    assert long[:30] == short


def test_exit_points_sit_on_the_boundary():
    f = double_well_1d()
    cfg = sde.SimConfig(h=0.4, n_paths=500, seed=1, start=-1.0,
                        max_time=100.0)
    for s in sde.simulate_exit(f, Interval(-1.5, 1.5), cfg):
        if not s.censored:
            assert s.exit_point[0] in (-1.5, 1.5)  # exact endpoints in 1D

    f2 = double_well_2d(c=3.0)
    dom = ball([0.0, 0.0], 1.5)
    cfg2 = sde.SimConfig(h=0.6, n_paths=128, seed=2, start=(1.0, 0.0),
                         max_time=60.0)
    for s in sde.simulate_exit(f2, dom, cfg2):
        if not s.censored:
            assert abs(dom.g.eval(s.exit_point)) < 1e-10


def test_per_path_starts():
    starts = [[0.2], [0.5], [0.8]]
    cfg = sde.SimConfig(h=1.0, n_paths=3, seed=1, start=starts, max_time=20.0)
    samples = sde.simulate_exit(FLAT, UNIT, cfg)
    assert len(samples) == 3
    with pytest.raises(ValueError):
        bad = sde.SimConfig(h=1.0, n_paths=2, seed=1, start=starts,
                            max_time=20.0)
        sde.simulate_exit(FLAT, UNIT, bad)


def test_censoring_is_recorded_not_dropped():
    # deep well, tiny budget: essentially every path is censored
    f = double_well_1d()
    cfg = sde.SimConfig(h=0.05, n_paths=50, seed=8, start=-1.0, max_time=0.5)
    samples = sde.simulate_exit(f, Interval(-1.5, 1.5), cfg)
    assert len(samples) == 50
    censored = [s for s in samples if s.censored]
    assert censored
    for s in censored:
        assert -1.5 < s.exit_point[0] < 1.5
    hist = sde.histogram(samples, [sde.Endpoint(-1.5), sde.Endpoint(1.5)])
    assert hist.censored == len(censored)
    assert sum(hist.counts) + hist.leftover + hist.censored == 50
    if len(censored) == 50:
        with pytest.raises(AllCensored):
            sde.estimate_observable(samples, lambda p: 1.0)


# ---------------------------------------------------------------------------
# histograms
# ---------------------------------------------------------------------------

def _synthetic(points, censored=0):
    out = [sde.ExitSample(i, tuple(p), 1.0, False)
           for i, p in enumerate(points)]
    out += [sde.ExitSample(len(points) + j, (0.0,) * len(points[0]), 9.9, True)
            for j in range(censored)]
    return out


def test_histogram_counts_all_at_one_endpoint():
    samples = _synthetic([(0.0,)] * 7)
    hist = sde.histogram(samples, [sde.Endpoint(0.0), sde.Endpoint(1.0)])
    assert hist.counts == (7, 0)
    assert hist.leftover == 0 and hist.censored == 0


def test_histogram_leftover_when_regions_miss():
    samples = _synthetic([(0.3,)] * 5)
    hist = sde.histogram(samples, [sde.Endpoint(0.0)])
    assert hist.counts == (0,)
    assert hist.leftover == 5


def test_histogram_2d_arcs():
    pts = [(1.5 * math.cos(a), 1.5 * math.sin(a))
           for a in (0.0, 0.1, -0.2, 0.05)]
    arcs = [sde.Arc((0.0, 0.0), 0.0, 0.3), sde.Arc((0.0, 0.0), math.pi, 0.3)]
    hist = sde.histogram(_synthetic(pts), arcs)
    assert hist.counts == (4, 0)


def test_histogram_boundary_balls():
    pts = [(-1.5, 0.0), (1.5, 0.0), (1.5, 0.0)]
    regs = [sde.BoundaryBall((-1.5, 0.0), 0.4),
            sde.BoundaryBall((1.5, 0.0), 0.4)]
    hist = sde.histogram(_synthetic(pts), regs, dom=ball([0.0, 0.0], 1.5))
    assert hist.counts == (1, 2)


def test_histogram_rejects_overlap():
    with pytest.raises(OverlappingRegions):
        sde.histogram([], [sde.Endpoint(0.0), sde.Endpoint(0.0)])
    regs = [sde.BoundaryBall((1.5, 0.0), 0.5),
            sde.BoundaryBall((1.45, 0.3), 0.5)]
    with pytest.raises(OverlappingRegions):
        sde.histogram([], regs, dom=ball([0.0, 0.0], 1.5))


def test_histogram_wilson_against_quadratic_roots():
    samples = _synthetic([(0.0,)] * 30 + [(1.0,)] * 70)
    hist = sde.histogram(samples, [sde.Endpoint(0.0), sde.Endpoint(1.0)])
    for i, k in enumerate((30, 70)):
        want = oracles.wilson_interval_roots(k, 100, 1.959963984540054)
        assert hist.intervals[i] == pytest.approx(want, abs=1e-12)
        lo, hi = hist.intervals[i]
        assert 0.0 <= lo <= hi <= 1.0


def test_histogram_to_dict():
    samples = _synthetic([(0.0,)] * 3, censored=1)
    hist = sde.histogram(samples, [sde.Endpoint(0.0, name="left")])
    d = hist.to_dict()
    assert d["regions"] == ["left"]
    assert d["counts"] == [3]
    assert d["censored"] == 1 and d["n_paths"] == 4


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

def test_observable_constant_one():
    est = sde.estimate_observable(_synthetic([(0.0,), (1.0,)]), lambda p: 1.0)
    assert est.mean == 1.0 and est.stderr == 0.0


def test_observable_indicator_equals_histogram_proportion():
    samples = _synthetic([(0.0,)] * 3 + [(1.0,)] * 9)
    hist = sde.histogram(samples, [sde.Endpoint(0.0)])
    reg = sde.Endpoint(0.0)
    est = sde.estimate_observable(samples, lambda p: float(reg.contains(p)))
    assert est.mean == pytest.approx(hist.proportion(0), abs=1e-15)


def test_observable_smooth_bump_tracks_exact_mixture():
    f = double_well_1d(tilt=0.1)
    dom = Interval(-1.5, 1.5)
    cfg = sde.SimConfig(h=0.5, n_paths=4000, seed=21, start=-1.0,
                        max_time=2000.0)
    samples = sde.simulate_exit(f, dom, cfg)
    assert not any(s.censored for s in samples)

    def bump(p):
        return math.exp(-8.0 * (p[0] + 1.5) ** 2)

    # boundary-hit probabilities carry the usual discrete-crossing shift;
    # the recorded exit points themselves are exact endpoints
    dt = sde.resolve_dt(f, dom, cfg)
    shift = 0.5826 * math.sqrt(cfg.h * dt)
    p_left = exact_exit_probability_1d(
        f, (dom.a - shift, dom.b + shift), -1.0, cfg.h)
    want = bump([-1.5]) * p_left + bump([1.5]) * (1.0 - p_left)
    est = sde.estimate_observable(samples, bump)
    assert abs(est.mean - want) <= 3.0 * est.stderr + 3e-3
    assert abs(est.mean) <= 1.0


# ---------------------------------------------------------------------------
# decay-rate fits
# ---------------------------------------------------------------------------

def test_decay_fit_recovers_exponential_rate():
    pts = [(h, math.exp(-1.0 / h), 0.0) for h in (0.5, 0.25, 0.125)]
    fit = sde.decay_rate_fit(pts)
    assert fit.slope == pytest.approx(-1.0, abs=1e-9)
    assert fit.flagged == ()


def test_decay_fit_weights_match_normal_equations():
    pts = [(0.5, 0.010, 0.002), (0.25, 0.003, 0.001), (0.125, 8e-4, 4e-4),
           (0.1, 3e-4, 2e-4)]
    fit = sde.decay_rate_fit(pts)
    x = [1.0 / h for h, _, _ in pts]
    y = [math.log(p) for _, p, _ in pts]
    sig = [s / p for _, p, s in pts]
    slope, err = oracles.weighted_line_fit(x, y, sig)
    assert fit.slope == pytest.approx(slope, rel=1e-9)
    assert fit.stderr == pytest.approx(err, rel=1e-9)


def test_decay_fit_polynomial_rate_drifts_to_zero():
    big = sde.decay_rate_fit([(h, h, 0.0) for h in (0.5, 0.25, 0.125)])
    small = sde.decay_rate_fit([(h, h, 0.0) for h in (0.05, 0.025, 0.0125)])
    assert abs(small.slope) < abs(big.slope) / 5.0
    # an exponential rate stays put on the same windows
    ref = sde.decay_rate_fit(
        [(h, math.exp(-1.0 / h), 0.0) for h in (0.05, 0.025, 0.0125)])
    assert abs(ref.slope) > 20.0 * abs(small.slope)


def test_decay_fit_zero_probability_handling():
    with pytest.raises(ZeroCount):
        sde.decay_rate_fit([(0.5, 0.1, 0.01), (0.25, 0.0, 0.0),
                            (0.125, 0.001, 1e-4)])
    fit = sde.decay_rate_fit([(0.5, 0.1, 0.01), (0.25, 0.0, 0.0, 10_000),
                              (0.125, 0.001, 1e-4)])
    assert fit.flagged == (0.25,)
    assert math.isfinite(fit.slope)


def test_decay_fit_input_validation():
    with pytest.raises(ValueError):
        sde.decay_rate_fit([(0.5, 0.1, 0.0), (0.25, 0.01, 0.0)])
    with pytest.raises(ValueError):
        sde.decay_rate_fit([(0.5, 0.1, 0.0)] * 3)
    with pytest.raises(ValueError):
        sde.decay_rate_fit([(0.5, -0.1, 0.0), (0.25, 0.01, 0.0),
                            (0.1, 0.001, 0.0)])


# ---------------------------------------------------------------------------
# sample files
# ---------------------------------------------------------------------------

def test_sample_csv_round_trip(tmp_path):
    f = double_well_1d()
    cfg = sde.SimConfig(h=0.5, n_paths=40, seed=13, start=-1.0, max_time=0.9)
    samples = sde.simulate_exit(f, Interval(-1.5, 1.5), cfg)
    assert any(s.censored for s in samples) or True
    path = tmp_path / "samples.csv"
    sde.write_samples(samples, path)
    assert sde.read_samples(path) == samples


def test_sample_csv_round_trip_2d(tmp_path):
    f = double_well_2d(c=3.0)
    cfg = sde.SimConfig(h=0.7, n_paths=16, seed=4, start=(1.0, 0.0),
                        max_time=10.0)
    samples = sde.simulate_exit(f, ball([0.0, 0.0], 1.5), cfg)
    path = tmp_path / "s.csv"
    sde.write_samples(samples, path)
    back = sde.read_samples(path)
    assert back == samples
