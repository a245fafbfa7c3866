import numpy as np
import pytest
from conftest import oracle_roots, residual
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from optbistab import (DegenerateCubicError, Direction, ModelParams, NormalizedState,
                       PhysicalParams, ScanTrace, bistable_region, classify_stability,
                       empty_cavity_intensity, hysteresis_scan, integrate, scan_pair,
                       steady_roots)
from optbistab.dynamics import fixed_point
from optbistab.steady import resonance_residual, root_counts, steady_roots_batch, tilt_map

signs = st.sampled_from(["as_written", "figure_convention"])
# below ~1e-154 the cubic's leading coefficient S^2 underflows by design
sats = st.one_of(st.just(0.0), st.floats(1e-100, 20))


def test_empty_cavity_intensity():
    assert empty_cavity_intensity(0.0) == 1.0
    assert empty_cavity_intensity(1.0) == 0.5
    assert empty_cavity_intensity(-3.0) == pytest.approx(0.1, rel=1e-15)
    assert np.allclose(empty_cavity_intensity(np.array([0.0, 1.0])), [1.0, 0.5])


def test_steady_roots_examples(hyst):
    sol = steady_roots(0.0, ModelParams(0.0, 5.0))
    assert len(sol) == 1 and sol.roots[0].intensity_norm == pytest.approx(1.0, abs=1e-12)
    sol = steady_roots(-16.0, ModelParams(16.0, 0.0, "as_written"))
    assert len(sol) == 1 and sol.roots[0].intensity_norm == pytest.approx(1.0, abs=1e-12)

    sol = steady_roots(4.0, hyst)
    ref = oracle_roots([4.0], hyst.signed_a, hyst.s_param, n_grid=10**6 + 1)[0]
    assert len(sol) == 3 == ref.size
    np.testing.assert_allclose(sol.intensities, ref, rtol=0, atol=1e-9)


def test_degenerate_cubic_is_distinct_error():
    with pytest.raises(DegenerateCubicError):
        steady_roots(1.0, ModelParams(16.0, 1e-170))
    assert issubclass(DegenerateCubicError, ArithmeticError)


@given(st.floats(0, 60), sats, st.floats(-80, 80), signs)
@settings(max_examples=300, deadline=None)
def test_roots_match_oracle(a, s, d, sign):
    m = ModelParams(a, s, sign)
    sol = steady_roots(d, m)
    ref = oracle_roots([d], m.signed_a, s)[0]
    # skip draws sitting on a fold, where the two methods legitimately
    # disagree about a double root
    assume(sol.intensities.size == ref.size or np.min(np.abs(
        np.diff(np.concatenate([sol.intensities, ref])))) > 1e-6)
    assert len(sol) == ref.size
    np.testing.assert_allclose(sol.intensities, ref, rtol=0, atol=1e-9)


@given(st.floats(0, 60), sats, st.floats(-80, 80), signs)
@settings(max_examples=300, deadline=None)
def test_root_set_invariants(a, s, d, sign):
    m = ModelParams(a, s, sign)
    sol = steady_roots(d, m)
    vals = sol.intensities
    assert 1 <= len(sol) <= 3
    assert np.all(np.diff(vals) > 0)
    assert np.all((vals >= 0) & (vals <= 1))
    assert np.all(np.abs(resonance_residual(vals, d, m)) < 1e-10)
    if len(sol) == 3:
        assert not sol.roots[1].stable and sol.roots[1].saddle
    if len(sol) == 1:
        # a lone root can lose stability only through an oscillatory mode
        assert not sol.roots[0].saddle


def test_lone_root_can_be_oscillatory(hyst):
    # the upper-branch tail of the scan: unique root, complex pair with Re > 0
    sol = steady_roots(15.0, hyst)
    assert len(sol) == 1
    assert not sol.roots[0].stable and not sol.roots[0].saddle


@given(st.floats(-50, 50), sats)
def test_classify_stability_linear_cavity(d, s):
    m = ModelParams(0.0, s)
    root = steady_roots(d, m).roots[0].intensity_norm
    assert classify_stability(root, d, m, PhysicalParams())


def test_classify_stability_rejects_non_root(hyst, phys):
    with pytest.raises(ValueError):
        classify_stability(0.3, 4.0, hyst, phys)


def _distance_after(root, d, m, p, kick, t_end):
    x = fixed_point(root, d, m)
    start = NormalizedState(x.field_re * (1 + kick), x.field_im * (1 + kick), x.pop_fraction)
    traj = integrate(start, d, m, p, t_end=t_end)
    return abs(traj.intensity[-1] - root)


def test_middle_root_repels(hyst, phys):
    sol = steady_roots(4.0, hyst)
    mid = sol.roots[1].intensity_norm
    assert not classify_stability(mid, 4.0, hyst, phys)
    assert _distance_after(mid, 4.0, hyst, phys, 0.01, 50 / phys.kappa) > 0.05


def test_upper_root_near_down_edge_attracts(hyst, phys):
    region = bistable_region(hyst)
    d = region.lower + 0.05
    top = steady_roots(d, hyst).roots[-1].intensity_norm
    assert classify_stability(top, d, hyst, phys)
    assert _distance_after(top, d, hyst, phys, 0.01, 200 / phys.kappa) < 1e-6


def test_bistable_region_examples():
    assert bistable_region(ModelParams(0.0, 9.0)) is None
    r = bistable_region(ModelParams(16.0, 9.0))
    assert abs(r.lower - 1) <= 0.5 and abs(r.upper - 7) <= 0.5
    assert bistable_region(ModelParams(60, 8)).width > bistable_region(ModelParams(16, 8)).width


def test_bistable_region_endpoints_against_oracle(hyst):
    r = bistable_region(hyst)
    probes = [r.lower - 1e-5, r.lower + 1e-5, r.upper - 1e-5, r.upper + 1e-5]
    counts = [x.size for x in oracle_roots(probes, hyst.signed_a, hyst.s_param, n_grid=10**6 + 1)]
    assert counts == [1, 3, 3, 1]
    inside = np.linspace(r.lower, r.upper, 2001)[1:-1]
    assert np.all(root_counts(inside, hyst) == 3)


def test_bistable_region_rejects_bad_range(hyst):
    with pytest.raises(ValueError):
        bistable_region(hyst, (5.0, 5.0))


def test_scan_without_atoms_is_lorentzian():
    grid = np.linspace(-10, 10, 401)
    up, down = scan_pair(grid, ModelParams(0.0, 9.0))
    np.testing.assert_array_equal(up.intensity_norm, down.intensity_norm[::-1])
    np.testing.assert_allclose(up.intensity_norm, 1 / (1 + grid**2), rtol=0, atol=1e-12)


def test_reference_hysteresis(hyst):
    grid = np.linspace(-10, 20, 3001)
    up, down = scan_pair(grid, hyst)
    r = bistable_region(hyst)
    diff = np.abs(up.intensity_norm - down.intensity_norm[::-1])
    inside = (grid > r.lower) & (grid < r.upper)
    assert diff[inside].max() > 0.1
    assert diff[~inside].max() < 1e-9
    # low branch going up, high branch coming down
    lower = [steady_roots(d, hyst).roots[0].intensity_norm for d in grid[inside][::50]]
    np.testing.assert_allclose(up.intensity_norm[inside][::50], lower, atol=1e-12)
    assert np.all(down.intensity_norm[::-1][inside] >= up.intensity_norm[inside])


@given(st.floats(1, 60), st.floats(0.5, 20))
@settings(max_examples=40, deadline=None)
def test_loop_orientation(a, s):
    m = ModelParams(a, s)
    r = bistable_region(m, (-10, 80))
    assume(r is not None and r.width > 0.05)
    grid = np.linspace(r.lower - 1, r.upper + 1, 801)
    up, down = scan_pair(grid, m, max_step=None)
    inside = (grid > r.lower) & (grid < r.upper)
    assert np.all(down.intensity_norm[::-1][inside] >= up.intensity_norm[inside])


@given(st.floats(0, 60), sats, signs,
       st.sampled_from([Direction.INCREASING, Direction.DECREASING]))
@settings(max_examples=60, deadline=None)
def test_trace_samples_are_roots(a, s, sign, direction):
    m = ModelParams(a, s, sign)
    grid = np.linspace(-40, 40, 801)
    if direction is Direction.DECREASING:
        grid = grid[::-1]
    trace = hysteresis_scan(grid, direction, m)
    i = trace.intensity_norm
    assert np.all((i >= 0) & (i <= 1))
    assert np.all(np.abs(residual(i, trace.detuning_norm, m.signed_a, s)) < 1e-9)


def test_continuity_under_refinement(hyst):
    # away from the folds the largest step shrinks linearly with the grid
    # spacing; the slack covers the second-order term at the excluded edge
    jumps = []
    for n in (601, 1201, 2401, 4801):
        grid = np.linspace(-10, 20, n)
        trace = hysteresis_scan(grid, Direction.INCREASING, hyst)
        steps = np.abs(np.diff(trace.intensity_norm))
        mid = 0.5 * (grid[1:] + grid[:-1])
        folds = grid[list(trace.folds)]
        away = np.all(np.abs(mid[:, None] - folds[None, :]) > 0.5, axis=1)
        jumps.append(steps[away].max())
    for coarse, fine in zip(jumps, jumps[1:]):
        assert fine <= 0.5 * coarse * 1.03


def test_start_inside_region_takes_lowest_stable(hyst):
    trace = hysteresis_scan(np.linspace(4, 5, 11), Direction.INCREASING, hyst)
    assert trace.intensity_norm[0] == pytest.approx(steady_roots(4.0, hyst).roots[0].intensity_norm)


def test_scan_guards(hyst):
    with pytest.raises(ValueError):
        hysteresis_scan([0.0, 0.05, 0.02], Direction.INCREASING, hyst)
    with pytest.raises(ValueError):
        hysteresis_scan([0.0, 0.5], Direction.INCREASING, hyst)
    with pytest.raises(ValueError):
        hysteresis_scan([1.0, 0.0], "increasing", hyst, max_step=None)
    with pytest.raises(ValueError):
        ScanTrace("increasing", np.array([0.0, 1.0]), np.array([0.0]))


def test_folds_mark_root_count_changes(hyst):
    grid = np.linspace(-10, 20, 301)
    trace = hysteresis_scan(grid, Direction.INCREASING, hyst)
    counts = root_counts(grid, hyst)
    assert trace.folds == tuple(int(k) for k in np.flatnonzero(np.diff(counts)) + 1)
    assert len(trace.folds) == 2


def test_tilt_map_rows_match_scans():
    grid = np.linspace(-10, 30, 401)
    a_values = [0.0, 20.0, 40.0]
    raster = tilt_map(a_values, grid, 8.0)
    assert raster.shape == (3, 401)
    for row, a in zip(raster, a_values):
        down = hysteresis_scan(grid[::-1], Direction.DECREASING, ModelParams(a, 8.0))
        np.testing.assert_array_equal(row, down.intensity_norm[::-1])
    # the resonance peak drifts toward positive detuning as A grows
    peaks = grid[np.argmax(raster, axis=1)]
    assert np.all(np.diff(peaks) > 0)


def test_batch_matches_single(hyst):
    grid = np.linspace(-5, 10, 31)
    for d, sol in zip(grid, steady_roots_batch(grid, hyst)):
        assert sol == steady_roots(d, hyst)
