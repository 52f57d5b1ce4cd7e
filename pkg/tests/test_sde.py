"""Euler paths: exact degenerate cases, evaluation, failure reporting, CSV."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import constant_field
from itersim import (
    AffineForm,
    CoefficientField,
    EulerPath,
    NumericsError,
    eval_linear,
    eval_step,
    euler_path,
    euler_path_from_increments,
    sup_abs,
    write_path_csv,
)
from itersim.processes import BrownianMotion, coefficients_of
from itersim.rng import derive_stream


def _affine_field(drift_const=0.0, diff_const=0.0):
    return CoefficientField(
        drift=lambda t, x: np.full_like(x, drift_const),
        diffusion=lambda t, x: np.full_like(x, diff_const),
        affine=AffineForm(drift_const=drift_const, diff_const=diff_const),
    )


def test_zero_coefficients_keep_state_constant():
    path = euler_path(_affine_field(), 1.5, 1.0, 16, derive_stream(0, 0))
    np.testing.assert_array_equal(path.values[:, 0], np.full(17, 1.5))


def test_unit_drift_matches_grid_dyadic_exactly():
    # n = 8 keeps dt and every partial sum exactly representable.
    path = euler_path(_affine_field(drift_const=1.0), 0.0, 1.0, 8, derive_stream(0, 0))
    np.testing.assert_array_equal(path.values[:, 0], np.arange(9) / 8.0)


def test_unit_drift_matches_grid_to_roundoff():
    path = euler_path(_affine_field(drift_const=1.0), 0.0, 1.0, 10, derive_stream(0, 0))
    np.testing.assert_allclose(path.values[:, 0], np.arange(11) / 10.0, atol=1e-15)


def test_grid_endpoints_exact():
    path = euler_path(_affine_field(diff_const=1.0), 0.0, 0.7, 13, derive_stream(1, 0))
    assert path.grid[0] == 0.0
    assert path.grid[-1] == 0.7
    assert path.values.shape == (14, 1)


def test_terminal_variance_matches_brownian_law():
    field = coefficients_of(BrownianMotion())
    terminals = np.empty(10_000)
    for k in range(terminals.size):
        path = euler_path(field, 0.0, 1.0, 100, derive_stream(21, k))
        terminals[k] = path.values[-1, 0]
    assert abs(terminals.var() - 1.0) < 0.05


def test_supremum_moment_matches_fine_grid_reference():
    # The scheme's E[sup |path|^2] on [0,1] is compared against a brute-force
    # finer-grid run of the same estimator; the two discretizations must agree
    # within combined MC error, and both must sit in a loose sanity envelope.
    field = coefficients_of(BrownianMotion())

    def sup_squared(n, paths, seed):
        vals = np.empty(paths)
        for k in range(paths):
            vals[k] = sup_abs(euler_path(field, 0.0, 1.0, n, derive_stream(seed, k))) ** 2
        return vals

    coarse = sup_squared(256, 10_000, 51)
    fine = sup_squared(4096, 4_000, 52)
    mc, sc = coarse.mean(), coarse.std(ddof=1) / math.sqrt(coarse.size)
    mf, sf = fine.mean(), fine.std(ddof=1) / math.sqrt(fine.size)
    assert abs(mc - mf) < 3.0 * math.hypot(sc, sf)
    assert 1.0 < mc < 2.5
    assert 1.0 < mf < 2.5


def test_rng_consumption_independent_of_coefficients():
    # A noiseless path must consume exactly as many draws as a noisy one so
    # downstream consumers of the same stream stay aligned.
    probe = derive_stream(5, 0).gaussians(65)[-1]
    stream = derive_stream(5, 0)
    euler_path(_affine_field(drift_const=1.0), 0.0, 1.0, 64, stream)
    assert stream.gaussians(1)[0] == probe


def test_increments_reconstruct_stream_path():
    field = coefficients_of(BrownianMotion())
    direct = euler_path(field, 0.3, 2.0, 50, derive_stream(7, 3))
    dw = derive_stream(7, 3).gaussians(50) * math.sqrt(2.0 / 50)
    rebuilt = euler_path_from_increments(field, 0.3, 2.0, dw)
    np.testing.assert_array_equal(direct.values, rebuilt.values)


def test_generic_loop_two_dimensional_cumsum():
    field = CoefficientField(
        drift=lambda t, x: np.zeros(2),
        diffusion=lambda t, x: np.eye(2),
        dim_state=2,
        dim_noise=2,
    )
    dw = np.random.default_rng(3).standard_normal((20, 2)) * math.sqrt(1.0 / 20)
    path = euler_path_from_increments(field, np.zeros(2), 1.0, dw)
    assert path.values.shape == (21, 2)
    expect = np.vstack([np.zeros(2), np.cumsum(dw, axis=0)])
    np.testing.assert_allclose(path.values, expect, atol=1e-16)


def test_eval_step_returns_left_knot():
    path = euler_path(coefficients_of(BrownianMotion()), 0.0, 1.0, 10, derive_stream(2, 0))
    assert eval_step(path, path.grid[3]) == path.values[3, 0]
    assert eval_step(path, 0.35) == path.values[3, 0]
    assert eval_step(path, 1.0) == path.values[10, 0]
    assert eval_step(path, 0.0) == path.values[0, 0]


def test_eval_linear_interpolates_midpoints():
    path = euler_path(coefficients_of(BrownianMotion()), 0.0, 1.0, 10, derive_stream(2, 1))
    mid = 0.5 * (path.values[3, 0] + path.values[4, 0])
    assert eval_linear(path, 0.35) == pytest.approx(mid, rel=1e-12)
    for k in (0, 4, 10):
        assert eval_linear(path, path.grid[k]) == path.values[k, 0]


@pytest.mark.parametrize("t", [-0.1, 1.1])
def test_evaluation_outside_domain_rejected(t):
    path = euler_path(coefficients_of(BrownianMotion()), 0.0, 1.0, 4, derive_stream(2, 2))
    with pytest.raises(ValueError):
        eval_step(path, t)
    with pytest.raises(ValueError):
        eval_linear(path, t)


def test_sup_abs_examples():
    grid = np.array([0.0, 0.5, 1.0])
    vals = np.array([[0.0], [-2.0], [1.0]])
    path = EulerPath(t0=0.0, T=1.0, n=2, grid=grid, values=vals, driving_seed=(0, 0))
    assert sup_abs(path) == 2.0
    noisy = euler_path(coefficients_of(BrownianMotion()), 0.4, 1.0, 32, derive_stream(2, 3))
    assert sup_abs(noisy) >= abs(noisy.values[0, 0])


def test_nonfinite_update_names_failing_step():
    with pytest.raises(NumericsError, match=r"step"):
        euler_path(_affine_field(drift_const=1e308), 1.0, 4.0, 64, derive_stream(0, 1))


def test_nonfinite_drift_named():
    field = CoefficientField(
        drift=lambda t, x: np.full_like(x, np.nan if t > 0.3 else 0.0),
        diffusion=lambda t, x: np.zeros_like(x),
    )
    with pytest.raises(NumericsError, match=r"drift"):
        euler_path(field, 0.0, 1.0, 10, derive_stream(0, 2))


def test_path_arrays_read_only():
    path = euler_path(coefficients_of(BrownianMotion()), 0.0, 1.0, 4, derive_stream(2, 4))
    with pytest.raises(ValueError):
        path.values[0, 0] = 9.9
    with pytest.raises(ValueError):
        path.grid[0] = -1.0


def test_csv_round_trip_preserves_doubles(tmp_path):
    path = euler_path(coefficients_of(BrownianMotion()), 0.2, 1.0, 25, derive_stream(6, 0))
    out = tmp_path / "path.csv"
    with out.open("w") as fh:
        write_path_csv(path, fh)
    header = out.read_text().splitlines()[0]
    assert header == "t,x_1"
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 0], path.grid)
    np.testing.assert_array_equal(data[:, 1], path.values[:, 0])
