import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vbs_entropy.analysis import (
    LN2,
    AreaLawFit,
    FitError,
    ScalingDataset,
    curve_points,
    extrapolation_report,
    fit_area_law,
    format_uncertainty,
    jacobian,
    model,
    write_two_column,
)


def synthetic(C=0.1, delta=0.8, alpha=0.6, sizes=range(2, 13), err=0.0):
    return ScalingDataset(tuple((L, C * L**-delta + alpha, err) for L in sizes), "square", 1)


def test_recovers_synthetic_parameters():
    fit = fit_area_law(synthetic())
    assert fit.C == pytest.approx(0.1, abs=1e-8)
    assert fit.delta == pytest.approx(0.8, abs=1e-8)
    assert fit.alpha == pytest.approx(0.6, abs=1e-8)
    assert fit.n_points == 11
    assert not fit.weighted


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.01, 0.1),
    st.floats(0.3, 1.5),
    st.floats(0.4, 0.58),
)
def test_recovers_random_parameters(C, delta, alpha):
    fit = fit_area_law(synthetic(C, delta, alpha))
    np.testing.assert_allclose(fit.params, [C, delta, alpha], rtol=1e-6, atol=1e-8)


def test_scaling_values_scales_C_and_alpha():
    base = fit_area_law(synthetic())
    scaled = ScalingDataset(tuple((L, 0.5 * s, 0.0) for L, s, _ in synthetic().points))
    fit = fit_area_law(scaled)
    assert fit.C == pytest.approx(0.5 * base.C, rel=1e-7)
    assert fit.alpha == pytest.approx(0.5 * base.alpha, rel=1e-7)
    assert fit.delta == pytest.approx(base.delta, rel=1e-7)


def test_weighted_fit_is_stationary():
    rng = np.random.default_rng(2)
    sizes = np.arange(2, 14)
    err = np.full(sizes.size, 1e-4)
    vals = 0.08 * sizes**-0.9 + 0.61 + err * rng.standard_normal(sizes.size)
    data = ScalingDataset(tuple(zip(sizes, vals, err)))
    fit = fit_area_law(data)
    assert fit.weighted
    r = (vals - fit(sizes)) / err
    grad = jacobian(fit.params, sizes.astype(float)).T @ (r / err)
    assert np.max(np.abs(grad)) < 1e-4 * np.max(np.abs(jacobian(fit.params, sizes.astype(float)).T @ (1 / err**2)))
    assert fit.alpha_err > 0


def test_alpha_error_matches_scatter():
    rng = np.random.default_rng(10)
    sizes = np.arange(1, 13)
    err = np.full(sizes.size, 2e-4)
    truth = 0.08 * sizes**-0.9 + 0.61
    alphas, errs = [], []
    for _ in range(200):
        vals = truth + err * rng.standard_normal(sizes.size)
        fit = fit_area_law(ScalingDataset(tuple(zip(sizes, vals, err))))
        alphas.append(fit.alpha)
        errs.append(fit.alpha_err)
    j = jacobian(np.array([0.08, 0.9, 0.61]), sizes.astype(float)) / err[:, None]
    sigma = math.sqrt(np.linalg.inv(j.T @ j)[2, 2])
    assert np.std(alphas) == pytest.approx(sigma, rel=0.2)
    assert np.median(errs) == pytest.approx(sigma, rel=0.3)
    assert np.mean(alphas) == pytest.approx(0.61, abs=4 * sigma / math.sqrt(200))


def test_jacobian_matches_finite_differences():
    p = np.array([0.1, 0.8, 0.6])
    L = np.arange(1.0, 9.0)
    h = 1e-7
    fd = np.stack([(model(p + h * e, L) - model(p - h * e, L)) / (2 * h) for e in np.eye(3)], axis=1)
    np.testing.assert_allclose(jacobian(p, L), fd, atol=1e-7)


def test_too_few_points():
    with pytest.raises(ValueError, match="at least 4"):
        fit_area_law(synthetic(sizes=range(2, 5)))


def test_mixed_weights_rejected():
    pts = [(2, 0.65, 0.0), (3, 0.64, 1e-4), (4, 0.635, 1e-4), (5, 0.63, 1e-4)]
    with pytest.raises(ValueError, match="mixed"):
        fit_area_law(ScalingDataset(tuple(pts)))


def test_degenerate_data_raises_fit_error():
    # constant data: C = 0 makes Delta unidentifiable
    data = ScalingDataset(tuple((L, 0.6, 0.0) for L in range(2, 10)))
    with pytest.raises(FitError) as info:
        fit_area_law(data)
    assert info.value.diagnostics


@pytest.mark.parametrize(
    "pts",
    [
        [(2, 0.65, 0.0), (2, 0.64, 0.0)],
        [(0, 0.65, 0.0)],
        [(2, 0.70, 0.0)],
        [(2, 0.0, 0.0)],
        [(2, 0.6, -1.0)],
    ],
)
def test_dataset_validation(pts):
    with pytest.raises(ValueError):
        ScalingDataset(tuple(pts))


def test_dataset_json_round_trip():
    data = synthetic(err=1e-5)
    back = ScalingDataset.from_json(json.loads(json.dumps(data.to_json())))
    assert back == data


def test_fit_json_round_trip():
    fit = fit_area_law(synthetic())
    back = AreaLawFit.from_json(json.loads(json.dumps(fit.to_json())))
    np.testing.assert_array_equal(back.params, fit.params)
    np.testing.assert_array_equal(back.covariance, fit.covariance)


@pytest.mark.parametrize(
    "value, err, text",
    [
        (0.1123, 0.0012, "0.112(1)"),
        (0.61137, 0.00031, "0.6114(3)"),
        (0.9123, 0.0149, "0.91(1)"),
        (0.685068, 0.0000049, "0.685068(5)"),
        (0.00808, 0.0000962, "0.0081(1)"),
        (123.4, 12.0, "120(10)"),
        (0.5, 0.0, "0.5000000"),
    ],
)
def test_format_uncertainty(value, err, text):
    assert format_uncertainty(value, err) == text


def _fit_with(alpha, alpha_err):
    return AreaLawFit(0.08, 0.9, alpha, 0.0003, 0.01, alpha_err)


def test_extrapolation_below_ln2():
    rep = extrapolation_report(_fit_with(0.6113, 0.0003))
    assert rep["below_ln2"]
    assert rep["gap"] == pytest.approx(LN2 - 0.6113)
    assert rep["gap_sigmas"] > 3
    assert rep["row"] == "C = 0.0800(3), Delta = 0.90(1), alpha = 0.6113(3)"


def test_extrapolation_at_ln2_is_flagged():
    rep = extrapolation_report(_fit_with(0.6931, 0.0001))
    assert not rep["below_ln2"]


def test_curve_points_and_file(tmp_path):
    fit = fit_area_law(synthetic())
    pts = curve_points(fit, [1, 2, 4])
    np.testing.assert_allclose(pts[:, 1], 0.1 * np.array([1, 2, 4.0]) ** -0.8 + 0.6, atol=1e-9)
    path = tmp_path / "curve.dat"
    write_two_column(path, pts, header="fit\ncurve")
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# fit", "# curve"]
    np.testing.assert_allclose(np.loadtxt(path), pts, rtol=1e-9)
