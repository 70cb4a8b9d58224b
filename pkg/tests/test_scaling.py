import numpy as np
import pandas as pd
import pytest

from scaling import (DEFAULT_NU, FitUnbounded, InsufficientData, boundary_exponential_fit, collapse_check,
                     collapse_score, extrapolate_threshold, fermionic, fermionic_fit)
from tableau import InvalidArgument


def test_fermionic_is_half_at_threshold():
    assert fermionic(0.3, 0.3, 0.01) == pytest.approx(0.5)
    assert fermionic(0.0, 0.3, 0.01) == pytest.approx(1.0)
    assert fermionic(1.0, 0.3, 0.01) == pytest.approx(0.0)


def test_fermionic_fit_recovers_exact_curve():
    n = 24
    temperature = 0.4 * n ** (-1 / DEFAULT_NU)
    p = np.linspace(0.05, 0.45, 17)
    fit = fermionic_fit(p, fermionic(p, 0.25, temperature), None, n)
    assert fit.p_c == pytest.approx(0.25, abs=1e-6)
    assert fit.temperature == pytest.approx(temperature, rel=1e-4)
    assert fit.temperature_scale == pytest.approx(0.4, rel=1e-4)
    assert fit.chi2_per_dof == pytest.approx(0.0, abs=1e-6)
    assert fit.to_dict()["n_qubits"] == n


def test_fermionic_fit_with_noisy_data(rng):
    p = np.linspace(0.0, 0.5, 21)
    clean = fermionic(p, 0.2, 0.04)
    noisy = np.clip(clean + rng.normal(0, 0.02, p.size), 0, 1)
    fit = fermionic_fit(p, noisy, np.full(p.size, 0.02), 12)
    assert abs(fit.p_c - 0.2) < 0.02
    assert fit.p_c_err > 0


def test_fermionic_fit_needs_a_crossing():
    p = np.linspace(0.0, 0.5, 6)
    with pytest.raises(FitUnbounded):
        fermionic_fit(p, np.full(6, 0.9), None, 12)


def test_fermionic_fit_needs_five_points():
    with pytest.raises(InsufficientData):
        fermionic_fit([0.1, 0.2, 0.3, 0.4], [1, 0.8, 0.2, 0], None, 12)


def test_collapse_score_of_single_size_is_degenerate():
    frame = pd.DataFrame({"x_scaled": [0.0, 1.0], "y": [1.0, 0.0], "N": [6, 6]})
    result = collapse_score(frame)
    assert result.degenerate
    assert result.n_curves == 1


def test_collapse_score_of_disjoint_curves_is_degenerate():
    frame = pd.DataFrame({"x_scaled": [0.0, 1.0, 5.0, 6.0], "y": [1.0, 0.0, 1.0, 0.0], "N": [6, 6, 12, 12]})
    assert collapse_score(frame).degenerate


def test_collapse_score_sums_squared_deviations():
    frame = pd.DataFrame({"x_scaled": [0.0, 1.0, 0.0, 1.0], "y": [0.0, 0.0, 1.0, 1.0], "N": [6, 6, 12, 12]})
    result = collapse_score(frame)
    assert result.n_points == 4
    assert result.score == pytest.approx(1.0)
    assert result.mean_deviation == pytest.approx(0.25)


def test_collapse_check_of_fermionic_family():
    p_c = {12: 0.22, 24: 0.235, 48: 0.245}
    rows = []
    for n, pc in p_c.items():
        for p in np.linspace(0.1, 0.4, 31):
            rows.append({"N": n, "p": p, "P_path": float(fermionic(p, pc, 0.3 * n ** (-1 / DEFAULT_NU)))})
    frame, result = collapse_check(pd.DataFrame(rows), p_c)
    assert set(frame.columns) == {"x_scaled", "y", "N"}
    assert result.n_curves == 3
    assert result.mean_deviation < 1e-3
    _, worse = collapse_check(pd.DataFrame(rows), {n: 0.2 for n in p_c})
    assert worse.score > result.score


def test_extrapolation_of_exact_line():
    nu = DEFAULT_NU
    sizes = [12, 24, 48, 96]
    points = [(n, 0.251 + 0.3 * n ** (-1 / nu), 0.001) for n in sizes]
    est = extrapolate_threshold(points, nu=nu)
    assert est.p_c_infinity == pytest.approx(0.251, abs=1e-9)
    assert est.slope == pytest.approx(0.3, abs=1e-7)
    assert est.variance == pytest.approx(0.0, abs=1e-12)
    assert est.ci_halfwidth == pytest.approx(0.0, abs=1e-6)
    assert [pt["N"] for pt in est.to_dict()["points_used"]] == sizes


def test_extrapolation_confidence_interval_grows_with_noise(rng):
    sizes = [12, 24, 36, 48, 60]
    points = [(n, 0.25 + 0.2 * n ** (-0.75) + rng.normal(0, 0.002), 0.002) for n in sizes]
    est = extrapolate_threshold(points)
    assert est.variance > 0
    assert est.ci_halfwidth > est.std_error
    assert abs(est.p_c_infinity - 0.25) < 5 * est.ci_halfwidth


def test_extrapolation_with_large_errors_rescales_weights():
    sizes = [12, 24, 48, 96]
    offsets = [0.004, -0.006, 0.003, -0.001]
    points = [(n, 0.25 + 0.2 * n ** (-0.75) + o, 2.0) for n, o in zip(sizes, offsets)]
    est = extrapolate_threshold(points)
    x = np.array(sizes, dtype=float) ** (-0.75)
    y = np.array([p[1] for p in points])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    s2 = float(resid @ resid) / (len(sizes) - 2)
    expected = s2 * (1 + 1 / len(sizes) + x.mean() ** 2 / float(np.sum((x - x.mean()) ** 2)))
    assert est.p_c_infinity == pytest.approx(intercept)
    assert est.variance == pytest.approx(expected)
    assert np.isfinite(est.ci_halfwidth)


def test_extrapolation_needs_three_sizes():
    with pytest.raises(InsufficientData):
        extrapolate_threshold([(12, 0.2, 0.01), (24, 0.22, 0.01)])


def test_extrapolation_rejects_zero_errors():
    with pytest.raises(InvalidArgument):
        extrapolate_threshold([(12, 0.2, 0.01), (24, 0.22, 0.0), (48, 0.23, 0.01)])


def test_boundary_fit_recovers_rate():
    p = np.array([0.1, 0.15, 0.2, 0.3, 0.4])
    r = 0.5 * np.exp(-1 / (0.3 * p))
    fit = boundary_exponential_fit(list(zip(p, r)))
    assert fit.A == pytest.approx(0.3)
    assert fit.prefactor == pytest.approx(0.5)
    assert fit.r_squared == pytest.approx(1.0)
    assert max(abs(v) for v in fit.residuals) < 1e-9


def test_boundary_fit_errors():
    with pytest.raises(InsufficientData):
        boundary_exponential_fit([(0.1, 0.01)])
    with pytest.raises(InvalidArgument):
        boundary_exponential_fit([(0.1, 0.01), (0.2, 0.0), (0.3, 0.1)])
    with pytest.raises(FitUnbounded):
        boundary_exponential_fit([(0.1, 0.3), (0.2, 0.2), (0.3, 0.1)])
