"""
Finite-size-scaling fits.

- fermionic (Fermi-Dirac) threshold fits of P_path at fixed N
- weighted linear extrapolation of p_c(N) against N**(-1/nu)
- collapse scores for rescaled curve families
- the exponential fit of the phase boundary at small p
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats
from scipy.optimize import curve_fit
from scipy.special import expit

from tableau import InvalidArgument

logger = logging.getLogger(__name__)

DEFAULT_NU = 4.0 / 3.0
DEFAULT_ALPHA = 0.05
MIN_SIGMA = 1e-3


class FitUnbounded(RuntimeError):
    """The data does not pin the fit parameters (e.g. never crosses 1/2)."""


class InsufficientData(ValueError):
    pass


@dataclass
class ThresholdFit:
    n_qubits: int
    p_c: float
    p_c_err: float
    temperature_scale: float
    temperature: float
    chi2_per_dof: float
    nu: float = DEFAULT_NU

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class FssEstimate:
    p_c_infinity: float
    variance: float
    ci_halfwidth: float
    slope: float
    nu: float
    alpha: float
    points_used: List[Tuple[int, float, float]] = field(default_factory=list)

    @property
    def std_error(self) -> float:
        return float(np.sqrt(self.variance))

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["std_error"] = self.std_error
        out["points_used"] = [{"N": n, "p_c": p, "err": e} for n, p, e in self.points_used]
        return out


@dataclass
class CollapseResult:
    score: float
    n_points: int
    n_curves: int
    degenerate: bool = False

    @property
    def mean_deviation(self) -> float:
        return self.score / self.n_points if self.n_points else 0.0


@dataclass
class BoundaryFit:
    A: float
    prefactor: float
    slope: float
    intercept: float
    residuals: List[float]
    r_squared: float


def fermionic(p, p_c: float, temperature: float):
    """f(p) = 1 / (exp((p - p_c) / T) + 1)."""
    return expit(-(np.asarray(p, dtype=float) - p_c) / temperature)


def _midpoint_guess(p: np.ndarray, y: np.ndarray) -> float:
    above = y >= 0.5
    for i in range(p.size - 1):
        if above[i] != above[i + 1]:
            y0, y1 = y[i], y[i + 1]
            return float(p[i] + (0.5 - y0) * (p[i + 1] - p[i]) / (y1 - y0))
    return float(np.median(p))


def fermionic_fit(p: Sequence[float], p_path: Sequence[float], errors: Optional[Sequence[float]],
                  n_qubits: int, nu: float = DEFAULT_NU, min_sigma: float = MIN_SIGMA) -> ThresholdFit:
    """Weighted fit of the fermionic sigmoid with T = c * N**(-1/nu).

    Free parameters are p_c and c. Errors below ``min_sigma`` are floored so
    points with P exactly 0 or 1 keep a finite weight.
    """
    p = np.asarray(p, dtype=float)
    y = np.asarray(p_path, dtype=float)
    if p.size < 5:
        raise InsufficientData(f"fermionic fit needs at least 5 grid points, got {p.size}")
    order = np.argsort(p)
    p, y = p[order], y[order]
    sigma = np.full_like(y, min_sigma) if errors is None else np.asarray(errors, dtype=float)[order]
    sigma = np.maximum(sigma, min_sigma)
    if not (np.any(y > 0.5) and np.any(y < 0.5)):
        raise FitUnbounded(f"N={n_qubits}: data never brackets P=1/2")

    shrink = float(n_qubits) ** (-1.0 / nu)

    def model(x, p_c, c):
        return fermionic(x, p_c, c * shrink)

    span = p[-1] - p[0]
    p0 = [_midpoint_guess(p, y), span / 8.0 / shrink]
    try:
        params, cov = curve_fit(model, p, y, p0=p0, sigma=sigma, absolute_sigma=True,
                                bounds=([p[0], 1e-12], [p[-1], np.inf]),
                                ftol=1e-14, xtol=1e-14, gtol=1e-14, max_nfev=20000)
    except RuntimeError as e:
        raise FitUnbounded(f"N={n_qubits}: {e}") from e

    p_c, c = (float(v) for v in params)
    errs = np.sqrt(np.abs(np.diag(cov)))
    resid = (y - model(p, p_c, c)) / sigma
    dof = max(p.size - 2, 1)
    fit = ThresholdFit(n_qubits, p_c, float(errs[0]), c, c * shrink, float(resid @ resid / dof), nu)
    logger.debug(f"Fermionic fit N={n_qubits}: p_c={p_c:.4f}±{fit.p_c_err:.4f} T={fit.temperature:.4g}")
    return fit


def collapse_score(frame: pd.DataFrame) -> CollapseResult:
    """Sum of squared deviations of the curves from their pooled mean.

    ``frame`` has columns x_scaled, y, N. Every point is compared with the
    other curves linearly interpolated at its abscissa (only where they
    cover it); a curve family that collapses perfectly scores 0.
    """
    curves = {}
    for n, group in frame.groupby("N", sort=True):
        g = group.sort_values("x_scaled")
        curves[int(n)] = (g["x_scaled"].to_numpy(float), g["y"].to_numpy(float))
    if len(curves) < 2:
        return CollapseResult(0.0, len(frame), len(curves), degenerate=True)

    sq_dev = []
    for n, (x, y) in curves.items():
        for xi, yi in zip(x, y):
            values = [yi]
            for m, (xm, ym) in curves.items():
                if m != n and xm[0] <= xi <= xm[-1]:
                    values.append(float(np.interp(xi, xm, ym)))
            if len(values) > 1:
                mean = float(np.mean(values))
                sq_dev.append((yi - mean) ** 2)
    if not sq_dev:
        return CollapseResult(0.0, 0, len(curves), degenerate=True)
    return CollapseResult(float(np.sum(sq_dev)), len(sq_dev), len(curves))


def collapse_check(data: pd.DataFrame, p_c_of_n: Dict[int, float], nu: float = DEFAULT_NU) -> Tuple[pd.DataFrame, CollapseResult]:
    """Rescale P_path curves as (p - p_c(N)) * N**(1/nu) and score the collapse.

    ``data`` has columns N, p, P_path.
    """
    n = data["N"].to_numpy(int)
    shift = np.array([p_c_of_n[int(k)] for k in n])
    frame = pd.DataFrame({
        "x_scaled": (data["p"].to_numpy(float) - shift) * n.astype(float) ** (1.0 / nu),
        "y": data["P_path"].to_numpy(float),
        "N": n,
    })
    result = collapse_score(frame)
    if result.n_curves < 3:
        logger.warning(f"Collapse check on {result.n_curves} sizes; at least 3 are recommended")
    return frame, result


PointLike = Union[ThresholdFit, Tuple[int, float, float]]


def extrapolate_threshold(fits: Sequence[PointLike], nu: float = DEFAULT_NU,
                          alpha: float = DEFAULT_ALPHA) -> FssEstimate:
    """Weighted linear fit of p_c(N) on x = N**(-1/nu), intercept at x = 0.

    Weights are w_i = 1/sigma_i. The intercept variance is
    s2 * (1 + 1/n + xbar**2 / sum((x_i - xbar)**2)) with
    s2 = sum(w_i**2 r_i**2) / (sum(w_i**2) - 2) and xbar the weighted mean
    of the x_i. The reported confidence half-width is the Student-t
    quantile t(1 - alpha/2, n - 2) times the standard error.

    The residual variance needs sum(w_i**2) > 2. Below that (errors of
    order 1) the weights are rescaled to sum(w_i**2) = n, which leaves the
    fit unchanged and gives the usual weighted variance with n - 2 degrees
    of freedom.
    """
    points = [(f.n_qubits, f.p_c, f.p_c_err) if isinstance(f, ThresholdFit) else tuple(f) for f in fits]
    if len(points) < 3:
        raise InsufficientData(f"extrapolation needs at least 3 sizes, got {len(points)}")
    n_sizes = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    err = np.array([p[2] for p in points], dtype=float)
    if np.any(err <= 0):
        raise InvalidArgument("extrapolation needs positive errors")

    x = n_sizes ** (-1.0 / nu)
    w = 1.0 / err
    slope, intercept = np.polyfit(x, y, 1, w=w)
    resid = y - (slope * x + intercept)
    if float(np.sum(w ** 2)) <= 2.0:
        logger.warning(f"Sum of squared weights {float(np.sum(w ** 2)):.3g} <= 2; rescaling weights to n={x.size}")
        w = w * np.sqrt(x.size / float(np.sum(w ** 2)))
    denom = float(np.sum(w ** 2) - 2.0)
    s2 = float(np.sum(w ** 2 * resid ** 2) / denom)
    xbar = float(np.average(x, weights=w ** 2))
    sxx = float(np.sum((x - xbar) ** 2))
    variance = s2 * (1.0 + 1.0 / x.size + xbar ** 2 / sxx)
    t_factor = float(stats.t.ppf(1.0 - alpha / 2.0, x.size - 2))
    estimate = FssEstimate(float(intercept), variance, t_factor * float(np.sqrt(variance)), float(slope),
                           nu, alpha, [(int(a), float(b), float(c)) for a, b, c in points])
    logger.info(f"Extrapolated threshold {estimate.p_c_infinity:.4f} ± {estimate.ci_halfwidth:.4f} "
                f"from {x.size} sizes (nu={nu:.4g})")
    return estimate


def boundary_exponential_fit(points: Sequence[Tuple[float, float]]) -> BoundaryFit:
    """Fit r_c(p) = prefactor * exp(-1 / (A p)) as a line in (1/p, ln r_c)."""
    if len(points) < 3:
        raise InsufficientData(f"boundary fit needs at least 3 points, got {len(points)}")
    p = np.array([pt[0] for pt in points], dtype=float)
    r = np.array([pt[1] for pt in points], dtype=float)
    if np.any(r <= 0) or np.any(p <= 0):
        raise InvalidArgument("boundary points need positive p and r_c")
    inv_p, log_r = 1.0 / p, np.log(r)
    slope, intercept = np.polyfit(inv_p, log_r, 1)
    if slope >= 0:
        raise FitUnbounded(f"boundary slope {slope:.4g} is not negative")
    resid = log_r - (slope * inv_p + intercept)
    total = float(np.sum((log_r - log_r.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / total if total > 0 else 1.0
    return BoundaryFit(float(-1.0 / slope), float(np.exp(intercept)), float(slope), float(intercept),
                       [float(v) for v in resid], r2)
