"""Two-sample homogeneity tests and the theoretical power predictor.

Three test families share the TestOutcome record:

* "df": reject when 2 m D_hat / f''(1) exceeds the chi-square(d-1) quantile;
* "el": score test S = m beta_hat' Vn_hat beta_hat against chi-square(d-1);
* "t2": two-sample Hotelling T^2 with the exact F scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .divergences import FDivergence, estimate_divergence, universal_decomposition
from .errors import InvalidDof, InvalidLevel, NotConverged, SingularCovariance
from .estimation import Dataset, FitResult, SolverOptions, fit, optimal_eta
from .models import EXPONENTIAL, RatioModel
from .statdist import chi2_quantile, chi2_sf, f_quantile, f_sf, noncentral_chi2_sf

__all__ = [
    "TestOutcome",
    "PowerPrediction",
    "df_test",
    "empirical_likelihood_test",
    "hotelling_t2_test",
    "power_prediction",
    "power_from_noncentrality",
]

DF_BASED = "df"
EMPIRICAL_LIKELIHOOD = "el"
HOTELLING_T2 = "t2"


@dataclass(frozen=True)
class TestOutcome:
    family: str
    statistic: float
    threshold: float
    p_value: float
    reject: bool
    dof: int


@dataclass(frozen=True)
class PowerPrediction:
    noncentrality: float
    dof: int
    alpha: float
    power: float


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InvalidLevel(f"significance level must lie in (0, 1), got {alpha!r}")
    return alpha


def _check_intercept(data: Dataset, model: RatioModel):
    phi = model.feature_map(data.numerator[0])
    if abs(phi[0] - 1.0) > 1e-12:
        raise ValueError("the model must carry an intercept feature phi_1(x) = 1")


def _null_calibrated(div: FDivergence) -> bool:
    # The chi-square(d-1) null law needs f_n(1) = 0 (then f_d(1) = 0 and the
    # first-order terms of the two sample means cancel exactly).
    return abs(float(div.decomposition.f_n(1.0))) <= 1e-12


def df_test(
    data: Dataset,
    model: RatioModel,
    div: FDivergence,
    alpha: float,
    fit_result: FitResult | None = None,
    options: SolverOptions | None = None,
) -> TestOutcome:
    """Divergence-based homogeneity test.

    Fits theta_hat with the optimal eta (unless a converged fit is supplied)
    and rejects when 2 m D_hat / f''(1) >= chi2_{d-1}(1 - alpha).  If the
    supplied decomposition has f_n(1) != 0 it is swapped for the universal
    one, which keeps the null calibration for any f.
    """
    alpha = _check_alpha(alpha)
    if div.f_double_prime_at_1 <= 0:
        raise ValueError("the test requires f''(1) > 0")
    _check_intercept(data, model)
    dof = model.parameter_dim - 1
    if dof < 1:
        raise InvalidDof("the test requires parameter dimension >= 2")

    if div.rho is not None and not np.isclose(div.rho, data.rho, rtol=1e-9, atol=0.0):
        raise ValueError(
            f"divergence was built for rho={div.rho}, dataset has rho={data.rho}; rebuild it"
        )
    if not _null_calibrated(div):
        div = replace(
            div, decomposition=universal_decomposition(div.f, data.rho), rho=data.rho
        )

    if fit_result is None:
        fit_result = fit(data, model, optimal_eta(), options)
    if not fit_result.converged:
        raise NotConverged(
            f"estimating equation did not converge (residual {fit_result.final_residual:.3e})"
        )

    est = estimate_divergence(data, model, div, fit_result)
    statistic = 2.0 * data.m * est.value / div.f_double_prime_at_1
    threshold = chi2_quantile(1.0 - alpha, dof)
    p_value = chi2_sf(statistic, dof)
    return TestOutcome(
        family=DF_BASED,
        statistic=float(statistic),
        threshold=float(threshold),
        p_value=float(p_value),
        reject=bool(statistic >= threshold),
        dof=dof,
    )


def empirical_likelihood_test(
    data: Dataset,
    model: RatioModel,
    alpha: float,
    fit_result: FitResult | None = None,
    options: SolverOptions | None = None,
) -> TestOutcome:
    """Score test from the empirical-likelihood estimator (exponential link).

    S = m (beta_hat - beta*)' Vn_hat (beta_hat - beta*) with beta* = 0 under
    the null and Vn_hat the sample covariance of the non-intercept features
    over the numerator sample; the moment-matching fit with the optimal eta
    coincides with the empirical-likelihood estimator.
    """
    alpha = _check_alpha(alpha)
    if model.link != EXPONENTIAL:
        raise ValueError("the empirical-likelihood test requires the exponential link")
    _check_intercept(data, model)
    dof = model.parameter_dim - 1
    if dof < 1:
        raise InvalidDof("the test requires parameter dimension >= 2")

    if fit_result is None:
        fit_result = fit(data, model, optimal_eta(), options)
    if not fit_result.converged:
        raise NotConverged(
            f"estimating equation did not converge (residual {fit_result.final_residual:.3e})"
        )

    beta = fit_result.theta_hat[1:]
    features_n = model.feature_map(data.numerator)[:, 1:]
    if features_n.shape[0] < 2:
        raise SingularCovariance("need at least two numerator rows")
    v_n = np.atleast_2d(np.cov(features_n, rowvar=False, ddof=1))
    eigs = np.linalg.eigvalsh(v_n)
    if eigs[0] <= 1e-12 * max(1.0, eigs[-1]):
        raise SingularCovariance("numerator feature covariance is singular")

    statistic = data.m * float(beta @ v_n @ beta)
    threshold = chi2_quantile(1.0 - alpha, dof)
    p_value = chi2_sf(statistic, dof)
    return TestOutcome(
        family=EMPIRICAL_LIKELIHOOD,
        statistic=statistic,
        threshold=float(threshold),
        p_value=float(p_value),
        reject=bool(statistic >= threshold),
        dof=dof,
    )


def hotelling_t2_test(data: Dataset, alpha: float) -> TestOutcome:
    """Two-sample Hotelling T^2 with the exact F(p, m_n + m_d - p - 1) scaling."""
    alpha = _check_alpha(alpha)
    m_n, m_d, p = data.m_n, data.m_d, data.p
    n = m_n + m_d
    if m_n < 2 or m_d < 2:
        raise ValueError("both samples need at least two rows")
    if n <= p + 1:
        raise ValueError(f"need m_n + m_d > p + 1, got {n} with p={p}")

    diff = data.numerator.mean(axis=0) - data.denominator.mean(axis=0)
    s_n = np.atleast_2d(np.cov(data.numerator, rowvar=False, ddof=1))
    s_d = np.atleast_2d(np.cov(data.denominator, rowvar=False, ddof=1))
    pooled = ((m_n - 1) * s_n + (m_d - 1) * s_d) / (n - 2)
    try:
        solved = np.linalg.solve(pooled, diff)
    except np.linalg.LinAlgError:
        raise SingularCovariance("pooled covariance is singular") from None
    statistic = (m_n * m_d / n) * float(diff @ solved)

    f_dof2 = n - p - 1
    scale = (n - 2) * p / f_dof2
    threshold = scale * f_quantile(1.0 - alpha, p, f_dof2)
    p_value = f_sf(statistic / scale, p, f_dof2)
    return TestOutcome(
        family=HOTELLING_T2,
        statistic=statistic,
        threshold=float(threshold),
        p_value=float(p_value),
        reject=bool(statistic >= threshold),
        dof=p,
    )


def power_from_noncentrality(noncentrality: float, dof: int, alpha: float) -> float:
    """Pr{Y >= chi2_dof(1 - alpha)} for Y noncentral chi-square(dof, ncp)."""
    alpha = _check_alpha(alpha)
    threshold = chi2_quantile(1.0 - alpha, dof)
    return noncentral_chi2_sf(threshold, dof, noncentrality)


def power_prediction(h, M, dof: int, alpha: float, mu=None) -> PowerPrediction:
    """Asymptotic local-alternative power with non-centrality h' M h.

    The direction h must satisfy the orthogonality E[grad r]' h = 0; this is
    the caller's responsibility and is verified only when ``mu`` (that
    expectation) is supplied.
    """
    alpha = _check_alpha(alpha)
    h = np.asarray(h, dtype=float)
    M = np.asarray(M, dtype=float)
    if M.shape != (h.size, h.size):
        raise ValueError(f"M has shape {M.shape}, expected {(h.size, h.size)}")
    eigs = np.linalg.eigvalsh((M + M.T) / 2.0)
    if eigs[0] < -1e-10 * max(1.0, abs(eigs[-1])):
        raise ValueError("M must be positive semidefinite")
    if mu is not None:
        mu = np.asarray(mu, dtype=float)
        bound = 1e-8 * (np.linalg.norm(mu) * np.linalg.norm(h) + 1.0)
        if abs(float(mu @ h)) > bound:
            raise ValueError("h violates the orthogonality constraint mu' h = 0")
    ncp = max(float(h @ M @ h), 0.0)
    return PowerPrediction(
        noncentrality=ncp,
        dof=int(dof),
        alpha=alpha,
        power=power_from_noncentrality(ncp, dof, alpha),
    )
