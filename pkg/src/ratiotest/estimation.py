"""Moment-matching estimation of density-ratio parameters.

The estimating function contrasts eta-moments reweighted by the model ratio
across the two samples:

    Q(theta) = mean_d[ r(x; theta) eta(x; theta) ] - mean_n[ eta(x; theta) ]

and theta_hat solves Q(theta_hat) = 0.  Two choices of eta are provided: the
plain gradient eta = grad log r, and the variance-optimal
eta = grad log r / (1 + rho r).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import NonpositiveRatio, SingularJacobian
from .models import RatioModel

__all__ = [
    "Dataset",
    "EtaFunction",
    "optimal_eta",
    "plain_gradient_eta",
    "SolverOptions",
    "solver_options_from_config",
    "FitResult",
    "estimating_equation",
    "fit",
    "theta_asymptotic_variance",
]


@dataclass(frozen=True)
class Dataset:
    """Two sample matrices: numerator (m_n x p) and denominator (m_d x p)."""

    numerator: np.ndarray
    denominator: np.ndarray

    def __post_init__(self):
        num = np.atleast_2d(np.asarray(self.numerator, dtype=float))
        den = np.atleast_2d(np.asarray(self.denominator, dtype=float))
        if num.ndim != 2 or den.ndim != 2:
            raise ValueError("samples must be 2-dimensional arrays")
        if num.shape[0] < 1 or den.shape[0] < 1:
            raise ValueError("both samples must contain at least one row")
        if num.shape[1] != den.shape[1]:
            raise ValueError(
                f"sample widths differ: {num.shape[1]} vs {den.shape[1]}"
            )
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @property
    def m_n(self) -> int:
        return self.numerator.shape[0]

    @property
    def m_d(self) -> int:
        return self.denominator.shape[0]

    @property
    def p(self) -> int:
        return self.numerator.shape[1]

    @property
    def rho(self) -> float:
        """Realized sample-size ratio m_n / m_d."""
        return self.m_n / self.m_d

    @property
    def m(self) -> float:
        """Harmonic sample size m_n m_d / (m_n + m_d)."""
        return self.m_n * self.m_d / (self.m_n + self.m_d)


@dataclass(frozen=True)
class EtaFunction:
    """Estimating-function weight: eta(x; theta) = weight(r, rho) * grad log r.

    ``ratio_weight`` gives r * weight(r) in a form that stays finite for
    extreme ratios; it defaults to the literal product.
    """

    kind: str
    weight: Callable[[np.ndarray, float], np.ndarray]
    ratio_weight: Callable[[np.ndarray, float], np.ndarray] | None = None

    def eta_weights(self, r: np.ndarray, rho: float) -> np.ndarray:
        return self.weight(r, rho)

    def ratio_eta_weights(self, r: np.ndarray, rho: float) -> np.ndarray:
        if self.ratio_weight is not None:
            return self.ratio_weight(r, rho)
        return r * self.weight(r, rho)


def optimal_eta() -> EtaFunction:
    """eta(x; theta) = grad log r / (1 + rho r): minimizes the asymptotic variance."""

    def _w(r, rho):
        return 1.0 / (1.0 + rho * r)

    def _rw(r, rho):
        # r / (1 + rho r) written to stay finite as r -> 0 or r -> inf
        with np.errstate(divide="ignore"):
            return 1.0 / (rho + 1.0 / r)

    return EtaFunction("optimal", _w, _rw)


def plain_gradient_eta() -> EtaFunction:
    """eta(x; theta) = grad log r."""
    return EtaFunction("plain", lambda r, rho: np.ones_like(r))


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 100
    fd_step: float = 1e-6
    theta0: np.ndarray | None = None

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1 or self.fd_step <= 0:
            raise ValueError("invalid solver options")


def solver_options_from_config(config: Mapping) -> SolverOptions:
    """Options from a plain record: {tol, max_iter, fd_step}."""
    return SolverOptions(
        tol=float(config.get("tol", 1e-10)),
        max_iter=int(config.get("max_iter", 100)),
        fd_step=float(config.get("fd_step", 1e-6)),
    )


@dataclass(frozen=True)
class FitResult:
    theta_hat: np.ndarray
    converged: bool
    iterations: int
    final_residual: float
    U_hat: np.ndarray
    jacobian_condition: float
    eta: EtaFunction


class _Workspace:
    """Precomputed feature matrices for repeated Q evaluations on one dataset."""

    def __init__(self, data: Dataset, model: RatioModel, eta: EtaFunction):
        if data.p != model.input_dim:
            raise ValueError(
                f"dataset width {data.p} does not match model input dimension {model.input_dim}"
            )
        self.model = model
        self.eta = eta
        self.rho = data.rho
        self.phi_n = model.feature_map(data.numerator)
        self.phi_d = model.feature_map(data.denominator)
        self.m_n = data.m_n
        self.m_d = data.m_d

    def q(self, theta: np.ndarray) -> np.ndarray:
        model, eta, rho = self.model, self.eta, self.rho
        r_d = model.ratio_from_features(theta, self.phi_d)
        g_d = model.grad_log_from_features(theta, self.phi_d, r_d)
        r_n = model.ratio_from_features(theta, self.phi_n)
        g_n = model.grad_log_from_features(theta, self.phi_n, r_n)
        rw_d = eta.ratio_eta_weights(r_d, rho)
        w_n = eta.eta_weights(r_n, rho)
        return g_d.T @ rw_d / self.m_d - g_n.T @ w_n / self.m_n

    def jacobian(self, theta: np.ndarray, fd_step: float) -> np.ndarray:
        d = theta.size
        jac = np.empty((d, d))
        for k in range(d):
            h = fd_step * max(1.0, abs(theta[k]))
            up = theta.copy()
            up[k] += h
            down = theta.copy()
            down[k] -= h
            jac[:, k] = (self.q(up) - self.q(down)) / (2.0 * h)
        return jac

    def u_hat(self, theta: np.ndarray) -> np.ndarray:
        r_n = self.model.ratio_from_features(theta, self.phi_n)
        g_n = self.model.grad_log_from_features(theta, self.phi_n, r_n)
        w_n = self.eta.eta_weights(r_n, self.rho)
        return (g_n * w_n[:, None]).T @ g_n / self.m_n


def estimating_equation(data: Dataset, model: RatioModel, eta: EtaFunction, theta) -> np.ndarray:
    """Q(theta) = mean_d[r eta] - mean_n[eta]."""
    theta = np.asarray(theta, dtype=float)
    return _Workspace(data, model, eta).q(theta)


def fit(
    data: Dataset,
    model: RatioModel,
    eta: EtaFunction | None = None,
    options: SolverOptions | None = None,
) -> FitResult:
    """Solve Q(theta) = 0 by damped Newton with a central-difference Jacobian.

    Starts from the r == 1 point of the link unless ``options.theta0``
    overrides it.  Non-convergence within ``max_iter`` iterations is reported
    through ``converged=False``, not an exception; an uninvertible Jacobian
    raises ``SingularJacobian``.
    """
    eta = optimal_eta() if eta is None else eta
    options = SolverOptions() if options is None else options
    ws = _Workspace(data, model, eta)

    theta = model.null_theta() if options.theta0 is None else np.array(options.theta0, dtype=float)
    if theta.shape != (model.parameter_dim,):
        raise ValueError("theta0 has the wrong dimension")

    q = ws.q(theta)
    res = float(np.max(np.abs(q)))
    iterations = 0
    cond = np.nan
    converged = res <= options.tol

    while not converged and iterations < options.max_iter:
        jac = ws.jacobian(theta, options.fd_step)
        if not np.all(np.isfinite(jac)):
            break
        cond = float(np.linalg.cond(jac))
        try:
            step = np.linalg.solve(jac, -q)
        except np.linalg.LinAlgError:
            raise SingularJacobian(
                f"Newton Jacobian is singular (condition number {cond:.3e})",
                condition_number=cond,
            ) from None

        # Halve the step until ||Q|| decreases (up to 20 halvings).
        q_norm = float(np.linalg.norm(q))
        scale = 1.0
        improved = False
        for _ in range(21):
            candidate = theta + scale * step
            try:
                q_new = ws.q(candidate)
            except NonpositiveRatio:
                q_new = None
            if q_new is not None and np.all(np.isfinite(q_new)) and np.linalg.norm(q_new) < q_norm:
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
        theta, q = candidate, q_new
        iterations += 1
        res = float(np.max(np.abs(q)))
        converged = res <= options.tol

    if not np.isfinite(cond):
        jac = ws.jacobian(theta, options.fd_step)
        cond = float(np.linalg.cond(jac)) if np.all(np.isfinite(jac)) else np.inf

    return FitResult(
        theta_hat=theta,
        converged=converged,
        iterations=iterations,
        final_residual=res,
        U_hat=ws.u_hat(theta),
        jacobian_condition=cond,
        eta=eta,
    )


def _cov(rows: np.ndarray, ddof: int = 1) -> np.ndarray:
    out = np.atleast_2d(np.cov(rows, rowvar=False, ddof=ddof))
    return out


def theta_asymptotic_variance(
    data: Dataset, model: RatioModel, eta: EtaFunction, theta_hat
) -> np.ndarray:
    """Estimate of the m-scaled covariance of theta_hat:

        U^-1 [rho Vd[r eta] + Vn[eta]] / (rho + 1) U^-T

    with sample covariances over the respective samples and U estimated on
    the numerator sample.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    ws = _Workspace(data, model, eta)
    rho = ws.rho

    r_d = model.ratio_from_features(theta_hat, ws.phi_d)
    g_d = model.grad_log_from_features(theta_hat, ws.phi_d, r_d)
    r_eta_d = g_d * ws.eta.ratio_eta_weights(r_d, rho)[:, None]

    r_n = model.ratio_from_features(theta_hat, ws.phi_n)
    g_n = model.grad_log_from_features(theta_hat, ws.phi_n, r_n)
    eta_n = g_n * ws.eta.eta_weights(r_n, rho)[:, None]

    mid = (rho * _cov(r_eta_d) + _cov(eta_n)) / (rho + 1.0)
    u = (eta_n.T @ g_n) / ws.m_n
    try:
        half = np.linalg.solve(u, mid)
        out = np.linalg.solve(u, half.T).T
    except np.linalg.LinAlgError:
        raise SingularJacobian(
            f"U is singular (condition number {np.linalg.cond(u):.3e})",
            condition_number=float(np.linalg.cond(u)),
        ) from None
    return out
