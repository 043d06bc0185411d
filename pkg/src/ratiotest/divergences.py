"""f-divergence catalog, decompositions, and the two-sample divergence estimator.

A divergence D_f = int p_d f(p_n/p_d) is estimated by splitting
f(r) = f_d(r) + r f_n(r) and averaging f_d over the denominator sample and
f_n over the numerator sample at the fitted ratio:

    D_hat = mean_d[ f_d(r(x; theta_hat)) ] + mean_n[ f_n(r(x; theta_hat)) ]

Each catalog entry ships the decomposition that minimizes the asymptotic
variance of D_hat when paired with the optimal eta.  The split

    f_d = f(r) / (1 + rho r),   f_n = rho f(r) / (1 + rho r)

("universal" below) is optimal for any f; some entries have simpler optimal
splits of their own.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import InvalidAlpha, NotConverged
from .estimation import Dataset, EtaFunction, FitResult, SolverOptions, fit
from .models import RatioModel
from .statdist import RngStream

__all__ = [
    "Decomposition",
    "FDivergence",
    "DivergenceEstimate",
    "make_divergence",
    "divergence_from_config",
    "universal_decomposition",
    "estimate_divergence",
    "AlternativeScenario",
    "EstimatorChoice",
    "DecompositionComparison",
    "decomposition_variance_compare",
    "gaussian_mean_shift_scenario",
]


@dataclass(frozen=True)
class Decomposition:
    """A split f(r) = f_d(r) + r * f_n(r)."""

    name: str
    f_d: Callable[[np.ndarray], np.ndarray]
    f_n: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FDivergence:
    """Convex f with derivatives and a named decomposition.

    ``rho`` records the sample-size ratio the object was built against when
    either f itself or the decomposition embeds it (None otherwise);
    ``rho_dependent`` flags divergences whose f embeds rho (MI, linear-KL).
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    f_prime: Callable[[np.ndarray], np.ndarray]
    f_double_prime_at_1: float
    decomposition: Decomposition
    rho: float | None = None
    rho_dependent: bool = False

    def __post_init__(self):
        if abs(float(self.f(1.0))) > 1e-12 or abs(float(self.f_prime(1.0))) > 1e-12:
            raise ValueError(f"divergence {self.name!r} violates f(1) = f'(1) = 0")


@dataclass(frozen=True)
class DivergenceEstimate:
    value: float
    c_hat: np.ndarray
    U_hat: np.ndarray
    variance_estimate: float


def universal_decomposition(f: Callable, rho: float) -> Decomposition:
    """f_d = f/(1 + rho r), f_n = rho f/(1 + rho r): optimal for any f."""
    rho = float(rho)

    def f_d(r):
        r = np.asarray(r, dtype=float)
        return f(r) / (1.0 + rho * r)

    def f_n(r):
        r = np.asarray(r, dtype=float)
        return rho * f(r) / (1.0 + rho * r)

    return Decomposition("universal", f_d, f_n)


def _kl_f(r):
    r = np.asarray(r, dtype=float)
    return r - 1.0 - np.log(r)


def _kl_f_prime(r):
    r = np.asarray(r, dtype=float)
    return 1.0 - 1.0 / r


def _power_f(alpha):
    def f(r):
        r = np.asarray(r, dtype=float)
        return r - 1.0 + np.expm1(-alpha * np.log(r)) / alpha

    return f


def _power_f_prime(alpha):
    def fp(r):
        r = np.asarray(r, dtype=float)
        return -np.expm1(-(alpha + 1.0) * np.log(r))

    return fp


def _mi_parts(rho):
    c1 = np.log1p(rho)

    def f_d(r):
        r = np.asarray(r, dtype=float)
        return (c1 - np.log1p(rho * r)) / (1.0 + rho)

    def f_n(r):
        r = np.asarray(r, dtype=float)
        return rho * (np.log(r) + c1 - np.log1p(rho * r)) / (1.0 + rho)

    def f(r):
        r = np.asarray(r, dtype=float)
        return f_d(r) + r * f_n(r)

    # For this split f' coincides with f_n, so c = E_n[(f' - f_n) grad log r] = 0.
    return f, f_n, f_d, f_n


def _linear_kl_parts(rho):
    c1 = np.log1p(rho)

    def big_l(r):
        return np.log1p(rho * r) - np.log(r) - c1

    def f(r):
        r = np.asarray(r, dtype=float)
        return (r - 1.0 + (1.0 + rho * r) * big_l(r)) / (1.0 + rho)

    def f_prime(r):
        r = np.asarray(r, dtype=float)
        return (1.0 - 1.0 / r + rho * big_l(r)) / (1.0 + rho)

    def example_f_d(r):
        r = np.asarray(r, dtype=float)
        return big_l(r) / (1.0 + rho)

    return f, f_prime, example_f_d


def _conjugate_decomposition(name, alpha):
    if name == "kl":
        # f*(s) = -log(1 - s), so f_d = -f*(f'(r)) = -log r and f_n = f' = 1 - 1/r.
        return Decomposition(
            "conjugate",
            lambda r: -np.log(np.asarray(r, dtype=float)),
            _kl_f_prime,
        )
    if name == "power":
        def f_d(r):
            r = np.asarray(r, dtype=float)
            return (1.0 + alpha) * np.expm1(-alpha * np.log(r)) / alpha

        return Decomposition("conjugate", f_d, _power_f_prime(alpha))
    raise ValueError("conjugate decomposition is available for 'kl' and 'power' only")


def make_divergence(
    name: str,
    rho: float,
    alpha: float | None = None,
    decomposition: str = "optimal",
) -> FDivergence:
    """Build a catalog divergence with a named decomposition.

    name: "kl" | "mi" | "power" | "linear-kl"; Power requires alpha > -1,
    alpha != 0.  decomposition: "optimal" | "conjugate" | "example".
    """
    name = name.lower()
    rho = float(rho)
    if not (rho > 0 and np.isfinite(rho)):
        raise ValueError(f"rho must be positive and finite, got {rho!r}")
    if decomposition not in ("optimal", "conjugate", "example"):
        raise ValueError(f"unknown decomposition {decomposition!r}")

    if name == "kl":
        f, fp, fpp1 = _kl_f, _kl_f_prime, 1.0
        if decomposition == "optimal":
            decomp, emb = universal_decomposition(f, rho), rho
        elif decomposition == "example":
            decomp = Decomposition(
                "example",
                lambda r: -np.log(np.asarray(r, dtype=float)) - 1.0,
                lambda r: np.ones_like(np.asarray(r, dtype=float)),
            )
            emb = None
        else:
            decomp, emb = _conjugate_decomposition("kl", None), None
        return FDivergence("kl", f, fp, fpp1, decomp, rho=emb, rho_dependent=False)

    if name == "power":
        if alpha is None:
            raise InvalidAlpha("power divergence requires alpha")
        alpha = float(alpha)
        if alpha <= -1 or alpha == 0:
            raise InvalidAlpha(f"power divergence needs alpha > -1, alpha != 0, got {alpha}")
        f, fp = _power_f(alpha), _power_f_prime(alpha)
        if decomposition in ("optimal", "example"):
            decomp = Decomposition(
                "example",
                lambda r: -1.0 + np.expm1(-alpha * np.log(np.asarray(r, dtype=float))) / alpha,
                lambda r: np.ones_like(np.asarray(r, dtype=float)),
            )
            emb = None
        else:
            decomp, emb = _conjugate_decomposition("power", alpha), None
        return FDivergence("power", f, fp, alpha + 1.0, decomp, rho=emb, rho_dependent=False)

    if name == "mi":
        if decomposition == "conjugate":
            raise ValueError("conjugate decomposition is available for 'kl' and 'power' only")
        f, fp, f_d, f_n = _mi_parts(rho)
        decomp = Decomposition("mutual-information", f_d, f_n)
        return FDivergence(
            "mi", f, fp, rho / (1.0 + rho) ** 2, decomp, rho=rho, rho_dependent=True
        )

    if name == "linear-kl":
        if decomposition == "conjugate":
            raise ValueError("conjugate decomposition is available for 'kl' and 'power' only")
        f, fp, example_f_d = _linear_kl_parts(rho)
        if decomposition == "optimal":
            decomp = universal_decomposition(f, rho)
        else:
            decomp = Decomposition("example", example_f_d, fp)
        return FDivergence(
            "linear-kl", f, fp, 1.0 / (1.0 + rho) ** 2, decomp, rho=rho, rho_dependent=True
        )

    raise ValueError(f"unknown divergence {name!r}")


def divergence_from_config(config: Mapping, rho: float) -> FDivergence:
    """Divergence from a plain record: {divergence, alpha?, decomposition?}."""
    name = str(config["divergence"]).lower()
    alpha = config.get("alpha")
    decomposition = str(config.get("decomposition", "optimal")).lower()
    return make_divergence(
        name, rho, alpha=None if alpha is None else float(alpha), decomposition=decomposition
    )


def estimate_divergence(
    data: Dataset, model: RatioModel, div: FDivergence, fit_result: FitResult
) -> DivergenceEstimate:
    """Plug-in divergence estimate with its m-scaled asymptotic variance.

    The variance estimates Var[Pf - sqrt(m) c' U^-1 Q] by sample moments
    centered at sample means, where Pf carries the two-sample weights
    sqrt(rho/(rho+1)) and sqrt(1/(rho+1)).
    """
    if not fit_result.converged:
        raise NotConverged("divergence estimation requires a converged fit")
    if div.rho is not None and not np.isclose(div.rho, data.rho, rtol=1e-9, atol=0.0):
        raise ValueError(
            f"divergence was built for rho={div.rho}, dataset has rho={data.rho}; rebuild it"
        )

    theta = fit_result.theta_hat
    eta = fit_result.eta
    rho = data.rho

    phi_d = model.feature_map(data.denominator)
    phi_n = model.feature_map(data.numerator)
    r_d = model.ratio_from_features(theta, phi_d)
    r_n = model.ratio_from_features(theta, phi_n)
    g_n = model.grad_log_from_features(theta, phi_n, r_n)
    g_d = model.grad_log_from_features(theta, phi_d, r_d)

    a_d = np.asarray(div.decomposition.f_d(r_d), dtype=float)
    a_n = np.asarray(div.decomposition.f_n(r_n), dtype=float)
    value = float(np.mean(a_d) + np.mean(a_n))

    resid_n = np.asarray(div.f_prime(r_n), dtype=float) - a_n
    c_hat = (g_n * resid_n[:, None]).sum(axis=0) / data.m_n

    eta_n = g_n * eta.eta_weights(r_n, rho)[:, None]
    r_eta_d = g_d * eta.ratio_eta_weights(r_d, rho)[:, None]

    w_d = rho / (rho + 1.0)
    w_n = 1.0 / (rho + 1.0)

    def _center(rows):
        return rows - rows.mean(axis=0)

    ad_c = a_d - a_d.mean()
    an_c = a_n - a_n.mean()
    red_c = _center(r_eta_d)
    en_c = _center(eta_n)

    var_pf = w_d * float(np.mean(ad_c**2)) + w_n * float(np.mean(an_c**2))
    s_q = (rho * (red_c.T @ red_c) / data.m_d + (en_c.T @ en_c) / data.m_n) / (rho + 1.0)
    k = w_d * (red_c.T @ ad_c) / data.m_d - w_n * (en_c.T @ an_c) / data.m_n

    v = np.linalg.solve(fit_result.U_hat.T, c_hat)
    variance = var_pf - 2.0 * float(v @ k) + float(v @ s_q @ v)

    return DivergenceEstimate(
        value=value, c_hat=c_hat, U_hat=fit_result.U_hat, variance_estimate=float(variance)
    )


@dataclass(frozen=True)
class AlternativeScenario:
    """A data-generating setup for Monte Carlo comparisons of estimators."""

    model: RatioModel
    draw: Callable[[RngStream], Dataset]
    master_seed: int = 0


@dataclass(frozen=True)
class EstimatorChoice:
    """A divergence (with its decomposition) paired with an eta function."""

    divergence: FDivergence
    eta: EtaFunction


@dataclass(frozen=True)
class DecompositionComparison:
    var_a: float
    var_b: float
    ratio: float
    mean_a: float
    mean_b: float
    replicates_used: int
    invalid_count: int


def gaussian_mean_shift_scenario(
    mu: float = 0.3, m_n: int = 500, m_d: int = 500, master_seed: int = 0
) -> AlternativeScenario:
    """Scalar exponential model (1, x); numerator N(mu, 1), denominator N(0, 1)."""
    from .models import exponential_model, linear_features

    model = exponential_model(linear_features(1))

    def draw(rng: RngStream) -> Dataset:
        gen = rng.generator
        num = gen.standard_normal((m_n, 1)) + mu
        den = gen.standard_normal((m_d, 1))
        return Dataset(num, den)

    return AlternativeScenario(model=model, draw=draw, master_seed=master_seed)


def decomposition_variance_compare(
    scenario: AlternativeScenario,
    choice_a: EstimatorChoice,
    choice_b: EstimatorChoice,
    replicates: int,
    options: SolverOptions | None = None,
) -> DecompositionComparison:
    """Monte Carlo variances of D_hat under two estimator configurations.

    Both configurations see the same dataset in each replicate; replicates
    where either fit fails are dropped and counted.
    """
    if replicates < 2:
        raise ValueError("need at least 2 replicates to compare variances")
    values_a, values_b = [], []
    invalid = 0
    for rep in range(replicates):
        data = scenario.draw(RngStream(scenario.master_seed, rep))
        try:
            fit_a = fit(data, scenario.model, choice_a.eta, options)
            fit_b = fit(data, scenario.model, choice_b.eta, options)
            est_a = estimate_divergence(data, scenario.model, choice_a.divergence, fit_a)
            est_b = estimate_divergence(data, scenario.model, choice_b.divergence, fit_b)
        except Exception:
            invalid += 1
            continue
        values_a.append(est_a.value)
        values_b.append(est_b.value)
    used = len(values_a)
    if used < 2:
        raise NotConverged("too few valid replicates for a variance comparison")
    var_a = float(np.var(values_a, ddof=1))
    var_b = float(np.var(values_b, ddof=1))
    return DecompositionComparison(
        var_a=var_a,
        var_b=var_b,
        ratio=var_a / var_b,
        mean_a=float(np.mean(values_a)),
        mean_b=float(np.mean(values_b)),
        replicates_used=used,
        invalid_count=invalid,
    )
