"""Semiparametric density-ratio models r(x; theta) with exact gradients.

A model couples a feature map phi (with the intercept convention
phi_1(x) = 1) to one of three links:

* exponential:  r = exp(theta' phi(x)),  grad log r = phi(x)
* linear:       r = theta' phi(x),       grad log r = phi(x) / r
* power(alpha): r = (1 + alpha theta' phi(x))^(1/alpha),
                grad log r = phi(x) / r^alpha

Model objects are immutable and every operation is pure, so they can be
shared freely across concurrent evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import DimensionMismatch, InvalidAlpha, NonpositiveRatio

__all__ = [
    "FeatureMap",
    "RatioModel",
    "linear_quadratic_features",
    "linear_features",
    "exponential_model",
    "linear_model",
    "power_model",
    "model_from_config",
    "eval_ratio",
    "grad_log_ratio",
]

EXPONENTIAL = "exponential"
LINEAR = "linear"
POWER = "power"


@dataclass(frozen=True)
class FeatureMap:
    """Vector-valued feature map with phi_1(x) = 1.

    ``evaluate`` accepts a single point of shape (p,) or a batch (n, p) and
    returns (d,) or (n, d) accordingly.
    """

    dimension: int
    input_dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if pts.ndim != 2 or pts.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"expected points of width {self.input_dim}, got shape {x.shape}"
            )
        phi = np.asarray(self.evaluate(pts), dtype=float)
        if phi.shape != (pts.shape[0], self.dimension):
            raise DimensionMismatch(
                f"feature map returned shape {phi.shape}, declared dimension {self.dimension}"
            )
        return phi[0] if single else phi


def linear_quadratic_features(p: int) -> FeatureMap:
    """phi(x) = (1, x_1..x_p, x_1^2..x_p^2); dimension 2p + 1.

    With p = 10 this is the 21-parameter simulation model; with p = 1 it is
    the scalar (1, x, x^2) model.
    """
    if p < 1:
        raise ValueError("p must be positive")

    def _eval(pts):
        return np.hstack([np.ones((pts.shape[0], 1)), pts, pts**2])

    return FeatureMap(2 * p + 1, p, _eval, name="linear-quadratic")


def linear_features(p: int) -> FeatureMap:
    """phi(x) = (1, x_1..x_p); dimension p + 1."""
    if p < 1:
        raise ValueError("p must be positive")

    def _eval(pts):
        return np.hstack([np.ones((pts.shape[0], 1)), pts])

    return FeatureMap(p + 1, p, _eval, name="linear")


@dataclass(frozen=True)
class RatioModel:
    """Density-ratio model: feature map plus link."""

    feature_map: FeatureMap
    link: str = EXPONENTIAL
    alpha: float | None = None  # power link only

    def __post_init__(self):
        if self.link not in (EXPONENTIAL, LINEAR, POWER):
            raise ValueError(f"unknown link {self.link!r}")
        if self.link == POWER:
            if self.alpha is None:
                raise InvalidAlpha("power link requires alpha")
            if self.alpha <= -1 or self.alpha == 0:
                raise InvalidAlpha(f"power link needs alpha > -1, alpha != 0, got {self.alpha}")
        elif self.alpha is not None:
            raise ValueError("alpha is only meaningful for the power link")

    @property
    def parameter_dim(self) -> int:
        return self.feature_map.dimension

    @property
    def input_dim(self) -> int:
        return self.feature_map.input_dim

    def null_theta(self) -> np.ndarray:
        """The parameter at which r is identically 1."""
        theta = np.zeros(self.parameter_dim)
        if self.link == LINEAR:
            theta[0] = 1.0
        return theta

    def _check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.parameter_dim,):
            raise DimensionMismatch(
                f"theta has shape {theta.shape}, model dimension is {self.parameter_dim}"
            )
        return theta

    def ratio_from_features(self, theta, phi: np.ndarray) -> np.ndarray:
        """r at precomputed features; phi has shape (n, d)."""
        theta = self._check_theta(theta)
        s = phi @ theta
        if self.link == EXPONENTIAL:
            return np.exp(s)
        if self.link == LINEAR:
            if np.any(s <= 0):
                raise NonpositiveRatio("linear link: theta' phi(x) <= 0 at a sample point")
            return s
        base = 1.0 + self.alpha * s
        if np.any(base <= 0):
            raise NonpositiveRatio("power link: 1 + alpha theta' phi(x) <= 0 at a sample point")
        return base ** (1.0 / self.alpha)

    def grad_log_from_features(self, theta, phi: np.ndarray, ratio=None) -> np.ndarray:
        """grad_theta log r at precomputed features; shape (n, d)."""
        theta = self._check_theta(theta)
        if self.link == EXPONENTIAL:
            return phi
        if self.link == LINEAR:
            r = self.ratio_from_features(theta, phi) if ratio is None else ratio
            return phi / r[:, None]
        base = 1.0 + self.alpha * (phi @ theta)
        if np.any(base <= 0):
            raise NonpositiveRatio("power link: 1 + alpha theta' phi(x) <= 0 at a sample point")
        return phi / base[:, None]


def exponential_model(feature_map: FeatureMap) -> RatioModel:
    return RatioModel(feature_map, EXPONENTIAL)


def linear_model(feature_map: FeatureMap) -> RatioModel:
    return RatioModel(feature_map, LINEAR)


def power_model(feature_map: FeatureMap, alpha: float) -> RatioModel:
    return RatioModel(feature_map, POWER, alpha)


def eval_ratio(model: RatioModel, theta, x):
    """r(x; theta) for a point (p,) or a batch (n, p)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    phi = model.feature_map(x)
    r = model.ratio_from_features(theta, phi[None, :] if single else phi)
    return float(r[0]) if single else r


def grad_log_ratio(model: RatioModel, theta, x):
    """grad_theta log r(x; theta) for a point (p,) or a batch (n, p)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    phi = model.feature_map(x)
    g = model.grad_log_from_features(theta, phi[None, :] if single else phi)
    return g[0] if single else g


_LINK_ALIASES = {
    "exp": EXPONENTIAL,
    "exponential": EXPONENTIAL,
    "linear": LINEAR,
    "power": POWER,
}

_FEATURE_BUILDERS = {
    "linear-quadratic": linear_quadratic_features,
    "linear": linear_features,
}


def model_from_config(config: Mapping) -> RatioModel:
    """Build a model from a plain record.

    Expected keys: ``link`` ("exp" | "linear" | "power"), optional ``alpha``
    (power only), ``features`` ("linear-quadratic" | "linear"), ``p``.
    """
    try:
        link = _LINK_ALIASES[str(config["link"]).lower()]
    except KeyError:
        raise ValueError(f"unknown or missing link in model config: {config!r}") from None
    features = str(config.get("features", "linear-quadratic")).lower()
    if features not in _FEATURE_BUILDERS:
        raise ValueError(f"unknown feature map {features!r}")
    p = int(config["p"])
    fm = _FEATURE_BUILDERS[features](p)
    alpha = config.get("alpha")
    if link == POWER:
        return power_model(fm, float(alpha))
    return RatioModel(fm, link)
