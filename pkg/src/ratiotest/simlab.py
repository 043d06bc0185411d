"""Monte Carlo harness: type-I error tables, power curves, local alternatives.

Every (cell, replicate) pair draws from its own random stream keyed by
(master_seed, cell_index, replicate_index), so reports are reproducible no
matter how the replicate loop is scheduled.  Tests that share the fitted
ratio parameter (divergence-based and empirical-likelihood) reuse a single
fit per replicate.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import json
import os
import time
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .divergences import make_divergence
from .errors import RatiotestError, RejectionSamplingStall
from .estimation import Dataset, fit, optimal_eta
from .htest import df_test, empirical_likelihood_test, hotelling_t2_test
from .models import RatioModel, exponential_model, linear_quadratic_features
from .statdist import RngStream, sample_iid_t, sample_mvn_standard

__all__ = [
    "THREADS_ENV",
    "SimConfig",
    "CellSpec",
    "CellResult",
    "SimReport",
    "sim_config_from_mapping",
    "load_sim_config",
    "generate_pair",
    "run",
    "emit_table",
    "parse_table",
    "scalar_model_moments",
    "local_alternative_theta",
    "local_alternative_limit_h",
]

THREADS_ENV = "RATIOTEST_THREADS"

SCENARIOS = ("type1", "mean-shift", "scale-shift", "local-alternative", "misspecified")
BASE_DISTS = ("normal", "t10", "t5")
TEST_NAMES = ("mi", "kl", "el", "t2")

_ENVELOPE_GRID = np.linspace(-10.0, 10.0, 4001)
_STALL_FLOOR = 1e-4


@dataclass(frozen=True)
class SimConfig:
    scenario: str
    base_dist: str = "normal"
    p: int = 10
    sample_sizes: tuple[tuple[int, int], ...] = ((1000, 1000),)
    grid: tuple[float, ...] = (0.0,)
    replicates: int = 300
    alpha: float = 0.05
    tests: tuple[str, ...] = ("mi", "kl", "el", "t2")
    master_seed: int = 0
    h_direction: tuple[float, float] = (0.0, 0.0)
    cubic_coeff: float = 0.1
    workers: int | None = None

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.base_dist not in BASE_DISTS:
            raise ValueError(f"unknown base distribution {self.base_dist!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.grid:
            raise ValueError("grid must be nonempty")
        if self.scenario == "scale-shift" and any(s <= 0 for s in self.grid):
            raise ValueError("scale-shift grid values must be positive")
        if not self.sample_sizes or any(mn < 1 or md < 1 for mn, md in self.sample_sizes):
            raise ValueError("sample sizes must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        unknown = set(self.tests) - set(TEST_NAMES)
        if not self.tests or unknown:
            raise ValueError(f"tests must be a nonempty subset of {TEST_NAMES}, got {self.tests!r}")
        if self.p < 1:
            raise ValueError("p must be positive")

    def canonical_hash(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k != "workers"}
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.md5(blob).hexdigest()


@dataclass(frozen=True)
class CellSpec:
    index: int
    m_n: int
    m_d: int
    value: float


@dataclass(frozen=True)
class CellResult:
    scenario: str
    dist: str
    m_n: int
    m_d: int
    grid_value: float
    test: str
    rejection_rate: float
    mc_se: float
    replicates_used: int
    invalid_count: int


@dataclass(frozen=True)
class SimReport:
    rows: tuple[CellResult, ...]
    master_seed: int
    config_hash: str
    wall_time: float


def sim_config_from_mapping(mapping: Mapping) -> SimConfig:
    """SimConfig from a flat key-value document (e.g. parsed TOML)."""
    known = {
        "scenario",
        "base_dist",
        "p",
        "sample_sizes",
        "grid",
        "replicates",
        "alpha",
        "tests",
        "master_seed",
        "h_direction",
        "cubic_coeff",
        "workers",
    }
    unknown = set(mapping) - known
    if unknown:
        raise ValueError(f"unknown simulation config keys: {sorted(unknown)}")
    kwargs = {}
    kwargs["scenario"] = str(mapping["scenario"]).lower()
    if "base_dist" in mapping:
        kwargs["base_dist"] = str(mapping["base_dist"]).lower()
    if "p" in mapping:
        kwargs["p"] = int(mapping["p"])
    if "sample_sizes" in mapping:
        kwargs["sample_sizes"] = tuple(
            (int(mn), int(md)) for mn, md in mapping["sample_sizes"]
        )
    if "grid" in mapping:
        kwargs["grid"] = tuple(float(g) for g in mapping["grid"])
    if "replicates" in mapping:
        kwargs["replicates"] = int(mapping["replicates"])
    if "alpha" in mapping:
        kwargs["alpha"] = float(mapping["alpha"])
    if "tests" in mapping:
        kwargs["tests"] = tuple(str(t).lower() for t in mapping["tests"])
    if "master_seed" in mapping:
        kwargs["master_seed"] = int(mapping["master_seed"])
    if "h_direction" in mapping:
        h = mapping["h_direction"]
        kwargs["h_direction"] = (float(h[0]), float(h[1]))
    if "cubic_coeff" in mapping:
        kwargs["cubic_coeff"] = float(mapping["cubic_coeff"])
    if "workers" in mapping:
        kwargs["workers"] = int(mapping["workers"])
    cfg = SimConfig(**kwargs)
    cfg.validate()
    return cfg


def load_sim_config(path) -> SimConfig:
    """Parse a TOML simulation config file."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return sim_config_from_mapping(tomllib.load(fh))


def _draw_base(dist: str, rng: RngStream, n: int, p: int) -> np.ndarray:
    if dist == "normal":
        return sample_mvn_standard(rng, n, p)
    if dist == "t10":
        return sample_iid_t(rng, n, p, 10)
    if dist == "t5":
        return sample_iid_t(rng, n, p, 5)
    raise ValueError(f"unknown base distribution {dist!r}")


_HERM_NODES, _HERM_WEIGHTS = np.polynomial.hermite_e.hermegauss(120)
_HERM_WEIGHTS = _HERM_WEIGHTS / np.sqrt(2.0 * np.pi)


def _gauss_expectation(fn) -> float:
    """E[f(X)] for X ~ N(0, 1) by Gauss-Hermite quadrature."""
    return float(np.dot(_HERM_WEIGHTS, fn(_HERM_NODES)))


def scalar_model_moments():
    """(mu, M) = (E[phi], E[phi phi']) for phi = (1, x, x^2) under N(0, 1)."""
    x = _HERM_NODES
    phi = np.stack([np.ones_like(x), x, x**2], axis=1)
    mu = _HERM_WEIGHTS @ phi
    m_mat = (phi * _HERM_WEIGHTS[:, None]).T @ phi
    return mu, m_mat


def local_alternative_theta(h2: float, h3: float, m: float, mass: float = 1.0):
    """theta_m for the scalar model: non-intercept coordinates h/sqrt(m), the
    intercept solved numerically so that E[r(X; theta_m)] = mass."""
    t2 = h2 / np.sqrt(m)
    t3 = h3 / np.sqrt(m)
    if t3 >= 0.49:
        raise ValueError("quadratic coefficient too large for a normalizable alternative")
    if mass <= 0:
        raise ValueError("target mass must be positive")
    norm = _gauss_expectation(lambda x: np.exp(t2 * x + t3 * x**2))
    t1 = np.log(mass) - np.log(norm)
    return np.array([t1, t2, t3])


def local_alternative_limit_h(h2: float, h3: float):
    """Limit direction h with the intercept solved from mu' h = 0."""
    mu, _ = scalar_model_moments()
    h1 = -(mu[1] * h2 + mu[2] * h3) / mu[0]
    return np.array([h1, h2, h3])


def _rejection_sample(rng: RngStream, n: int, weight_fn, envelope: float) -> np.ndarray:
    """Draw n points from N(0,1) reweighted by weight_fn (via accept/reject)."""
    gen = rng.generator
    out = np.empty(n)
    filled = 0
    proposed = 0
    accepted = 0
    while filled < n:
        batch = max(2 * (n - filled), 1024)
        x = gen.standard_normal(batch)
        u = gen.random(batch)
        keep = u * envelope <= weight_fn(x)
        proposed += batch
        accepted += int(keep.sum())
        picked = x[keep]
        take = min(n - filled, picked.size)
        out[filled : filled + take] = picked[:take]
        filled += take
        if proposed >= 50_000 and accepted / proposed < _STALL_FLOOR:
            raise RejectionSamplingStall(
                f"acceptance rate {accepted / proposed:.2e} below {_STALL_FLOOR}"
            )
    return out


def generate_pair(cfg: SimConfig, cell: CellSpec, rng: RngStream) -> Dataset:
    """Draw one (numerator, denominator) pair for a scenario cell."""
    m_n, m_d, value = cell.m_n, cell.m_d, cell.value
    scenario = cfg.scenario

    if scenario == "type1":
        num = _draw_base(cfg.base_dist, rng, m_n, cfg.p)
        den = _draw_base(cfg.base_dist, rng, m_d, cfg.p)
        return Dataset(num, den)

    if scenario == "mean-shift":
        num = _draw_base(cfg.base_dist, rng, m_n, cfg.p)
        den = _draw_base(cfg.base_dist, rng, m_d, cfg.p) + value
        return Dataset(num, den)

    if scenario == "scale-shift":
        num = _draw_base(cfg.base_dist, rng, m_n, cfg.p)
        den = value * _draw_base(cfg.base_dist, rng, m_d, cfg.p)
        return Dataset(num, den)

    m = m_n * m_d / (m_n + m_d)
    h2, h3 = cfg.h_direction

    if scenario == "local-alternative":
        theta = local_alternative_theta(value * h2, value * h3, m)

        def weight(x):
            return np.exp(theta[0] + theta[1] * x + theta[2] * x**2)

        envelope = float(np.max(weight(_ENVELOPE_GRID)))
        num = _rejection_sample(rng, m_n, weight, envelope)
        den = rng.generator.standard_normal(m_d)
        return Dataset(num[:, None], den[:, None])

    if scenario == "misspecified":
        eps = value
        mass = 1.0 - eps / np.sqrt(m)
        theta = local_alternative_theta(h2, h3, m, mass=mass)
        mu3 = _gauss_expectation(lambda x: x**3)
        c3 = cfg.cubic_coeff

        def weight(x):
            ratio = np.exp(theta[0] + theta[1] * x + theta[2] * x**2)
            # Clip the perturbed ratio at zero: it can dip negative only in a
            # region of negligible probability mass (|x| beyond ~5).
            return np.maximum(ratio + (c3 * (x**3 - mu3) + eps) / np.sqrt(m), 0.0)

        envelope = float(np.max(weight(_ENVELOPE_GRID)))
        num = _rejection_sample(rng, m_n, weight, envelope)
        den = rng.generator.standard_normal(m_d)
        return Dataset(num[:, None], den[:, None])

    raise ValueError(f"unknown scenario {scenario!r}")


def _scenario_model(cfg: SimConfig) -> RatioModel:
    if cfg.scenario in ("local-alternative", "misspecified"):
        return exponential_model(linear_quadratic_features(1))
    return exponential_model(linear_quadratic_features(cfg.p))


def _run_replicate(cfg: SimConfig, model: RatioModel, cell: CellSpec, rep: int) -> dict:
    """One replicate; returns {test: True/False reject, or None if invalid}."""
    rng = RngStream(cfg.master_seed, (cell.index, rep))
    outcomes: dict = {}
    try:
        data = generate_pair(cfg, cell, rng)
    except RejectionSamplingStall:
        return {t: None for t in cfg.tests}

    fit_result = None
    if any(t in cfg.tests for t in ("mi", "kl", "el")):
        try:
            fit_result = fit(data, model, optimal_eta())
            if not fit_result.converged:
                fit_result = None
        except (RatiotestError, np.linalg.LinAlgError):
            fit_result = None

    for t in cfg.tests:
        try:
            if t == "t2":
                outcomes[t] = hotelling_t2_test(data, cfg.alpha).reject
            elif t == "el":
                if fit_result is None:
                    outcomes[t] = None
                else:
                    outcomes[t] = empirical_likelihood_test(
                        data, model, cfg.alpha, fit_result=fit_result
                    ).reject
            else:  # "mi" or "kl"
                if fit_result is None:
                    outcomes[t] = None
                else:
                    div = make_divergence(t, rho=data.rho)
                    outcomes[t] = df_test(
                        data, model, div, cfg.alpha, fit_result=fit_result
                    ).reject
        except (RatiotestError, np.linalg.LinAlgError):
            outcomes[t] = None
    return outcomes


def run(cfg: SimConfig) -> SimReport:
    """Run every cell x test x replicate and aggregate rejection rates.

    The report is identical for identical configs and seeds, regardless of
    the worker count.
    """
    cfg.validate()
    start = time.perf_counter()
    model = _scenario_model(cfg)

    cells = []
    index = 0
    for m_n, m_d in cfg.sample_sizes:
        for value in cfg.grid:
            cells.append(CellSpec(index, m_n, m_d, float(value)))
            index += 1

    workers = cfg.workers
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1"))
    workers = max(1, workers)

    tasks = [(cell, rep) for cell in cells for rep in range(cfg.replicates)]
    results: dict = {}
    if workers == 1:
        for cell, rep in tasks:
            results[(cell.index, rep)] = _run_replicate(cfg, model, cell, rep)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_run_replicate, cfg, model, cell, rep): (cell.index, rep)
                for cell, rep in tasks
            }
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()

    rows = []
    for cell in cells:
        per_test = {t: [] for t in cfg.tests}
        for rep in range(cfg.replicates):
            outcome = results[(cell.index, rep)]
            for t in cfg.tests:
                per_test[t].append(outcome[t])
        for t in cfg.tests:
            flags = per_test[t]
            used = sum(1 for f in flags if f is not None)
            rejects = sum(1 for f in flags if f is True)
            rate = rejects / used if used else 0.0
            se = float(np.sqrt(rate * (1.0 - rate) / used)) if used else 0.0
            rows.append(
                CellResult(
                    scenario=cfg.scenario,
                    dist=cfg.base_dist,
                    m_n=cell.m_n,
                    m_d=cell.m_d,
                    grid_value=cell.value,
                    test=t,
                    rejection_rate=rate,
                    mc_se=se,
                    replicates_used=used,
                    invalid_count=cfg.replicates - used,
                )
            )

    return SimReport(
        rows=tuple(rows),
        master_seed=cfg.master_seed,
        config_hash=cfg.canonical_hash(),
        wall_time=time.perf_counter() - start,
    )


_CSV_COLUMNS = (
    "scenario",
    "dist",
    "m_n",
    "m_d",
    "grid_value",
    "test",
    "rejection_rate",
    "mc_se",
    "invalid_count",
)


def emit_table(report: SimReport, format: str = "csv") -> str:
    """Render a report with a stable column order; deterministic per report."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for row in report.rows:
            writer.writerow(
                [
                    row.scenario,
                    row.dist,
                    row.m_n,
                    row.m_d,
                    repr(row.grid_value),
                    row.test,
                    repr(row.rejection_rate),
                    repr(row.mc_se),
                    row.invalid_count,
                ]
            )
        return buf.getvalue()
    if format == "markdown":
        lines = ["| " + " | ".join(_CSV_COLUMNS) + " |"]
        lines.append("|" + "|".join(["---"] * len(_CSV_COLUMNS)) + "|")
        for row in report.rows:
            lines.append(
                "| "
                + " | ".join(
                    [
                        row.scenario,
                        row.dist,
                        str(row.m_n),
                        str(row.m_d),
                        repr(row.grid_value),
                        row.test,
                        repr(row.rejection_rate),
                        repr(row.mc_se),
                        str(row.invalid_count),
                    ]
                )
                + " |"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {format!r}")


def parse_table(text: str) -> list[dict]:
    """Parse an emitted CSV back into typed records."""
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for rec in reader:
        out.append(
            {
                "scenario": rec["scenario"],
                "dist": rec["dist"],
                "m_n": int(rec["m_n"]),
                "m_d": int(rec["m_d"]),
                "grid_value": float(rec["grid_value"]),
                "test": rec["test"],
                "rejection_rate": float(rec["rejection_rate"]),
                "mc_se": float(rec["mc_se"]),
                "invalid_count": int(rec["invalid_count"]),
            }
        )
    return out
