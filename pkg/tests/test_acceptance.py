"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.  Monte Carlo criteria use pinned master seeds; their
tolerance bands come from the criteria themselves and are generous relative
to the binomial standard errors at the stated replicate counts.
"""

import time

import numpy as np
from scipy import stats

from ratiotest.cli import parse_and_dispatch
from ratiotest.divergences import (
    EstimatorChoice,
    decomposition_variance_compare,
    gaussian_mean_shift_scenario,
    make_divergence,
)
from ratiotest.estimation import Dataset, fit, optimal_eta, plain_gradient_eta
from ratiotest.htest import df_test, power_prediction
from ratiotest.models import (
    eval_ratio,
    exponential_model,
    grad_log_ratio,
    linear_features,
    linear_model,
    linear_quadratic_features,
    power_model,
)
from ratiotest.simlab import (
    SimConfig,
    local_alternative_limit_h,
    run,
    scalar_model_moments,
)
from ratiotest.statdist import RngStream, chi2_cdf, chi2_quantile, noncentral_chi2_sf


def _check(criterion, ok, detail):
    print(f"[ACCEPTANCE {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def _catalog_with_curvatures():
    entries = []
    for rho in (0.5, 1.0, 2.0):
        entries.append((make_divergence("kl", rho), 1.0))
        entries.append((make_divergence("mi", rho), rho / (1.0 + rho) ** 2))
    for alpha in (-0.5, 1.0):
        entries.append((make_divergence("power", 1.0, alpha=alpha), alpha + 1.0))
    entries.append((make_divergence("linear-kl", 1.0), 0.25))
    return entries


def test_criterion_01_decomposition_identities():
    start = time.perf_counter()
    grid = np.logspace(-3, 3, 200)
    worst_identity = 0.0
    worst_vanish = 0.0
    worst_curvature = 0.0
    for div, expected_curv in _catalog_with_curvatures():
        f = div.f(grid)
        split = div.decomposition.f_d(grid) + grid * div.decomposition.f_n(grid)
        worst_identity = max(
            worst_identity, float(np.max(np.abs(split - f) / np.maximum(1.0, np.abs(f))))
        )
        worst_vanish = max(worst_vanish, abs(float(div.f(1.0))), abs(float(div.f_prime(1.0))))
        # five-point second difference so truncation sits well below 1e-8
        h = 1e-3
        fd2 = (
            -float(div.f(1.0 - 2 * h))
            + 16.0 * float(div.f(1.0 - h))
            - 30.0 * float(div.f(1.0))
            + 16.0 * float(div.f(1.0 + h))
            - float(div.f(1.0 + 2 * h))
        ) / (12.0 * h**2)
        worst_curvature = max(
            worst_curvature,
            abs(fd2 - expected_curv),
            abs(div.f_double_prime_at_1 - expected_curv),
        )
    elapsed = time.perf_counter() - start
    ok = (
        worst_identity <= 1e-10
        and worst_vanish <= 1e-12
        and worst_curvature <= 1e-8
        and elapsed < 1.0
    )
    _check(
        1,
        ok,
        f"identity {worst_identity:.2e} (<=1e-10), f(1)/f'(1) {worst_vanish:.2e} "
        f"(<=1e-12), f''(1) {worst_curvature:.2e} (<=1e-8), {elapsed:.2f}s (<1s)",
    )


def test_criterion_02_gradient_oracle():
    start = time.perf_counter()
    models = [
        exponential_model(linear_quadratic_features(2)),
        linear_model(linear_features(2)),
        power_model(linear_quadratic_features(2), alpha=1.0),
        power_model(linear_features(2), alpha=-0.5),
    ]
    rng = np.random.default_rng(2025)
    worst = 0.0
    for model in models:
        for _ in range(100):
            x = rng.normal(size=2)
            theta = rng.normal(size=model.parameter_dim) * 0.1
            if model.link != "exponential":
                theta[0] = abs(theta[0]) + 1.0
            g = grad_log_ratio(model, theta, x)
            fd = np.empty_like(g)
            for k in range(theta.size):
                up, dn = theta.copy(), theta.copy()
                up[k] += 1e-6
                dn[k] -= 1e-6
                fd[k] = (
                    np.log(eval_ratio(model, up, x)) - np.log(eval_ratio(model, dn, x))
                ) / 2e-6
            worst = max(worst, float(np.max(np.abs(fd - g)) / max(1e-8, np.max(np.abs(g)))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 1.0
    _check(2, ok, f"max rel err {worst:.2e} (<=1e-5) over 100 draws x 4 links, {elapsed:.2f}s (<1s)")


def test_criterion_03_table1_type_one_errors():
    start = time.perf_counter()
    normal = run(
        SimConfig(
            scenario="type1", base_dist="normal", p=10, sample_sizes=((1000, 1000),),
            grid=(0.0,), replicates=300, tests=("mi", "kl", "el"), master_seed=11,
        )
    )
    t5 = run(
        SimConfig(
            scenario="type1", base_dist="t5", p=10, sample_sizes=((1000, 1000),),
            grid=(0.0,), replicates=300, tests=("mi", "el"), master_seed=11,
        )
    )
    rates_n = {row.test: row.rejection_rate for row in normal.rows}
    rates_t = {row.test: row.rejection_rate for row in t5.rows}
    elapsed = time.perf_counter() - start
    ok = (
        abs(rates_n["mi"] - 0.053) <= 0.04
        and abs(rates_n["kl"] - 0.057) <= 0.04
        and abs(rates_n["el"] - 0.060) <= 0.04
        and rates_t["el"] >= 0.10
        and rates_t["mi"] <= 0.11
        and elapsed < 600.0
    )
    _check(
        3,
        ok,
        f"normal mi={rates_n['mi']:.3f} (0.053±0.04) kl={rates_n['kl']:.3f} (0.057±0.04) "
        f"el={rates_n['el']:.3f} (0.060±0.04); t5 el={rates_t['el']:.3f} (>=0.10) "
        f"mi={rates_t['mi']:.3f} (<=0.11); {elapsed:.0f}s (<600s)",
    )


def test_criterion_04_table2_mean_shift_cells():
    report = run(
        SimConfig(
            scenario="mean-shift", base_dist="normal", p=10, sample_sizes=((500, 500),),
            grid=(-0.1, 0.0, 0.1), replicates=300, tests=("mi", "t2"), master_seed=21,
        )
    )
    rates = {(row.grid_value, row.test): row.rejection_rate for row in report.rows}
    ok = (
        abs(rates[(0.0, "mi")] - 0.046) <= 0.05
        and abs(rates[(0.1, "mi")] - 0.866) <= 0.07
        and abs(rates[(-0.1, "t2")] - 0.964) <= 0.05
    )
    _check(
        4,
        ok,
        f"mu=0 mi={rates[(0.0, 'mi')]:.3f} (0.046±0.05); "
        f"mu=0.1 mi={rates[(0.1, 'mi')]:.3f} (0.866±0.07); "
        f"mu=-0.1 t2={rates[(-0.1, 't2')]:.3f} (0.964±0.05)",
    )


def test_criterion_05_table3_scale_shift_cells():
    report = run(
        SimConfig(
            scenario="scale-shift", base_dist="normal", p=10, sample_sizes=((500, 500),),
            grid=(0.9, 1.1), replicates=300, tests=("mi", "t2"), master_seed=22,
        )
    )
    rates = {(row.grid_value, row.test): row.rejection_rate for row in report.rows}
    ok = (
        abs(rates[(1.1, "mi")] - 0.992) <= 0.03
        and rates[(0.9, "t2")] <= 0.12
        and rates[(1.1, "t2")] <= 0.12
    )
    _check(
        5,
        ok,
        f"sigma=1.1 mi={rates[(1.1, 'mi')]:.3f} (0.992±0.03); "
        f"t2 blind to scale: {rates[(0.9, 't2')]:.3f}, {rates[(1.1, 't2')]:.3f} (<=0.12)",
    )


def test_criterion_06_null_chi_square_law():
    model = exponential_model(linear_quadratic_features(1))
    stats_kl, stats_mi = [], []
    for rep in range(500):
        gen = RngStream(2024, rep).generator
        data = Dataset(gen.standard_normal((2000, 1)), gen.standard_normal((2000, 1)))
        res = fit(data, model)
        if not res.converged:
            continue
        stats_kl.append(
            df_test(data, model, make_divergence("kl", data.rho), 0.05, fit_result=res).statistic
        )
        stats_mi.append(
            df_test(data, model, make_divergence("mi", data.rho), 0.05, fit_result=res).statistic
        )
    crit = 1.6276 / np.sqrt(len(stats_kl))  # 1% Kolmogorov critical value
    ks_kl = stats.kstest(stats_kl, stats.chi2(2).cdf).statistic
    ks_mi = stats.kstest(stats_mi, stats.chi2(2).cdf).statistic
    ok = len(stats_kl) >= 490 and ks_kl < crit and ks_mi < crit
    _check(
        6,
        ok,
        f"KS vs chi2_2 over {len(stats_kl)} reps: kl={ks_kl:.4f} mi={ks_mi:.4f} (<{crit:.4f})",
    )


def test_criterion_07_local_alternative_power():
    h2, h3 = 1.5, 1.0
    mu, m_mat = scalar_model_moments()
    pred = power_prediction(
        local_alternative_limit_h(h2, h3), m_mat, dof=2, alpha=0.05, mu=mu
    ).power
    report = run(
        SimConfig(
            scenario="local-alternative", base_dist="normal",
            sample_sizes=((5000, 5000),), grid=(1.0,), replicates=500,
            tests=("mi", "kl", "el"), master_seed=31, h_direction=(h2, h3),
        )
    )
    rates = {row.test: row.rejection_rate for row in report.rows}
    ok = (
        abs(rates["mi"] - pred) <= 0.06
        and abs(rates["kl"] - pred) <= 0.06
        and abs(rates["kl"] - rates["mi"]) <= 0.06
        and abs(rates["el"] - rates["mi"]) <= 0.06
        and abs(rates["el"] - rates["kl"]) <= 0.06
    )
    _check(
        7,
        ok,
        f"predicted={pred:.3f} mi={rates['mi']:.3f} kl={rates['kl']:.3f} "
        f"el={rates['el']:.3f} (all pairwise bands ±0.06)",
    )


def test_criterion_08_misspecified_power_ordering():
    report = run(
        SimConfig(
            scenario="misspecified", base_dist="normal", sample_sizes=((2000, 2000),),
            grid=(0.5, 1.0, 2.0), replicates=500, tests=("mi", "kl", "el"),
            master_seed=41, h_direction=(0.0, 0.0), cubic_coeff=0.1,
        )
    )
    rates = {(row.grid_value, row.test): row.rejection_rate for row in report.rows}
    gaps = []
    ok = True
    for eps in (0.5, 1.0, 2.0):
        for df_family in ("mi", "kl"):
            gap = rates[(eps, df_family)] - rates[(eps, "el")]
            gaps.append(f"eps={eps} {df_family}-el={gap:+.3f}")
            ok = ok and gap >= -0.03
    _check(8, ok, "; ".join(gaps) + " (all >= -0.03)")


def test_criterion_09_variance_dominance():
    scenario = gaussian_mean_shift_scenario(mu=0.3, m_n=500, m_d=500, master_seed=99)
    optimal = EstimatorChoice(make_divergence("kl", 1.0), optimal_eta())
    baseline = EstimatorChoice(
        make_divergence("kl", 1.0, decomposition="conjugate"), plain_gradient_eta()
    )
    cmp = decomposition_variance_compare(scenario, optimal, baseline, replicates=300)
    ok = cmp.var_a <= 1.1 * cmp.var_b and cmp.invalid_count == 0
    _check(
        9,
        ok,
        f"var(optimal)={cmp.var_a:.3e} var(conjugate+plain)={cmp.var_b:.3e} "
        f"ratio={cmp.ratio:.3f} (<=1.1)",
    )


def test_criterion_10_statdist_oracles():
    # Non-central chi-square survival vs a sampling oracle.
    x, k = 31.410, 20
    worst_sf = 0.0
    for i, ncp in enumerate((0.0, 5.0, 10.0)):
        gen = RngStream(314, i).generator
        z = gen.standard_normal((1_000_000, k))
        z[:, 0] += np.sqrt(ncp)
        mc = float(np.mean(np.sum(z**2, axis=1) >= x))
        worst_sf = max(worst_sf, abs(noncentral_chi2_sf(x, k, ncp) - mc))

    worst_rt = 0.0
    for dof in (1, 2, 5, 20, 50):
        for p in np.arange(0.01, 1.0, 0.07):
            worst_rt = max(worst_rt, abs(chi2_cdf(chi2_quantile(p, dof), dof) - p))

    from ratiotest.statdist import sample_iid_t

    v10 = float(np.var(sample_iid_t(RngStream(3, 0), 100_000, 1, 10)))
    v5 = float(np.var(sample_iid_t(RngStream(3, 1), 100_000, 1, 5)))
    # 4 sigma bands from Var(s^2) ~ (mu4 - sigma^4)/n
    ok = (
        worst_sf <= 0.003
        and worst_rt <= 1e-10
        and abs(v10 - 1.25) <= 4 * 0.00685
        and abs(v5 - 5.0 / 3.0) <= 4 * 0.0149
    )
    _check(
        10,
        ok,
        f"ncx2 sf vs MC {worst_sf:.4f} (<=0.003); round-trip {worst_rt:.1e} (<=1e-10); "
        f"t var df10={v10:.4f} (1.25) df5={v5:.4f} (1.667)",
    )


def test_criterion_11_simulate_determinism(tmp_path, capsys, monkeypatch):
    config = (
        'scenario = "type1"\n'
        'base_dist = "normal"\n'
        "p = 2\n"
        "sample_sizes = [[150, 130]]\n"
        "grid = [0.0]\n"
        "replicates = 12\n"
        'tests = ["mi", "kl", "el", "t2"]\n'
        "master_seed = 77\n"
    )
    cfg = tmp_path / "sim.toml"
    cfg.write_text(config)
    outputs = []
    for i, threads in enumerate(("1", "4", "1")):
        monkeypatch.setenv("RATIOTEST_THREADS", threads)
        out = tmp_path / f"report_{i}.csv"
        code = parse_and_dispatch(["simulate", "--config", str(cfg), "--out", str(out)])
        capsys.readouterr()
        assert code == 0
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    _check(
        11,
        ok,
        f"CSV byte-identical across reruns and thread counts 1/4/1 "
        f"({len(outputs[0])} bytes)",
    )
