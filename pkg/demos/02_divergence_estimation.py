"""Estimating f-divergences through a fitted density ratio.

The divergence D_f = int p_d f(p_n/p_d) is estimated by splitting
f(r) = f_d(r) + r f_n(r) and averaging the two pieces over their own
samples.  For N(0.3,1) vs N(0,1) the true KL-type value is mu^2/2 = 0.045;
every split of the same f targets it, and the variance estimate attached to
the result tracks the Monte Carlo spread.
"""

import numpy as np

from ratiotest import (
    Dataset,
    RngStream,
    estimate_divergence,
    exponential_model,
    fit,
    linear_features,
    make_divergence,
)

MU = 0.3
M = 2000

gen = RngStream(12, 0).generator
data = Dataset(gen.standard_normal((M, 1)) + MU, gen.standard_normal((M, 1)))
model = exponential_model(linear_features(1))
result = fit(data, model)

print(f"true KL-divergence value: {MU**2 / 2:.4f}\n")
print(f"{'divergence':<12} {'split':<12} {'estimate':>9} {'sd(est)':>9}")
for name, decomposition in [
    ("kl", "optimal"),
    ("kl", "example"),
    ("kl", "conjugate"),
    ("mi", "optimal"),
    ("power", "optimal"),
    ("linear-kl", "optimal"),
]:
    div = make_divergence(name, data.rho, alpha=1.0 if name == "power" else None,
                          decomposition=decomposition)
    est = estimate_divergence(data, model, div, result)
    sd = np.sqrt(max(est.variance_estimate, 0.0) / data.m)
    print(f"{name:<12} {div.decomposition.name:<12} {est.value:>9.4f} {sd:>9.4f}")

print("\nnote: every KL split targets 0.045; the other rows are different")
print("functionals of the same pair (Pearson ~ exp(mu^2)-1 ~ 0.094; mutual")
print("information and the linear-KL variant are rho-weighted mixtures).")
