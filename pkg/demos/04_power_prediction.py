"""Local-alternative power: theory against simulation.

Alternatives shrinking at rate h/sqrt(m) give the divergence-based test a
non-central chi-square(d-1) limit with non-centrality h' M h, where M is the
second-moment matrix of the model features.  The predictor matches Monte
Carlo rejection rates, and the choice of f-divergence does not move the
curve.
"""

from ratiotest import SimConfig, power_prediction, run
from ratiotest.simlab import local_alternative_limit_h, scalar_model_moments

ALPHA = 0.05
H2, H3 = 1.5, 1.0
REPLICATES = 200  # desk scale; raise for tighter agreement

mu, m_matrix = scalar_model_moments()

print(f"{'scale':>6} {'ncp':>6} {'predicted':>10} {'mi':>7} {'kl':>7} {'el':>7}")
for scale in (0.0, 0.6, 1.0, 1.4):
    h = local_alternative_limit_h(scale * H2, scale * H3)
    pred = power_prediction(h, m_matrix, dof=2, alpha=ALPHA, mu=mu)
    report = run(
        SimConfig(
            scenario="local-alternative",
            sample_sizes=((4000, 4000),),
            grid=(scale,),
            replicates=REPLICATES,
            tests=("mi", "kl", "el"),
            master_seed=67,
            h_direction=(H2, H3),
        )
    )
    rates = {row.test: row.rejection_rate for row in report.rows}
    print(
        f"{scale:>6.1f} {pred.noncentrality:>6.2f} {pred.power:>10.3f} "
        f"{rates['mi']:>7.3f} {rates['kl']:>7.3f} {rates['el']:>7.3f}"
    )
