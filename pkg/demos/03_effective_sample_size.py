"""How fast does the doubly robust estimator learn under decaying overlap?

With the true propensity and a deliberately wrong projection (zero), the
estimator is still consistent, at a rate set by the effective sample size
m * a where a = 1 / E[1 / pi(X)].  Under MCAR, a = n / (n + N) and the
effective sample size is just n; the offset-logistic propensity has heavy
inverse-weight tails and a much smaller a.

    python3 demos/03_effective_sample_size.py
"""

import numpy as np

from ds3 import EstimationConfig, ScenarioConfig, generate, replication_seed, run_estimation, true_propensity

for kind in ("decaying_mcar", "decaying_offset"):
    print(kind)
    for n in (100, 1000, 10000):
        errors, ess = [], []
        for rep in range(30):
            scen = ScenarioConfig(n, 10 * n, propensity_scenario=kind, seed=replication_seed(1, kind, rep))
            data, params = generate(scen)
            pi = np.broadcast_to(true_propensity(data.x, scen, params), (data.m,))
            cfg = EstimationConfig(projection_model="zero", propensity_model="known", seed=scen.seed)
            report = run_estimation(data, cfg, known_pi=pi)
            errors.append(np.linalg.norm(report.theta_hat))
            ess.append(report.effective_sample_size)
        print(f"  n={n:>6}  median error {np.median(errors):.3f}   median effective sample size {np.median(ess):10.1f}")
