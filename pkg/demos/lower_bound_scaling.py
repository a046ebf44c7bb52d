# %% [markdown]
# # Regret on the two-arm lower-bound family
#
# Both arms pay 1 per round; the better arm consumes less (p - eps vs p).
# Playing the better arm forever earns floor(B+1)/(p-eps) - 1 on average.
# We scale budget and horizon together and watch PD-BwK's regret grow
# roughly like the square root of the scale. At small budgets the regret
# against the LP bound can even be negative: the LP ignores the extra
# round that the stopping rule grants.

# %%
import numpy as np

from bwk.envs import LowerBoundParams, opt_inf
from bwk.harness import ExperimentConfig, regret_curve, run_experiment

print("closed form, p=0.5 eps=0.1 B=10:", opt_inf(LowerBoundParams(2, 10, 0.5, 0.1)))

# %%
from bwk.suite import LB_SCALING

cfg = ExperimentConfig(dict(LB_SCALING), ["pdbwk"], trials=100, seed=0, alphas=[1, 4, 16])
curve = regret_curve(run_experiment(cfg), "pdbwk")
for a, g, g_norm in curve.points:
    print(f"alpha {a:4g}   regret {g:8.2f}   regret/sqrt(alpha) {g_norm:6.2f}")
print(f"log-log slope {curve.slope:.3f}")
