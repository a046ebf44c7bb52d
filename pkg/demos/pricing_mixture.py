# %% [markdown]
# # A mixture of two prices beats any single price
#
# Buyers value the item at 1 with small probability and at a low value
# otherwise. Posting only the high price sells too rarely; posting only the
# low price sells out cheaply. The LP mixes the two.

# %%
import numpy as np

from bwk.core import make_rng, run_episode
from bwk.envs import make_pricing_env, two_point_pricing
from bwk.lp import best_fixed_arm_value, lp_perfect, solve_primal
from bwk.policies import FixedDistribution

k, delta, T = 100, 0.1, 1000
demand, prices = two_point_pricing(k, delta, T)
env = make_pricing_env(demand, prices, k, T)
inst = env.instance
print("prices      ", np.round(prices, 4))
print("sale probs  ", [demand.prob_at_least(p) for p in prices])

# %%
sol = solve_primal(env.latent, inst.budgets)
best = best_fixed_arm_value(env.latent, inst.budgets)
print(f"LPOPT {sol.value:.2f}   best single price {best:.2f}   ratio {sol.value / best:.3f}")

# %% [markdown]
# Sampling every round from the LP-perfect mixture realizes most of LPOPT.

# %%
D = lp_perfect(env.latent, inst.budgets, inst.horizon, inst.null_arm)
print("mixture     ", np.round(D.weights, 4))
rew = np.array([run_episode(FixedDistribution(D), env, make_rng(1, t)).total_reward for t in range(200)])
print(f"mean revenue {rew.mean():.2f} +- {rew.std(ddof=1) / np.sqrt(len(rew)):.2f}")
