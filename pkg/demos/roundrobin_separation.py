# %% [markdown]
# # Why a fixed arm is not enough
#
# Three arms, three resources. Arm i pays 1 and burns one unit of resource i.
# Any single arm runs dry after B pulls, so the best fixed arm earns B.
# Spreading pulls over all arms earns 3B.

# %%
import numpy as np

from bwk.core import make_rng, run_episode
from bwk.envs import make_roundrobin_env
from bwk.lp import best_fixed_arm_value, lpopt, solve_primal
from bwk.policies import PdBwK, UcbFixedArm

d, B, T = 3, 200, 2000
env = make_roundrobin_env(d, B, T)
b = env.instance.budgets

# %%
sol = solve_primal(env.latent, b)
print("LPOPT            ", sol.value)
print("xi               ", np.round(sol.xi, 3))
print("best fixed arm   ", best_fixed_arm_value(env.latent, b))

# %% [markdown]
# PD-BwK prices the resources with Hedge and rotates between arms; the
# reward-only UCB baseline sticks to one arm and stops at B.

# %%
for name, make in [("pdbwk", PdBwK), ("ucb_fixed_arm", UcbFixedArm)]:
    rew = [run_episode(make(), env, make_rng(0, name, k)).total_reward for k in range(20)]
    print(f"{name:<14} mean reward {np.mean(rew):8.1f} of {lpopt(env.latent, b):.0f}")
