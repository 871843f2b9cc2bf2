# coding: utf-8

# # Choosing parameters and watching the markers
#
# Given a Doerfler parameter theta, a target rate s0 and a closeness eps, the
# solver returns an estimator for which marking with theta is optimal yet the
# adaptive loop converges at a worse rate than s0.

# %%

from doerfler_lab import solve_params, thresholds
from doerfler_lab.estimator import indicator_groups, total_sq
from doerfler_lab.marking import dorfler_greedy, dorfler_prescribed, verify_optimal_dorfler
from doerfler_lab.mesh import Partition

sol = solve_params(0.5, 1.0, 0.1)
print(sol)
print(thresholds(1.0, sol.K))

# theta sits just above 1/K, inside the window of width eps

# %%

p = sol.estimator_params()
t = Partition.initial(p.M)
for g in indicator_groups(p, t):
    print(f"cell {g.macro}  gen {g.gen}  x{g.count}  log2 eta^2 = {g.log2:+.4f}")
print("total", total_sq(p, t).value)

# The zero element carries exactly 1/K of the total.  Together with the first
# unit cell it carries exactly theta.

# %%

greedy = dorfler_greedy(p, t, sol.theta)
prescribed = dorfler_prescribed(p, t, 0)
print(sorted(greedy), sorted(prescribed))
print(verify_optimal_dorfler(p, t, prescribed, sol.theta))
