# coding: utf-8

# # Optimal marking that still loses the rate
#
# Run the loop with the cyclic prescribed marking and with the ideal one that
# refines only the zero element, then compare the rate functional
# log2(N_k**s * eta_k) at the end of each cycle.

# %%

import numpy as np

from doerfler_lab import RunConfig, divergence_report, run, solve_params
from doerfler_lab.driver import cycle_boundary_rates
from doerfler_lab.marking import MarkerConfig

sol = solve_params(0.5, 1.0, 0.1)
dorfler = run(RunConfig(sol, MarkerConfig("dorfler-prescribed", theta=sol.theta), max_iterations=40 * sol.M))
ideal = run(RunConfig(sol, MarkerConfig("ideal"), max_iterations=40 * sol.M))

# %%

rates = np.array(cycle_boundary_rates(dorfler, sol.s0))
print(rates[:: 5])

# One more cycle doubles the number of added elements and removes 2**-(1.5) of
# eta^2, so the functional grows by about s0 - 0.75 = 0.25 per cycle.

# %%

for s in (sol.s0 / 8, sol.s0 / 4, sol.s0 / 2, sol.s0):
    print(s, divergence_report(dorfler, s).diverges, divergence_report(ideal, s).diverges)

# %%

# cardinalities explode for the Doerfler run; the ideal run adds one element per step
print(dorfler[-1].added, ideal[-1].added)
with open("trajectory_prescribed.csv", "w") as fh:
    fh.write(dorfler.to_csv())
