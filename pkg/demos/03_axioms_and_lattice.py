# coding: utf-8

# # The estimator satisfies the axioms, except when K is small
#
# Random nested pairs are drawn with seeded generators; every checker reports
# its worst relative slack.

# %%

from doerfler_lab import EstimatorParams, run_suite
from doerfler_lab.axioms import check_discrete_reliability, parameter_sets
from doerfler_lab.mesh import ElementSet, Partition

for p in parameter_sets(0, n_random=2):
    res = run_suite(p, n=200)
    print(p)
    for r in res.reports:
        print(f"  {r.axiom:13s} worst slack {r.worst_slack:+.3e}  passed={r.passed}")
    print("  coverage", res.coverage)

# %%

# Discrete reliability with constant K needs K >= 2 - 2**-beta when the zero
# element stays put: the difference of totals carries a factor K/(K-1).

p = EstimatorParams(alpha=1.0, beta=2.0, K=1.2, M=1)
t = Partition.initial(1)
ts = t.refine(t.leaves_in_cell(1))
print(check_discrete_reliability(p, t, ts))

# %%

# meet and join of two partitions; cardinalities add up
a = t.refine(ElementSet.from_elements(1, [t.zero_element]))
b = ts
print(a.meet(b).count + a.join(b).count, a.count + b.count)
