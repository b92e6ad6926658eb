# Collocation quadrature and observed convergence order
# ------------------------------------------------------
# Gauss-Lobatto rules drive the corrector: the q_matrix row m integrates a
# nodal polynomial from the interval start to node m.  Sweeping a low-order
# predictor against that quadrature raises the order by one per sweep, so a
# 3-node rule swept 4 times behaves like a 4th-order one-step method.

import numpy as np

from resilient_sdc.campaign import convergence_study
from resilient_sdc.quadrature import lobatto_rule

# The rules themselves: nodes on [0, 1] and the full-interval weights
# (last row of q_matrix).
for num_nodes in [2, 3, 4, 5]:
    rule = lobatto_rule(num_nodes)
    print(f"{num_nodes} nodes : {np.round(rule.nodes, 6)}")
    print(f"  weights: {np.round(rule.q_matrix[-1], 6)}")

# The 3-node matrix is small enough to check by hand against the integrals
# of the three Lagrange basis polynomials on {0, 1/2, 1}.
print()
print("3-node q_matrix:")
print(lobatto_rule(3).q_matrix)

# Observed order on y' = y over [0, 1], halving dt.  More nodes and sweeps
# buy higher order until the collocation order 2M - 2 saturates.
print()
print("observed convergence order on y' = y:")
dts = [0.2, 0.1, 0.05, 0.025]
rows = convergence_study("linear", dts, [2, 3], [1, 2, 4])
print(f"{'nodes':>5} {'sweeps':>6} {'order':>7}   errors at dt = {dts}")
for row in rows:
    errs = "  ".join(f"{e:.2e}" for e in row["errors"])
    print(f"{row['num_nodes']:>5} {row['sweeps']:>6} {row['observed_order']:>7.3f}   {errs}")
