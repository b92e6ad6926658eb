# How sweeps damp a corrupted right-hand side
# -------------------------------------------
# A single wrong rhs evaluation (here: y' = s*y instead of y' = y during
# sweep 3 at node 2) contaminates the stored rhs values, shows up in the
# iterate one sweep later, and is then contracted geometrically by every
# further sweep until the iterate returns to the unperturbed fixed point.
# This is the mechanism that lets a residual-watching controller ride out
# soft errors by simply sweeping a little longer.

import numpy as np

from resilient_sdc.faults import KernelHook
from resilient_sdc.problems import LinearProblem
from resilient_sdc.quadrature import lobatto_rule

from resilient_sdc.sdc import predictor, sdc_sweep

rule = lobatto_rule(3)
n_sweeps = 20


def node_iterates(schedule):
    """Node states after the predictor and after each correction sweep."""
    system = LinearProblem(perturb_schedule=schedule).system(hook=KernelHook())
    sol = predictor(np.ones(1), rule, system, 0.0, 1.0)
    states = [sol.node_states.copy()]
    for k in range(2, n_sweeps + 2):
        sol = sdc_sweep(sol, rule, system, sweep_index=k)
        states.append(sol.node_states.copy())
    return states


clean = node_iterates(None)

for s in [1.5, 100.0]:
    perturbed = node_iterates({(3, 2): s})
    deviation = [float(np.max(np.abs(p - c))) for p, c in zip(perturbed, clean)]
    print(f"perturbation y' = {s}*y at sweep 3, node 2:")
    print(f"{'iterate':>8} {'|perturbed - clean|':>20} {'ratio':>8}")
    for k, dev in enumerate(deviation):
        ratio = f"{dev / deviation[k - 1]:.3f}" if k and deviation[k - 1] else ""
        print(f"{k:>8} {dev:>20.3e} {ratio:>8}")
    print()

# The corruption lands in the *stored* rhs, so the iterate only moves one
# sweep later; the per-sweep contraction afterwards is the same for any
# perturbation size, because the error recursion is linear.
