"""Exception types shared across the integration and resilience layers."""

from __future__ import annotations


class NonRealizableStateError(RuntimeError):
    """A sweep or stage produced a state outside the realizable set.

    Raised for non-finite states or right-hand-side evaluations, and for
    realizability-guard violations (for example a temperature outside the
    configured bounds).  Carries enough position information to attribute
    the failure to a node and sweep.
    """

    def __init__(self, detail, *, node_index=None, sweep_index=None, step_index=None):
        self.detail = detail
        self.node_index = node_index
        self.sweep_index = sweep_index
        self.step_index = step_index
        where = []
        if step_index is not None:
            where.append(f"step {step_index}")
        if sweep_index is not None:
            where.append(f"sweep {sweep_index}")
        if node_index is not None:
            where.append(f"node {node_index}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{detail}{suffix}")


class UnrecoverableStepError(RuntimeError):
    """A timestep could not be completed within the restart budget."""

    def __init__(self, detail, *, step_index=None, restarts=None):
        self.detail = detail
        self.step_index = step_index
        self.restarts = restarts
        where = f" at step {step_index}" if step_index is not None else ""
        tries = f" after {restarts} restarts" if restarts is not None else ""
        super().__init__(f"{detail}{where}{tries}")


class InsufficientHistoryError(ValueError):
    """Residual ratios were requested before two sweeps were recorded."""
