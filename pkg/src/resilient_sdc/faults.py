"""Seedable soft-error injection into kernel return arrays.

Faults are injected only into the arrays returned by right-hand-side
kernels, never into checkpointed solution vectors, quadrature matrices, or
controller state, so corruption migrates up the call tree through return
values exactly as a transient hardware fault in a compute kernel would.

Two corruption models are supported: ``type_a`` multiplies one element by a
large scale factor, ``type_b`` flips one bit of the IEEE-754 binary64
representation of one element (bit 63 is the sign, 62..52 the exponent,
51..0 the mantissa).  The windowed injector fires exactly once per
completed window of kernel calls at a uniformly drawn call index, with all
randomness keyed by (seed, run, stream, window) so that runs are exactly
reproducible and windows are independent.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, asdict
from typing import Optional, Union

import numpy as np

__all__ = [
    "FaultConfig",
    "FaultEvent",
    "InjectionState",
    "OneShotSpec",
    "KernelHook",
    "FaultInjector",
    "OneShotPerturbation",
    "bit_flip",
    "scale_fault",
    "maybe_inject",
    "one_shot_perturbation",
    "write_event_log",
]

logger = logging.getLogger(__name__)

_MODES = ("off", "type_a", "type_b")


def bit_flip(value, bit):
    """Flip one bit of the binary64 representation of ``value``.

    Bit 0 is the least significant mantissa bit, bit 63 the sign.  The
    result is returned as-is even when it is non-finite.
    """
    bit = int(bit)
    if not 0 <= bit <= 63:
        raise ValueError(f"bit index must be in [0, 63], got {bit}")
    pattern = np.float64(value).view(np.uint64)
    return float((pattern ^ np.uint64(1 << bit)).view(np.float64))


@dataclass
class FaultConfig:
    """Windowed-injection settings.

    ``window`` is the number of kernel calls per injection window and
    ``scale`` the type-A multiplier.  ``streams`` counts independent
    injection streams (each with its own window counter), standing in for
    the per-rank callbacks of a distributed run.  The ``targeted_*`` fields
    narrow injection to one kernel, bit position, or array offset.
    """

    mode: str = "off"
    window: int = 5580
    scale: float = 1.0e4
    seed: int = 0
    streams: int = 1
    targeted_kernel: Optional[str] = None
    targeted_bit: Optional[int] = None
    targeted_offset: Optional[int] = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.streams < 1:
            raise ValueError(f"streams must be >= 1, got {self.streams}")
        if self.targeted_bit is not None and not 0 <= self.targeted_bit <= 63:
            raise ValueError(f"targeted_bit must be in [0, 63], got {self.targeted_bit}")


def scale_fault(value, cfg):
    """Type-A corruption: multiply by the configured scale factor."""
    return value * cfg.scale


@dataclass
class FaultEvent:
    """One injected fault, with enough context to replay or audit it."""

    call_index: int
    kernel_id: str
    array_offset: int
    old_value: float
    new_value: float
    sim_time: float
    bit_index: Optional[int] = None
    scale: Optional[float] = None
    step_index: int = 0
    sweep_index: int = 0
    node_index: int = 0
    run_id: int = 0

    def to_record(self):
        """Serializable record; floats also carried as exact hex bit patterns."""
        record = asdict(self)
        record["old_bits"] = f"{np.float64(self.old_value).view(np.uint64):016x}"
        record["new_bits"] = f"{np.float64(self.new_value).view(np.uint64):016x}"
        return record


@dataclass
class InjectionState:
    """Mutable per-stream window state for the injector."""

    seed: int
    run_id: int
    stream_id: int
    counter: int = 0
    window_index: int = 0
    fault_call: int = 0
    rng: np.random.Generator = None

    @classmethod
    def start(cls, cfg, run_id=0, stream_id=0):
        state = cls(seed=cfg.seed, run_id=run_id, stream_id=stream_id)
        state.new_window(cfg)
        return state

    def new_window(self, cfg):
        """Re-key the generator and draw this window's fault call."""
        self.rng = np.random.default_rng(
            (self.seed, self.run_id, self.stream_id, self.window_index)
        )
        self.fault_call = int(self.rng.integers(0, cfg.window))


def maybe_inject(array, kernel_id, state, cfg, *, call_index=0, sim_time=0.0, position=None):
    """Advance one stream by one kernel call, possibly corrupting ``array``.

    When the within-window call counter hits the drawn fault call and the
    kernel matches any configured filter, exactly one element is mutated in
    place and a FaultEvent is returned; otherwise None.  The counter
    advances even in ``off`` mode so arming faults never changes call
    accounting.
    """
    fire = state.counter == state.fault_call
    state.counter += 1

    event = None
    kernel_ok = cfg.targeted_kernel is None or kernel_id == cfg.targeted_kernel
    if fire and cfg.mode != "off" and kernel_ok:
        if cfg.targeted_offset is not None:
            offset = int(cfg.targeted_offset)
        else:
            offset = int(state.rng.integers(0, array.size))
        old = float(array[offset])
        if cfg.mode == "type_b":
            if cfg.targeted_bit is not None:
                bit = int(cfg.targeted_bit)
            else:
                bit = int(state.rng.integers(0, 64))
            new = bit_flip(old, bit)
            scale = None
        else:
            bit = None
            new = scale_fault(old, cfg)
            scale = cfg.scale
        array[offset] = new
        step, sweep, node = position if position is not None else (0, 0, 0)
        event = FaultEvent(
            call_index=call_index,
            kernel_id=kernel_id,
            array_offset=offset,
            old_value=old,
            new_value=new,
            sim_time=sim_time,
            bit_index=bit,
            scale=scale,
            step_index=step,
            sweep_index=sweep,
            node_index=node,
            run_id=state.run_id,
        )

    if state.counter >= cfg.window:
        state.counter = 0
        state.window_index += 1
        state.new_window(cfg)
    return event


class KernelHook:
    """Base observer for kernelized rhs evaluations; injects nothing.

    Tracks the integrator position and counts kernel calls.  A disarmed
    hook leaves every array untouched, so runs with and without it are
    bitwise identical.
    """

    def __init__(self, run_id=0):
        self.run_id = run_id
        self.step_index = 0
        self.sweep_index = 0
        self.node_index = 0
        self.sim_time = 0.0
        self.call_count = 0
        self.events = []
        self.observed_state = None

    def begin_step(self, step_index, sim_time):
        self.step_index = step_index
        self.sim_time = sim_time

    def begin_sweep(self, sweep_index):
        self.sweep_index = sweep_index

    def begin_node(self, node_index):
        self.node_index = node_index

    def observe_state(self, state):
        """Lets offset resolvers see the state a kernel is evaluated at."""
        self.observed_state = state

    def position(self):
        return (self.step_index, self.sweep_index, self.node_index)

    def filter(self, kernel_id, array):
        """Pass one kernel return array through the hook (no-op here)."""
        self.call_count += 1


class FaultInjector(KernelHook):
    """Windowed random injector: one fault per stream per completed window."""

    def __init__(self, cfg, run_id=0):
        super().__init__(run_id=run_id)
        self.cfg = cfg
        self.streams = [
            InjectionState.start(cfg, run_id=run_id, stream_id=s)
            for s in range(cfg.streams)
        ]

    def filter(self, kernel_id, array):
        call_index = self.call_count
        self.call_count += 1
        for stream in self.streams:
            event = maybe_inject(
                array,
                kernel_id,
                stream,
                self.cfg,
                call_index=call_index,
                sim_time=self.sim_time,
                position=self.position(),
            )
            if event is not None:
                self.events.append(event)


@dataclass
class OneShotSpec:
    """Schedule and corruption model for a single deterministic fault.

    ``offset`` is an array index, or the string ``"max_T"`` to resolve the
    hottest gridpoint of the observed state at injection time.
    """

    step_index: int = 0
    sweep_index: int = 1
    node_index: int = 0
    kernel_id: str = "assembly"
    offset: Union[int, str] = 0
    mode: str = "type_a"
    scale: float = 1.0e4
    bit: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("type_a", "type_b"):
            raise ValueError(f"one-shot mode must be type_a or type_b, got {self.mode!r}")
        if self.mode == "type_b" and self.bit is None:
            raise ValueError("type_b one-shot faults need a bit index")


class OneShotPerturbation(KernelHook):
    """Hook that corrupts exactly one kernel return at a scheduled position."""

    def __init__(self, spec, run_id=0):
        super().__init__(run_id=run_id)
        self.spec = spec
        self.fired = False

    def _resolve_offset(self, array):
        offset = self.spec.offset
        if offset == "max_T":
            state = self.observed_state
            if state is None:
                raise ValueError("max_T offset needs an observed state")
            n = state.size // 2
            return int(np.argmax(state[:n]))
        return int(offset)

    def filter(self, kernel_id, array):
        self.call_count += 1
        spec = self.spec
        if self.fired or kernel_id != spec.kernel_id:
            return
        if self.position() != (spec.step_index, spec.sweep_index, spec.node_index):
            return
        offset = self._resolve_offset(array)
        old = float(array[offset])
        if spec.mode == "type_b":
            new = bit_flip(old, spec.bit)
        else:
            new = old * spec.scale
        array[offset] = new
        self.fired = True
        self.events.append(
            FaultEvent(
                call_index=self.call_count - 1,
                kernel_id=kernel_id,
                array_offset=offset,
                old_value=old,
                new_value=new,
                sim_time=self.sim_time,
                bit_index=spec.bit if spec.mode == "type_b" else None,
                scale=spec.scale if spec.mode == "type_a" else None,
                step_index=self.step_index,
                sweep_index=self.sweep_index,
                node_index=self.node_index,
                run_id=self.run_id,
            )
        )

    def warn_if_unfired(self):
        """Log when the schedule was never reached; returns True if it fired."""
        if not self.fired:
            logger.warning(
                "one-shot fault never fired: step %d sweep %d node %d kernel %s",
                self.spec.step_index,
                self.spec.sweep_index,
                self.spec.node_index,
                self.spec.kernel_id,
            )
        return self.fired


def one_shot_perturbation(spec, run_id=0):
    """Arm a hook that fires once at the scheduled (step, sweep, node, kernel)."""
    return OneShotPerturbation(spec, run_id=run_id)


def write_event_log(path, events, *, unfired_warning=False):
    """Write events as line-delimited JSON records.

    Floats are serialized both as decimals and as hexadecimal bit patterns
    so logs round-trip exactly.
    """
    with open(path, "w") as fh:
        for event in events:
            fh.write(json.dumps(event.to_record(), sort_keys=True))
            fh.write("\n")
        if unfired_warning:
            fh.write(json.dumps({"warning": "one-shot schedule never reached"}))
            fh.write("\n")
