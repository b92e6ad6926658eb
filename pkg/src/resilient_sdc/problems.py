"""Test problems: a scalar linear ODE and a 1-D ignition surrogate.

The surrogate is a periodic reaction-diffusion model of a hot spot igniting
a premixed fuel: temperature and a fuel mass fraction are advanced with
single-step Arrhenius chemistry and eighth-order finite-difference
diffusion.  Its right-hand side is decomposed into named kernel stages
whose return arrays pass through the fault-injection hook, mirroring the
kernelized structure of a production reacting-flow code.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sdc import ODESystem

__all__ = [
    "LinearProblem",
    "IgnitionSurrogate",
    "KERNEL_IDS",
    "gaussian_hotspot",
    "derivative_operator",
    "surrogate_rhs",
    "surrogate_rhs_monolithic",
    "ignition_metrics",
    "linear_exact",
    "write_snapshot_csv",
]

# Eighth-order central first-derivative coefficients for offsets 1..4;
# the stencil is antisymmetric: +a_m at i+m, -a_m at i-m.
_STENCIL = np.array([4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0])

KERNEL_IDS = (
    "gradient_T",
    "gradient_Y",
    "diffusive_flux_T",
    "diffusive_flux_Y",
    "reaction_rate",
    "assembly",
)


def linear_exact(t, s=1.0, y0=1.0):
    """Exact solution of y' = s*y, y(0) = y0."""
    return y0 * math.exp(s * t)


@dataclass
class LinearProblem:
    """Scalar growth problem y' = s*y with an optional sweep-level override.

    ``perturb_schedule`` maps (sweep_index, node_index) to a replacement
    growth rate used for exactly those rhs evaluations, which reproduces
    the classic perturbed-sweep experiment without touching the integrator.
    """

    s: float = 1.0
    y0: float = 1.0
    perturb_schedule: Optional[dict] = None

    def system(self, hook=None):
        schedule = self.perturb_schedule

        def rhs(y, t):
            rate = self.s
            if schedule and hook is not None:
                rate = schedule.get((hook.sweep_index, hook.node_index), rate)
            out = rate * np.asarray(y, dtype=float)
            if hook is not None:
                hook.filter("derivative", out)
            return out

        return ODESystem(dimension=1, rhs=rhs, hook=hook)

    def initial_state(self):
        return np.array([self.y0])

    def exact(self, t):
        return linear_exact(t, self.s, self.y0)


def derivative_operator(field_values, dx):
    """Periodic eighth-order central first derivative of a 1-D field."""
    f = np.asarray(field_values, dtype=float)
    if f.ndim != 1 or f.size < 9:
        raise ValueError("derivative_operator needs a 1-D field of at least 9 points")
    padded = np.concatenate((f[-4:], f, f[:4]))
    n = f.size
    out = np.zeros(n)
    for m, a_m in enumerate(_STENCIL, start=1):
        out += a_m * (padded[4 + m : 4 + m + n] - padded[4 - m : 4 - m + n])
    return out / dx


def _stencil_wavenumber_max():
    """Largest resolved wavenumber magnitude of the first-derivative symbol
    (times dx); the diffusive operator's spectral radius is its square."""
    theta = np.linspace(0.0, np.pi, 4097)
    symbol = np.zeros_like(theta)
    for m, a_m in enumerate(_STENCIL, start=1):
        symbol += 2.0 * a_m * np.sin(m * theta)
    return float(np.max(np.abs(symbol)))


@dataclass
class IgnitionSurrogate:
    """Parameters of the periodic reaction-diffusion ignition model.

    State layout: ``[T_0..T_{n-1}, Y_0..Y_{n-1}]``.  The default values are
    calibrated so a Gaussian hot spot first cools diffusively, then ignites
    within roughly a thousand fixed steps.  The realizability bounds are set
    snugly around the fault-free trajectory envelope: a corrupted state large
    enough to matter usually leaves the bounds and is caught by the guard,
    while every fault-free run stays comfortably inside them.
    """

    n_grid: int = 120
    length: float = 1.0
    alpha: float = 0.6  # thermal diffusivity
    diff: float = 0.6  # fuel diffusivity
    arrhenius_a: float = 2.0e6
    t_act: float = 15000.0  # activation temperature
    heat_release: float = 1500.0
    t_ambient: float = 300.0
    t_peak: float = 700.0  # hot-spot scale temperature
    sigma: float = 0.15
    x_star: float = 0.5
    t_min: float = 290.0
    t_max: float = 2750.0
    y_min: float = -0.1
    y_max: float = 1.1

    @property
    def dx(self):
        return self.length / self.n_grid

    @property
    def dimension(self):
        return 2 * self.n_grid

    def grid(self):
        """Cell-center coordinates."""
        return (np.arange(self.n_grid) + 0.5) * self.dx

    def default_dt(self):
        """Fixed timestep: 0.1 times the explicit diffusive stability limit.

        The conservative fraction keeps the correction sweeps strongly
        contracting through runaway, so the acceptance test normally
        converges below the sweep cap and a residual spike from a corrupted
        evaluation still leaves room for damping sweeps before the cap.
        """
        kappa_max = _stencil_wavenumber_max() / self.dx
        limit = 2.0 / (max(self.alpha, self.diff) * kappa_max**2)
        return 0.1 * limit

    def realizability(self, state):
        """Bounds check on T and Y; returns None or a violation description."""
        n = self.n_grid
        temperature = state[:n]
        fuel = state[n:]
        if np.any(temperature > self.t_max):
            index = int(np.argmax(temperature > self.t_max))
            return f"temperature above {self.t_max} at component {index}"
        if np.any(temperature < self.t_min):
            index = int(np.argmax(temperature < self.t_min))
            return f"temperature below {self.t_min} at component {index}"
        if np.any(fuel > self.y_max):
            index = int(np.argmax(fuel > self.y_max))
            return f"fuel fraction above {self.y_max} at component {n + index}"
        if np.any(fuel < self.y_min):
            index = int(np.argmax(fuel < self.y_min))
            return f"fuel fraction below {self.y_min} at component {n + index}"
        return None

    def system(self, hook=None):
        def rhs(state, t):
            return surrogate_rhs(state, t, self, hook)

        return ODESystem(
            dimension=self.dimension,
            rhs=rhs,
            realizability=self.realizability,
            hook=hook,
        )

    def initial_state(self):
        return gaussian_hotspot(self)


def gaussian_hotspot(cfg):
    """Initial condition: Gaussian temperature hot spot in unit fuel.

    T(x) = T_ambient + (T_peak - T_ambient) * exp(-(x - x*)^2 / (2 sigma^2))
           / (sigma * sqrt(2 pi)),  Y(x) = 1.
    """
    x = cfg.grid()
    bump = np.exp(-((x - cfg.x_star) ** 2) / (2.0 * cfg.sigma**2))
    prefactor = 1.0 / (cfg.sigma * math.sqrt(2.0 * math.pi))
    temperature = cfg.t_ambient + (cfg.t_peak - cfg.t_ambient) * prefactor * bump
    fuel = np.ones(cfg.n_grid)
    return np.concatenate((temperature, fuel))


def surrogate_rhs(state, t, cfg, hook=None):
    """Kernelized right-hand side of the ignition surrogate.

    Every evaluation runs the six kernel stages in a fixed order and passes
    each stage's return array through the hook, so a windowed injector sees
    a deterministic call stream.  Second derivatives come from repeated
    application of the first-derivative operator.
    """
    n = cfg.n_grid
    temperature = state[:n]
    fuel = state[n:]
    if hook is not None:
        hook.observe_state(state)

    gradient_t = derivative_operator(temperature, cfg.dx)
    if hook is not None:
        hook.filter("gradient_T", gradient_t)
    gradient_y = derivative_operator(fuel, cfg.dx)
    if hook is not None:
        hook.filter("gradient_Y", gradient_y)

    flux_t = cfg.alpha * derivative_operator(gradient_t, cfg.dx)
    if hook is not None:
        hook.filter("diffusive_flux_T", flux_t)
    flux_y = cfg.diff * derivative_operator(gradient_y, cfg.dx)
    if hook is not None:
        hook.filter("diffusive_flux_Y", flux_y)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        omega = cfg.arrhenius_a * fuel * np.exp(-cfg.t_act / temperature)
    if hook is not None:
        hook.filter("reaction_rate", omega)

    out = np.concatenate((flux_t + cfg.heat_release * omega, flux_y - omega))
    if hook is not None:
        hook.filter("assembly", out)
    return out


def surrogate_rhs_monolithic(state, t, cfg):
    """Single-expression reference evaluation, bitwise identical to the
    kernelized path when no hook is armed; kept as a cross-check."""
    n = cfg.n_grid
    temperature = state[:n]
    fuel = state[n:]
    gradient_t = derivative_operator(temperature, cfg.dx)
    gradient_y = derivative_operator(fuel, cfg.dx)
    flux_t = cfg.alpha * derivative_operator(gradient_t, cfg.dx)
    flux_y = cfg.diff * derivative_operator(gradient_y, cfg.dx)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        omega = cfg.arrhenius_a * fuel * np.exp(-cfg.t_act / temperature)
    return np.concatenate((flux_t + cfg.heat_release * omega, flux_y - omega))


def ignition_metrics(trajectory):
    """Scalar outcomes of a surrogate run.

    ``final_peak_T`` is the maximum temperature at the last stored time.
    ``ignition_delay`` is the first time the peak temperature crosses the
    midpoint between its initial and final values, linearly interpolated
    between outputs; NaN when the trajectory never crosses it.
    """
    if not trajectory:
        raise ValueError("trajectory is empty")
    n = trajectory[0][1].size // 2
    times = np.array([t for t, _ in trajectory])
    peaks = np.array([float(np.max(state[:n])) for _, state in trajectory])

    final_peak = float(peaks[-1])
    threshold = 0.5 * (peaks[0] + final_peak)
    delay = math.nan
    for i in range(len(peaks) - 1):
        if peaks[i] <= threshold < peaks[i + 1]:
            slope = (peaks[i + 1] - peaks[i]) / (times[i + 1] - times[i])
            delay = float(times[i] + (threshold - peaks[i]) / slope)
            break
    return {"final_peak_T": final_peak, "ignition_delay": delay}


def write_snapshot_csv(path, cfg, state):
    """Write one surrogate state as CSV with columns x, T, Y."""
    n = cfg.n_grid
    x = cfg.grid()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "T", "Y"])
        for i in range(n):
            writer.writerow([repr(float(x[i])), repr(float(state[i])), repr(float(state[n + i]))])
