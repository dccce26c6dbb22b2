"""Shared numerical kernels: fixed-step RK4 integration, guard-crossing
event location, periodic quadrature, and bracketed root finding.

Everything here is deterministic: identical inputs produce bit-identical
outputs.  The event-driven simulators and the reproducibility guarantees
of the command line tool rely on that.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

TWO_PI = 2.0 * np.pi


class NumericsError(Exception):
    """Base class for numerical-kernel failures."""


class IntegrationDiverged(NumericsError):
    """A trajectory left the finite range; carries the last good time."""

    def __init__(self, message: str, last_time: float):
        super().__init__(message)
        self.last_time = last_time


class NoEventError(NumericsError):
    """The guard never crossed zero before the time limit."""


class BracketError(NumericsError):
    """A root bracket without a sign change."""


@dataclass(frozen=True)
class Trajectory:
    """A sampled solution of an initial value problem.

    times : strictly increasing 1-D array of seconds
    states : (len(times), dim) array of state vectors
    """

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a non-empty 1-D array")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if states.shape[0] != times.size:
            raise ValueError("states and times length mismatch")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class EventRecord:
    """A located guard crossing: time, states on either side, and a tag."""

    time: float
    state_before: np.ndarray
    state_after: np.ndarray
    label: str = "event"


def rk4_step(field, t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta order-4 step of size h."""
    k1 = field(t, x)
    k2 = field(t + 0.5 * h, x + (0.5 * h) * k1)
    k3 = field(t + 0.5 * h, x + (0.5 * h) * k2)
    k4 = field(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(field, x0, t_span, step: float) -> Trajectory:
    """Integrate ``x' = field(t, x)`` with fixed-step RK4.

    Returns the solution on the uniform grid ``t0, t0+step, ...`` plus the
    final time (reached with one shortened step when the span is not a
    multiple of ``step``).

    Raises IntegrationDiverged as soon as a non-finite state appears.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise ValueError("t_span must be a forward interval")
    x = np.asarray(x0, dtype=float)
    n_full = int(np.floor((t1 - t0) / step + 1e-12))
    times = [t0]
    states = [x]
    t = t0
    for k in range(n_full):
        x = rk4_step(field, t, x, step)
        t = t0 + (k + 1) * step
        if not np.all(np.isfinite(x)):
            raise IntegrationDiverged(
                f"non-finite state at t={t:.6g}", last_time=times[-1]
            )
        times.append(t)
        states.append(x)
    if t1 - t > 1e-12 * max(1.0, abs(t1)):
        x = rk4_step(field, t, x, t1 - t)
        if not np.all(np.isfinite(x)):
            raise IntegrationDiverged(
                f"non-finite state at t={t1:.6g}", last_time=times[-1]
            )
        times.append(t1)
        states.append(x)
    return Trajectory(np.array(times), np.array(states))


def _crosses(g_lo: float, g_hi: float, direction: float) -> bool:
    if direction > 0:
        return g_lo < 0.0 <= g_hi
    if direction < 0:
        return g_lo > 0.0 >= g_hi
    return (g_lo < 0.0 <= g_hi) or (g_lo > 0.0 >= g_hi)


def _refine_event(field, t_lo, x_lo, dt, guard, direction, guard_tol):
    """Locate the crossing inside (t_lo, t_lo+dt] by interval halving.

    Each halving re-integrates the left half with a single RK4 step from
    the current left state, so the step shrinks as the bracket does; this
    stays stable even when the field grows without bound at the guard
    (integrate-and-fire thresholds).
    """
    g_lo = guard(x_lo)
    for _ in range(200):
        x_end = rk4_step(field, t_lo, x_lo, dt)
        g_end = guard(x_end)
        if abs(g_end) <= guard_tol:
            return t_lo + dt, x_end
        if dt <= 4.0 * np.finfo(float).eps * max(1.0, abs(t_lo)):
            return t_lo + dt, x_end
        half = 0.5 * dt
        x_mid = rk4_step(field, t_lo, x_lo, half)
        g_mid = guard(x_mid)
        if abs(g_mid) <= guard_tol:
            return t_lo + half, x_mid
        if _crosses(g_lo, g_mid, direction):
            dt = half
        else:
            t_lo, x_lo, g_lo = t_lo + half, x_mid, g_mid
            dt = half
    return t_lo + dt, rk4_step(field, t_lo, x_lo, dt)


def integrate_to_event(
    field,
    x0,
    guard: Callable[[np.ndarray], float],
    t_max: float,
    direction: float = 0.0,
    step: float = 1e-3,
    guard_tol: float = 1e-10,
    t0: float = 0.0,
    label: str = "event",
):
    """March fixed RK4 steps until ``guard`` crosses zero, then bisect.

    The crossing time is refined to ``guard_tol`` in the guard value (not
    in time; the guard sets the physical scale).  Returns the trajectory
    up to the event and an EventRecord.

    Raises NoEventError when no crossing occurs before ``t_max``.
    """
    if t_max <= t0:
        raise ValueError("t_max must exceed t0")
    x = np.asarray(x0, dtype=float)
    g = guard(x)
    if g == 0.0:
        raise ValueError("guard vanishes at the initial state")
    times = [t0]
    states = [x]
    t = t0
    k = 0
    while t < t_max:
        h = min(step, t_max - t)
        x_new = rk4_step(field, t, x, h)
        if not np.all(np.isfinite(x_new)):
            raise IntegrationDiverged(
                f"non-finite state at t={t + h:.6g}", last_time=t
            )
        g_new = guard(x_new)
        if _crosses(g, g_new, direction) or abs(g_new) <= guard_tol:
            t_ev, x_ev = _refine_event(field, t, x, h, guard, direction, guard_tol)
            times.append(t_ev)
            states.append(x_ev)
            record = EventRecord(
                time=t_ev, state_before=x_ev, state_after=x_ev, label=label
            )
            return Trajectory(np.array(times), np.array(states)), record
        k += 1
        t = t0 + k * step if t0 + k * step <= t_max else t_max
        x, g = x_new, g_new
        times.append(t)
        states.append(x)
    raise NoEventError(f"guard did not cross before t_max={t_max:.6g}")


def periodic_quadrature(
    f: Callable[[float], float],
    tol: float = 1e-10,
    discontinuities: Sequence[float] = (),
) -> float:
    """Integrate ``f`` over one period [0, 2*pi).

    The domain is split at the declared discontinuity points (needed for
    the jump of monotone phase response curves at the wrap), then each
    piece goes through an adaptive rule with absolute tolerance ``tol``.
    """

    def checked(s):
        v = f(s)
        if not np.isfinite(v):
            raise NumericsError(f"non-finite integrand sample at s={s:.6g}")
        return v

    cuts = sorted({float(d) % TWO_PI for d in discontinuities} - {0.0})
    nodes = [0.0] + cuts + [TWO_PI]
    total = 0.0
    eps_each = tol / max(1, len(nodes) - 1)
    for a, b in zip(nodes[:-1], nodes[1:]):
        if b - a <= 0.0:
            continue
        val, _ = quad(checked, a, b, epsabs=eps_each, epsrel=1e-12, limit=200)
        total += val
    return total


def find_root(
    g: Callable[[float], float], bracket, tol: float = 1e-12
) -> float:
    """Bracketed scalar root via Brent's bisection/secant hybrid.

    Guarantees ``|g(root)| <= tol`` or raises.
    """
    a, b = float(bracket[0]), float(bracket[1])
    ga, gb = g(a), g(b)
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    if np.sign(ga) == np.sign(gb):
        raise BracketError(
            f"no sign change on [{a:.6g}, {b:.6g}]: g(a)={ga:.3g}, g(b)={gb:.3g}"
        )
    root = brentq(g, a, b, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    if abs(g(root)) > tol:
        raise NumericsError(
            f"root residual {abs(g(root)):.3g} exceeds tol={tol:.3g}"
        )
    return float(root)
