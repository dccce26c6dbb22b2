"""Concrete oscillator models: the van der Pol oscillator (full state
space, quasi-harmonic reduction, relaxation reduction) and the
integrate-and-fire family (leaky and quadratic).

Each model is exposed as an ``OscillatorModel`` (open state-space system)
and, where a one-dimensional reduction exists, as a ``PhaseOscillator``
carrying the angular frequency, the phase map and the infinitesimal phase
response curve (iPRC).  Models are immutable after construction and safe
to share between concurrent simulations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline, PchipInterpolator

from .numerics import TWO_PI, find_root


class RegimeError(ValueError):
    """A reduced model was requested outside its validated parameter range."""


class PositivityError(ValueError):
    """An integrate-and-fire field is not strictly positive between thresholds."""


@dataclass(frozen=True)
class OscillatorModel:
    """Open state-space oscillator ``x' = F(x) + G(x) u``, ``y = H(x)``.

    ``drift``, ``input_gain`` and ``output`` must broadcast over leading
    batch axes (state arrays of shape ``(..., dim)``), which the batched
    phase-response machinery relies on.
    """

    dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    input_gain: Callable[[np.ndarray], np.ndarray]
    output: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")

    def field(self):
        """Zero-input vector field as a ``(t, x) -> dx/dt`` callable."""
        return lambda t, x: self.drift(x)


@dataclass(frozen=True)
class LimitCycle:
    """A stable periodic orbit sampled at phase-uniform points.

    ``samples[k]`` is the on-orbit state at phase ``2*pi*k/n``;
    ``samples[0]`` is the zero-phase anchor.  ``step``/``substeps`` record
    the micro integration grid that resolved the orbit: one sample
    interval equals ``substeps`` RK4 steps of size ``step``, and phase
    computations must reuse the same stepping so that trajectories settle
    onto the tabulated curve rather than a slightly different discrete
    attractor.
    """

    period: float
    samples: np.ndarray
    step: float
    substeps: int
    closure_gap: float = 0.0

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.period <= 0.0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "samples", samples)

    @property
    def omega(self) -> float:
        return TWO_PI / self.period

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def thetas(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_samples) / self.n_samples

    @cached_property
    def _spline(self) -> CubicSpline:
        theta_closed = np.append(self.thetas, TWO_PI)
        samples_closed = np.vstack([self.samples, self.samples[:1]])
        return CubicSpline(theta_closed, samples_closed, axis=0, bc_type="periodic")

    def point_at(self, theta):
        """On-orbit state at the given phase(s), by periodic interpolation."""
        return self._spline(np.mod(theta, TWO_PI))


@dataclass(frozen=True)
class PhaseOscillator:
    """Reduced phase model: angular frequency plus response curves.

    ``iprc`` is the infinitesimal phase response curve Z on [0, 2*pi),
    with its jump points (if any) listed in ``iprc_discontinuities``.
    One-dimensional models also carry the bijective phase map Theta, its
    inverse, and the state interval between the firing thresholds.
    """

    omega: float
    iprc: Callable
    iprc_discontinuities: tuple = ()
    finite_prc: Callable | None = None
    phase_map: Callable | None = None
    phase_map_inverse: Callable | None = None
    state_interval: tuple | None = None
    params: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")


# ---------------------------------------------------------------------------
# van der Pol, full state space
# ---------------------------------------------------------------------------


def vdp_full(mu: float) -> OscillatorModel:
    """van der Pol oscillator ``x'' - mu (1 - x^2) x' + x = u``.

    State (x, x'), input on the acceleration, output y = x.  ``mu``
    measures the nonlinearity: small mu gives quasi-harmonic oscillations
    of amplitude ~2, large mu relaxation oscillations.
    """
    if mu <= 0.0:
        raise ValueError("mu must be positive")

    def drift(state):
        x = state[..., 0]
        v = state[..., 1]
        return np.stack([v, mu * (1.0 - x * x) * v - x], axis=-1)

    def input_gain(state):
        g = np.zeros_like(state)
        g[..., 1] = 1.0
        return g

    def output(state):
        return state[..., 0]

    return OscillatorModel(
        dim=2, drift=drift, input_gain=input_gain, output=output,
        params={"mu": mu}, name="vdp_full",
    )


def vdp_circuit(mu: float) -> OscillatorModel:
    """van der Pol oscillator in circuit (Lienard) coordinates.

        x' = -w + mu (x - x^3/3) + u,   w' = x,   y = x

    with x the capacitor voltage and w the inductor current.  The input
    enters the voltage equation, which is where a resistive
    interconnection injects current; the diffusive-coupling certificates
    are formulated for this realization.
    """
    if mu <= 0.0:
        raise ValueError("mu must be positive")

    def drift(state):
        x = state[..., 0]
        w = state[..., 1]
        return np.stack([-w + mu * (x - x**3 / 3.0), x], axis=-1)

    def input_gain(state):
        g = np.zeros_like(state)
        g[..., 0] = 1.0
        return g

    def output(state):
        return state[..., 0]

    return OscillatorModel(
        dim=2, drift=drift, input_gain=input_gain, output=output,
        params={"mu": mu}, name="vdp_circuit",
    )


# ---------------------------------------------------------------------------
# van der Pol, quasi-harmonic reduction
# ---------------------------------------------------------------------------

_QH_MU_MAX = 0.2


def _qh_angular_speed(mu: float):
    # phi' = q(phi) on the averaged amplitude r* = 2, zero input
    def q(phi):
        s = np.sin(phi)
        return 1.0 - mu * s * np.cos(phi) * (1.0 - 4.0 * s * s)

    return q


def vdp_quasiharmonic_phase(mu: float, eps: float = 0.0) -> PhaseOscillator:
    """Phase reduction of the weakly nonlinear van der Pol oscillator.

    Valid for 0 < mu <= 0.2 (the averaging error grows linearly with mu;
    outside the window a RegimeError is raised rather than returning a
    silently degraded model).  The reduced state is the polar angle phi
    of (x, x') = (r sin phi, r cos phi) on the r ~ 2 orbit; the phase map
    rescales phi so the phase advances uniformly, and the iPRC tends to
    -sin(theta)/2 as mu -> 0.  When ``eps`` is nonzero a finite PRC
    ``eps * Z`` (the small-kick approximation) is attached.
    """
    if not 0.0 < mu <= _QH_MU_MAX:
        raise RegimeError(
            f"quasi-harmonic reduction validated for 0 < mu <= {_QH_MU_MAX}, got {mu}"
        )
    q = _qh_angular_speed(mu)
    period = quad(lambda p: 1.0 / q(p), 0.0, TWO_PI, epsabs=1e-13, limit=200)[0]
    omega = TWO_PI / period

    n = 4096
    while True:
        phi_nodes = np.linspace(0.0, TWO_PI, n + 1)
        mids = 0.5 * (phi_nodes[:-1] + phi_nodes[1:])
        h = phi_nodes[1] - phi_nodes[0]
        # composite Simpson of 1/q, one interval at a time
        seg = (h / 6.0) * (
            1.0 / q(phi_nodes[:-1]) + 4.0 / q(mids) + 1.0 / q(phi_nodes[1:])
        )
        theta_nodes = omega * np.concatenate([[0.0], np.cumsum(seg)])
        theta_nodes *= TWO_PI / theta_nodes[-1]  # pin Theta(2*pi) = 2*pi
        to_theta = PchipInterpolator(phi_nodes, theta_nodes)
        to_phi = PchipInterpolator(theta_nodes, phi_nodes)
        probe = np.linspace(0.0, TWO_PI, 1025)
        err = np.max(np.abs(to_theta(to_phi(probe)) - probe))
        if err <= 1e-8 or n >= 1 << 15:
            break
        n *= 2

    def iprc(theta):
        phi = to_phi(np.mod(theta, TWO_PI))
        return -omega * np.sin(phi) / (2.0 * q(phi))

    return PhaseOscillator(
        omega=omega,
        iprc=iprc,
        finite_prc=(lambda th: eps * iprc(th)) if eps else None,
        phase_map=lambda phi: to_theta(np.mod(phi, TWO_PI)),
        phase_map_inverse=lambda th: to_phi(np.mod(th, TWO_PI)),
        state_interval=(0.0, TWO_PI),
        params={"mu": mu, "eps": eps},
        name="vdp_quasiharmonic",
    )


# ---------------------------------------------------------------------------
# van der Pol, relaxation reduction
# ---------------------------------------------------------------------------


def _relaxation_theta_integral(x):
    # integral of (1 - s^2)/s from -2 to x, in closed form
    x = np.asarray(x, dtype=float)
    return 2.0 - 0.5 * x * x + np.log(-0.5 * x)


def relaxation_state_gain(x):
    """Input gain of the slow relaxation dynamics: a kick of size eps
    moves the state by eps/(x^2 - 1)."""
    x = np.asarray(x, dtype=float)
    return 1.0 / (x * x - 1.0)


def vdp_relaxation_phase() -> PhaseOscillator:
    """Phase reduction of the strongly nonlinear van der Pol oscillator.

    On the left branch of the critical manifold the slow state obeys
    ``x' = x / (1 - x^2)`` between the lower threshold x = -2 (phase 0)
    and the upper threshold x = -1 (phase 2*pi), in slow time.  The phase
    map is the closed-form integral of the traversal time and the iPRC is
    ``Z(theta) = -omega / x``, monotone increasing from omega/2 to omega
    and hence discontinuous at the wrap.
    """
    period = float(_relaxation_theta_integral(-1.0))  # = 3/2 - ln 2
    omega = TWO_PI / period

    def phase_map(x):
        x = np.clip(np.asarray(x, dtype=float), -2.0, -1.0)
        return TWO_PI * _relaxation_theta_integral(x) / period

    # The traversal speed vanishes at the upper threshold like
    # sqrt(2*pi - theta), so tabulate the inverse against
    # psi = sqrt(2*pi - theta), where it is smooth.
    psi_nodes = np.linspace(0.0, math.sqrt(TWO_PI), 2049)
    x_nodes = np.empty_like(psi_nodes)
    x_nodes[0] = -1.0
    x_nodes[-1] = -2.0
    for i in range(1, len(psi_nodes) - 1):
        target = TWO_PI - psi_nodes[i] ** 2
        x_nodes[i] = find_root(lambda s: phase_map(s) - target, (-2.0, -1.0), tol=1e-11)
    inv_of_psi = PchipInterpolator(psi_nodes, x_nodes)

    def phase_map_inverse(theta):
        theta = np.clip(np.asarray(theta, dtype=float), 0.0, TWO_PI)
        return inv_of_psi(np.sqrt(TWO_PI - theta))

    def iprc(theta):
        return -omega / phase_map_inverse(theta)

    return PhaseOscillator(
        omega=omega,
        iprc=iprc,
        iprc_discontinuities=(0.0,),
        phase_map=phase_map,
        phase_map_inverse=phase_map_inverse,
        state_interval=(-2.0, -1.0),
        params={"period_slow_time": period},
        name="vdp_relaxation",
    )


# ---------------------------------------------------------------------------
# integrate-and-fire
# ---------------------------------------------------------------------------


def integrate_and_fire(F: Callable, x_lo: float, x_hi: float) -> PhaseOscillator:
    """Phase model of the integrate-and-fire oscillator ``x' = F(x)``.

    The state climbs from ``x_lo`` to ``x_hi`` (where it fires and resets),
    so ``F`` must be strictly positive on the interval.  The phase map is
    the normalized traversal-time integral and the iPRC has the exact form
    ``Z(theta) = omega / F(x(theta))``.  The inverse map is tabulated on a
    refined grid until the round trip Theta(Theta^-1) is accurate to 1e-8.
    """
    if x_hi <= x_lo:
        raise ValueError("x_hi must exceed x_lo")
    probe = np.linspace(x_lo, x_hi, 4097)
    f_probe = np.asarray(F(probe), dtype=float)
    if np.any(f_probe <= 0.0) or not np.all(np.isfinite(f_probe)):
        raise PositivityError("F must be strictly positive on [x_lo, x_hi]")

    period = quad(lambda s: 1.0 / F(s), x_lo, x_hi, epsabs=1e-13, limit=200)[0]
    omega = TWO_PI / period

    n = 2048
    while True:
        x_nodes = np.linspace(x_lo, x_hi, n + 1)
        mids = 0.5 * (x_nodes[:-1] + x_nodes[1:])
        h = x_nodes[1] - x_nodes[0]
        seg = (h / 6.0) * (
            1.0 / np.asarray(F(x_nodes[:-1]), dtype=float)
            + 4.0 / np.asarray(F(mids), dtype=float)
            + 1.0 / np.asarray(F(x_nodes[1:]), dtype=float)
        )
        theta_nodes = omega * np.concatenate([[0.0], np.cumsum(seg)])
        theta_nodes *= TWO_PI / theta_nodes[-1]
        to_theta = PchipInterpolator(x_nodes, theta_nodes)
        to_x = PchipInterpolator(theta_nodes, x_nodes)
        test = np.linspace(0.0, TWO_PI, 1025)
        err = np.max(np.abs(to_theta(to_x(test)) - test))
        if err <= 1e-8 or n >= 1 << 15:
            break
        n *= 2

    def phase_map(x):
        return to_theta(np.clip(np.asarray(x, dtype=float), x_lo, x_hi))

    def phase_map_inverse(theta):
        return to_x(np.clip(np.asarray(theta, dtype=float), 0.0, TWO_PI))

    def iprc(theta):
        return omega / np.asarray(F(phase_map_inverse(theta)), dtype=float)

    jump = abs(float(F(np.asarray(x_lo))) - float(F(np.asarray(x_hi))))
    return PhaseOscillator(
        omega=omega,
        iprc=iprc,
        iprc_discontinuities=(0.0,) if jump > 1e-12 else (),
        phase_map=phase_map,
        phase_map_inverse=phase_map_inverse,
        state_interval=(float(x_lo), float(x_hi)),
        params={"x_lo": float(x_lo), "x_hi": float(x_hi)},
        name="integrate_and_fire",
    )


def lif_phase(drive: float = 2.0, leak: float = -1.0, x_lo: float = 0.0,
              x_hi: float = 1.0) -> PhaseOscillator:
    """Leaky integrate-and-fire phase model, ``F(x) = drive + leak * x``."""
    posc = integrate_and_fire(lambda x: drive + leak * x, x_lo, x_hi)
    return PhaseOscillator(
        omega=posc.omega, iprc=posc.iprc,
        iprc_discontinuities=posc.iprc_discontinuities,
        phase_map=posc.phase_map, phase_map_inverse=posc.phase_map_inverse,
        state_interval=posc.state_interval,
        params={**posc.params, "drive": drive, "leak": leak}, name="lif",
    )


def qif_phase(drive: float = 1.0, x_lo: float = -1.0, x_hi: float = 1.0) -> PhaseOscillator:
    """Quadratic integrate-and-fire phase model, ``F(x) = drive + x^2``.

    The thresholds default to the symmetric interval [-1, 1].
    """
    posc = integrate_and_fire(lambda x: drive + x * x, x_lo, x_hi)
    return PhaseOscillator(
        omega=posc.omega, iprc=posc.iprc,
        iprc_discontinuities=posc.iprc_discontinuities,
        phase_map=posc.phase_map, phase_map_inverse=posc.phase_map_inverse,
        state_interval=posc.state_interval,
        params={**posc.params, "drive": drive}, name="qif",
    )


def if_model(F: Callable, x_lo: float, x_hi: float, name: str = "if") -> OscillatorModel:
    """State-space view of an integrate-and-fire oscillator (1-D, unit
    input gain, identity output).  The reset thresholds live in params."""

    def drift(state):
        return np.asarray(F(np.asarray(state, dtype=float)), dtype=float)

    def input_gain(state):
        return np.ones_like(np.asarray(state, dtype=float))

    def output(state):
        return np.asarray(state, dtype=float)[..., 0]

    return OscillatorModel(
        dim=1, drift=drift, input_gain=input_gain, output=output,
        params={"x_lo": float(x_lo), "x_hi": float(x_hi)}, name=name,
    )


def lif_model(drive: float = 2.0, leak: float = -1.0, x_lo: float = 0.0,
              x_hi: float = 1.0) -> OscillatorModel:
    """State-space leaky integrate-and-fire model."""
    model = if_model(lambda x: drive + leak * x, x_lo, x_hi, name="lif")
    model.params.update({"drive": drive, "leak": leak})
    return model


# ---------------------------------------------------------------------------
# finite phase response curves of one-dimensional models
# ---------------------------------------------------------------------------


def finite_prc(posc: PhaseOscillator, eps: float,
               state_gain: Callable | None = None) -> Callable:
    """Finite PRC of a 1-D phase oscillator as a fast callable.

    A kick of amplitude ``eps`` displaces the state by ``eps * g(x)``
    (``g`` defaults to 1, the classic constant-increment coupling); the
    displaced state is clamped to the threshold interval, so the returned
    phase shift already encodes absorption: theta + Z_eps(theta) lands in
    [0, 2*pi] always.
    """
    if posc.phase_map is None or posc.phase_map_inverse is None:
        raise ValueError("finite_prc needs a 1-D phase oscillator with a phase map")
    lo, hi = posc.state_interval

    def z_eps(theta):
        theta = np.asarray(theta, dtype=float)
        x = posc.phase_map_inverse(theta)
        g = 1.0 if state_gain is None else state_gain(x)
        x_new = np.clip(x + eps * g, lo, hi)
        return posc.phase_map(x_new) - theta

    return z_eps
