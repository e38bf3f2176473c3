"""Time evolution of mass channels and extended fields.

The propagator is second-order Strang splitting, kinetic half step, then
potential full step, then kinetic half step.  Time-dependent potentials
are sampled at the step midpoint.  The rest-energy term ``m c^2`` commutes
with everything else and is applied as an exact phase per step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .core import (
    DEFAULT_CONSTANTS,
    TAIL_THRESHOLD,
    Constants,
    ExtendedField,
    MassChannel,
    SpatialGrid,
    SuperpositionState,
    boundary_tail,
    spectral_derivative,
)
from .errors import (
    InsufficientDataError,
    InvalidParameterError,
    NonConvergentStateError,
    OutOfBoxError,
    UnsupportedFeatureError,
)


@dataclass(frozen=True)
class UniformField:
    """Linear potential ``V_m(x) = m g x`` (force ``-m g``)."""

    g: float

    def __post_init__(self):
        if not math.isfinite(self.g):
            raise InvalidParameterError("uniform field strength must be finite")


@dataclass(frozen=True)
class CustomPotential:
    """Tabulated potential ``V(x, t)`` shared by all channels.

    ``s_dependent=True`` marks a ``V(x, t, s)`` potential, which no
    propagator here supports.
    """

    func: Callable = field(compare=False)
    s_dependent: bool = False


Potential = Optional[Union[UniformField, CustomPotential]]


@dataclass(frozen=True)
class HamiltonianSpec:
    rest_energy: bool = False
    potential: Potential = None
    constants: Constants = DEFAULT_CONSTANTS

    def __post_init__(self):
        if self.rest_energy and self.constants.galilean:
            raise InvalidParameterError("rest_energy=True needs a finite c")

    def potential_values(self, mass: float, grid: SpatialGrid, t: float) -> Optional[np.ndarray]:
        pot = self.potential
        if pot is None:
            return None
        if isinstance(pot, UniformField):
            return mass * pot.g * grid.x
        if pot.s_dependent:
            raise UnsupportedFeatureError("s-dependent potentials are not supported")
        return np.broadcast_to(np.asarray(pot.func(grid.x, t), dtype=float), grid.x.shape)

    @property
    def time_dependent(self) -> bool:
        return isinstance(self.potential, CustomPotential)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots at uniformly spaced times."""

    times: np.ndarray
    snapshots: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if len(times) != len(self.snapshots):
            raise InvalidParameterError("one snapshot per time required")
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise InvalidParameterError("times must be increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "snapshots", tuple(self.snapshots))

    def __len__(self):
        return len(self.snapshots)

    @property
    def dt(self) -> float:
        if len(self.times) < 2:
            raise InsufficientDataError("need two snapshots for a time step")
        steps = np.diff(self.times)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
            raise InvalidParameterError("snapshot times are not uniformly spaced")
        return float(steps[0])

    def map(self, fn) -> "Trajectory":
        return Trajectory(self.times, tuple(fn(s) for s in self.snapshots))


# ---------------------------------------------------------------------------
# analytic oracle


def free_gaussian_analytic(m: float, x0: float, k0: float, sigma: float, t: float,
                           grid: SpatialGrid, constants: Constants = DEFAULT_CONSTANTS
                           ) -> MassChannel:
    """Exact free evolution of ``gaussian_packet(grid, x0, k0, sigma)``.

    The complex width is ``sigma^2 (1 + i hbar t / (2 m sigma^2))`` and the
    packet moves at ``hbar k0 / m``.  Normalized on the grid.
    """
    if not m > 0 or not sigma > 0:
        raise InvalidParameterError("mass and sigma must be positive")
    hbar = constants.hbar
    x = grid.x
    alpha = 1 + 1j * hbar * t / (2 * m * sigma**2)
    v0 = hbar * k0 / m
    omega0 = hbar * k0**2 / (2 * m)
    psi = alpha**-0.5 * np.exp(-((x - x0 - v0 * t) ** 2) / (4 * sigma**2 * alpha)
                               + 1j * (k0 * x - omega0 * t))
    psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return MassChannel(m, psi, grid, t)


def free_variance(sigma: float, m: float, t: float, hbar: float = 1.0) -> float:
    """Position variance of a freely spreading Gaussian."""
    return sigma**2 * (1 + (hbar * t / (2 * m * sigma**2)) ** 2)


# ---------------------------------------------------------------------------
# split step


def _evolve_array(psi, mass, t0, ham: HamiltonianSpec, grid, dt, steps, on_step=None):
    hbar = ham.constants.hbar
    kin_half = np.exp(-0.5j * dt * hbar * grid.k**2 / (2 * mass))
    rest = np.exp(-1j * mass * ham.constants.c**2 * dt / hbar) if ham.rest_energy else None
    static_phase = None
    if ham.potential is not None and not ham.time_dependent:
        static_phase = np.exp(-1j * dt * ham.potential_values(mass, grid, t0) / hbar)

    psi = np.array(psi, dtype=np.complex128)
    for step in range(steps):
        psi = np.fft.ifft(kin_half * np.fft.fft(psi))
        if static_phase is not None:
            psi *= static_phase
        elif ham.potential is not None:
            tm = t0 + (step + 0.5) * dt
            psi *= np.exp(-1j * dt * ham.potential_values(mass, grid, tm) / hbar)
        psi = np.fft.ifft(kin_half * np.fft.fft(psi))
        if rest is not None:
            psi *= rest
        tail = boundary_tail(psi, grid)
        if tail > TAIL_THRESHOLD:
            raise OutOfBoxError(
                f"mass {mass:g}: packet reached the boundary at step {step} "
                f"(tail norm {tail:.3e})", step=step)
        if on_step is not None:
            on_step(step, psi)
    return psi


def split_step_evolve(channel: MassChannel, ham: HamiltonianSpec, dt: float,
                      steps: int) -> MassChannel:
    """Advance one channel by ``steps`` Strang steps of size ``dt``."""
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    if steps < 0:
        raise InvalidParameterError("steps must be non-negative")
    psi = _evolve_array(channel.psi, channel.mass, channel.t, ham, channel.grid, dt, steps)
    return channel.replace(psi=psi, t=channel.t + steps * dt)


def _check_extended(ham: HamiltonianSpec):
    if isinstance(ham.potential, CustomPotential) and ham.potential.s_dependent:
        raise UnsupportedFeatureError("s-dependent potentials V(x, t, s) are not supported")


def extended_evolve(state: SuperpositionState, ham: HamiltonianSpec, dt: float,
                    steps: int) -> SuperpositionState:
    """Evolve a mass superposition under the mass-operator Hamiltonian.

    For s-independent potentials the extended equation splits into one
    ordinary Schroedinger equation per mass sector, so each channel goes
    through :func:`split_step_evolve` with its own mass.
    """
    _check_extended(ham)
    chans = tuple(split_step_evolve(ch, ham, dt, steps) for ch in state.channels)
    return SuperpositionState(chans, state.grid, state.t + steps * dt)


def evolve_trajectory(state: SuperpositionState, ham: HamiltonianSpec, dt: float,
                      steps: int, stride: int = 1) -> Trajectory:
    """Like :func:`extended_evolve` but records every ``stride``-th step."""
    _check_extended(ham)
    if stride < 1:
        raise InvalidParameterError("stride must be >= 1")
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    nsnap = steps // stride + 1
    per_channel = []
    for ch in state.channels:
        frames = [ch.psi]

        def record(step, psi, frames=frames):
            if (step + 1) % stride == 0:
                frames.append(psi.copy())

        _evolve_array(ch.psi, ch.mass, ch.t, ham, state.grid, dt, steps, record)
        per_channel.append(frames[:nsnap])
    times = state.t + dt * stride * np.arange(nsnap)
    snaps = []
    for i, t in enumerate(times):
        snaps.append(SuperpositionState.from_arrays(
            state.grid, state.masses, [fr[i] for fr in per_channel], t))
    return Trajectory(times, tuple(snaps))


# ---------------------------------------------------------------------------
# Hamiltonian application


def apply_hamiltonian(state: SuperpositionState, ham: HamiltonianSpec,
                      masses=None) -> SuperpositionState:
    """``H psi`` channel-wise at the state's time.

    ``masses`` overrides the mass used to build each channel's operator.
    """
    hbar, c = ham.constants.hbar, ham.constants.c
    masses = state.masses if masses is None else tuple(masses)
    out = []
    for ch, m in zip(state.channels, masses):
        h = -(hbar**2) / (2 * m) * spectral_derivative(ch.psi, state.grid, 2)
        if ham.rest_energy:
            h = h + m * c**2 * ch.psi
        v = ham.potential_values(m, state.grid, state.t)
        if v is not None:
            h = h + v * ch.psi
        out.append(h)
    return SuperpositionState.from_arrays(state.grid, state.masses, out, state.t)


def s_derivative(field: ExtendedField) -> ExtendedField:
    """``d/ds``: channel ``m`` picks up ``-i m / hbar``."""
    mult = -1j * field.sgrid.masses / field.sgrid.hbar
    coeffs = field.mass_components() * mult[None, :]
    return ExtendedField.from_mass_components(coeffs, field.grid, field.sgrid, field.t)


def inverse_s_derivative(field: ExtendedField) -> ExtendedField:
    """Formal ``(d/ds)^-1``: channel ``m`` picks up ``i hbar / m``.

    Raises :class:`NonConvergentStateError` if the zero-mass slot carries
    more than ``1e-12`` of the field norm.
    """
    coeffs = field.mass_components()
    total = np.sqrt(np.sum(np.abs(coeffs) ** 2))
    zero = np.sqrt(np.sum(np.abs(coeffs[:, 0]) ** 2))
    if zero > 1e-12 * total:
        raise NonConvergentStateError(
            f"m = 0 component carries {zero / total:.3e} of the field norm")
    masses = field.sgrid.masses
    mult = np.zeros(field.sgrid.n_s, dtype=complex)
    mult[1:] = 1j * field.sgrid.hbar / masses[1:]
    coeffs = coeffs * mult[None, :]
    return ExtendedField.from_mass_components(coeffs, field.grid, field.sgrid, field.t)


def extended_hamiltonian(field: ExtendedField, ham: HamiltonianSpec) -> ExtendedField:
    """Apply the mass-operator Hamiltonian directly on ``Psi(x, s)``.

    ``i hbar c^2 d/ds - (hbar / 2i) (d/ds)^-1 d^2/dx^2 + V``, where a
    uniform field contributes ``M g x``.
    """
    _check_extended(ham)
    hbar, c = ham.constants.hbar, ham.constants.c
    if not math.isclose(hbar, field.sgrid.hbar):
        raise InvalidParameterError("Hamiltonian and s-grid disagree on hbar")
    lap = field.replace(field=spectral_derivative(field.field, field.grid, 2))
    out = -(hbar / 2j) * inverse_s_derivative(lap).field
    if ham.rest_energy:
        out = out + 1j * hbar * c**2 * s_derivative(field).field
    if isinstance(ham.potential, UniformField):
        mass_op = 1j * hbar * s_derivative(field).field
        out = out + ham.potential.g * field.grid.x[:, None] * mass_op
    elif ham.potential is not None:
        v = ham.potential_values(1.0, field.grid, field.t)
        out = out + v[:, None] * field.field
    return field.replace(field=out)
