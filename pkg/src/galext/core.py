"""State containers, grids and spectral utilities.

Phase convention
----------------
A definite-mass channel ``psi_m(x)`` is embedded in the extended
representation with the kernel ``exp(-i m s / hbar)``::

    Psi(x, s) = sum_m exp(-i m s / hbar) psi_m(x)

so that the mass operator ``M = i hbar d/ds`` has eigenvalue ``+m`` on
channel ``m``.  Every phase rule in :mod:`galext.frames` and
:mod:`galext.dynamics` is derived from this single choice.  In particular
``d/ds`` acts on channel ``m`` as ``-i m / hbar`` and ``(d/ds)^-1`` as
``i hbar / m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    IncompatibleStatesError,
    InvalidParameterError,
    LatticeMismatchError,
)

#: Relative norm allowed in the boundary strips before a packet counts as
#: touching the periodic boundary.
TAIL_THRESHOLD = 1e-8
#: Fraction of the grid (per side) treated as the boundary strip.
TAIL_FRACTION = 1 / 16


@dataclass(frozen=True)
class Constants:
    """Physical constants in force.

    ``c = math.inf`` means strictly Galilean (no rest energy available).
    """

    hbar: float = 1.0
    c: float = math.inf

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise InvalidParameterError(f"hbar must be positive and finite, got {self.hbar}")
        if not self.c > 0:
            raise InvalidParameterError(f"c must be positive or inf, got {self.c}")

    @property
    def galilean(self) -> bool:
        return math.isinf(self.c)


DEFAULT_CONSTANTS = Constants()


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on ``[-length/2, length/2)``."""

    n: int
    length: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not _is_power_of_two(int(self.n)):
            raise InvalidParameterError(f"grid size must be a power of two, got {self.n}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise InvalidParameterError(f"grid length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = -0.5 * self.length + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        k = 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        k.flags.writeable = False
        return k


@dataclass(frozen=True)
class SGrid:
    """Periodic grid for the extra coordinate ``s``.

    The conjugate mass lattice is ``m_k = 2 pi hbar k / length_s`` for
    ``k = 0 .. n_s - 1``.
    """

    n_s: int
    length_s: float
    hbar: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n_s, (int, np.integer)) or self.n_s < 2:
            raise InvalidParameterError(f"n_s must be an integer >= 2, got {self.n_s}")
        if not (self.length_s > 0 and math.isfinite(self.length_s)):
            raise InvalidParameterError(f"length_s must be positive, got {self.length_s}")
        if not self.hbar > 0:
            raise InvalidParameterError("hbar must be positive")

    @property
    def ds(self) -> float:
        return self.length_s / self.n_s

    @property
    def mass_quantum(self) -> float:
        return 2 * np.pi * self.hbar / self.length_s

    @cached_property
    def s(self) -> np.ndarray:
        s = self.ds * np.arange(self.n_s)
        s.flags.writeable = False
        return s

    @cached_property
    def masses(self) -> np.ndarray:
        """Mass carried by each s-Fourier slot, in FFT slot order."""
        m = self.mass_quantum * np.arange(self.n_s)
        m.flags.writeable = False
        return m

    def mass_index(self, mass: float) -> int:
        """Slot index of ``mass`` on the lattice; refuses to round."""
        k = mass / self.mass_quantum
        k_int = int(round(k))
        if abs(k - k_int) > 1e-9 * max(1.0, abs(k)) or not 0 <= k_int < self.n_s:
            raise LatticeMismatchError(
                f"mass {mass!r} is not on the s-grid lattice "
                f"(quantum {self.mass_quantum!r}, {self.n_s} slots)"
            )
        return k_int


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class MassChannel:
    """A definite-mass wavefunction sampled on ``grid`` at time ``t``."""

    mass: float
    psi: np.ndarray
    grid: SpatialGrid
    t: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise InvalidParameterError(f"channel mass must be positive, got {self.mass}")
        psi = _frozen(self.psi)
        if psi.shape != (self.grid.n,):
            raise InvalidParameterError(
                f"psi has shape {psi.shape}, grid expects ({self.grid.n},)"
            )
        if not np.all(np.isfinite(psi)):
            raise InvalidParameterError("psi contains non-finite samples")
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "t", float(self.t))

    def replace(self, psi=None, t=None) -> "MassChannel":
        return MassChannel(
            self.mass,
            self.psi if psi is None else psi,
            self.grid,
            self.t if t is None else t,
        )


@dataclass(frozen=True, eq=False)
class SuperpositionState:
    """Finite superposition of distinct-mass channels on one grid.

    Channels are kept sorted by mass.  Distinct masses are orthogonal
    sectors, so norms add in quadrature and cross-mass overlaps vanish.
    """

    channels: tuple
    grid: SpatialGrid
    t: float = 0.0

    def __post_init__(self):
        channels = tuple(sorted(self.channels, key=lambda ch: ch.mass))
        masses = [ch.mass for ch in channels]
        if len(set(masses)) != len(masses):
            raise InvalidParameterError(f"channel masses must be distinct, got {masses}")
        for ch in channels:
            if ch.grid != self.grid:
                raise IncompatibleStatesError("all channels must share the state grid")
            if ch.t != float(self.t):
                raise IncompatibleStatesError("all channels must share the state time stamp")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_arrays(cls, grid, masses, psis, t=0.0) -> "SuperpositionState":
        chans = [MassChannel(m, p, grid, t) for m, p in zip(masses, psis)]
        return cls(tuple(chans), grid, t)

    @property
    def masses(self) -> tuple:
        return tuple(ch.mass for ch in self.channels)

    def channel(self, mass: float) -> MassChannel:
        for ch in self.channels:
            if ch.mass == mass:
                return ch
        raise KeyError(mass)

    def map_channels(self, fn, t=None) -> "SuperpositionState":
        """New state with ``psi_m <- fn(channel)`` on every channel."""
        t = self.t if t is None else t
        chans = tuple(ch.replace(psi=fn(ch), t=t) for ch in self.channels)
        return SuperpositionState(chans, self.grid, t)

    def scaled(self, factor) -> "SuperpositionState":
        return self.map_channels(lambda ch: factor * ch.psi)


@dataclass(frozen=True, eq=False)
class ExtendedField:
    """Complex field ``Psi(x, s)`` on ``grid x sgrid`` at time ``t``."""

    field: np.ndarray
    grid: SpatialGrid
    sgrid: SGrid
    t: float = 0.0

    def __post_init__(self):
        f = _frozen(self.field)
        if f.shape != (self.grid.n, self.sgrid.n_s):
            raise InvalidParameterError(
                f"field has shape {f.shape}, expected ({self.grid.n}, {self.sgrid.n_s})"
            )
        if not np.all(np.isfinite(f)):
            raise InvalidParameterError("field contains non-finite samples")
        object.__setattr__(self, "field", f)
        object.__setattr__(self, "t", float(self.t))

    def replace(self, field=None, t=None) -> "ExtendedField":
        return ExtendedField(
            self.field if field is None else field,
            self.grid,
            self.sgrid,
            self.t if t is None else t,
        )

    def mass_components(self) -> np.ndarray:
        """Coefficients ``psi_k(x)`` of ``exp(-i m_k s / hbar)``; shape (n, n_s)."""
        return np.fft.ifft(self.field, axis=1)

    @classmethod
    def from_mass_components(cls, coeffs, grid, sgrid, t=0.0) -> "ExtendedField":
        return cls(np.fft.fft(coeffs, axis=1), grid, sgrid, t)


# ---------------------------------------------------------------------------
# states


def gaussian_packet(grid: SpatialGrid, x0: float = 0.0, k0: float = 0.0,
                    sigma: float = 1.0) -> np.ndarray:
    """Unit-norm Gaussian ``exp(-(x-x0)^2/(4 sigma^2) + i k0 x)`` on ``grid``."""
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * k0 * x)
    return psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)


def superposition(grid: SpatialGrid, masses: Sequence[float], weights=None,
                  x0=0.0, k0=0.0, sigma=1.0, t=0.0) -> SuperpositionState:
    """Gaussian channels with amplitude ``weights`` (normalized to unit total).

    ``x0``, ``k0`` and ``sigma`` may be scalars or per-channel sequences.
    """
    nch = len(masses)
    if weights is None:
        weights = np.ones(nch)
    weights = np.asarray(weights, dtype=complex)
    if weights.shape != (nch,):
        raise InvalidParameterError("need one weight per mass")
    total = np.sqrt(np.sum(np.abs(weights) ** 2))
    if total == 0:
        raise InvalidParameterError("weights must not all vanish")
    weights = weights / total
    x0s, k0s, sigmas = (np.broadcast_to(np.asarray(v, dtype=float), (nch,))
                        for v in (x0, k0, sigma))
    psis = [w * gaussian_packet(grid, a, b, c)
            for w, a, b, c in zip(weights, x0s, k0s, sigmas)]
    return SuperpositionState.from_arrays(grid, masses, psis, t)


# ---------------------------------------------------------------------------
# norms and overlaps


def _vec_norm2(psi, grid):
    return float(np.sum(np.abs(psi) ** 2) * grid.dx)


def norm(state) -> float:
    """L2 norm by grid quadrature.

    Superpositions add channel norms in quadrature.  Extended fields use
    the weight ``dx * ds / length_s`` so their norm equals that of the
    channel decomposition.
    """
    if isinstance(state, SuperpositionState):
        return math.sqrt(sum(_vec_norm2(ch.psi, state.grid) for ch in state.channels))
    if isinstance(state, MassChannel):
        return math.sqrt(_vec_norm2(state.psi, state.grid))
    if isinstance(state, ExtendedField):
        w = state.grid.dx / state.sgrid.n_s
        return math.sqrt(float(np.sum(np.abs(state.field) ** 2) * w))
    raise TypeError(f"cannot take the norm of {type(state).__name__}")


def _check_compatible(a: SuperpositionState, b: SuperpositionState):
    if a.grid != b.grid:
        raise IncompatibleStatesError("states live on different grids")
    if a.masses != b.masses:
        raise IncompatibleStatesError(f"mass lists differ: {a.masses} vs {b.masses}")


def inner(a: SuperpositionState, b: SuperpositionState) -> complex:
    """``<a|b>`` summed over mass sectors."""
    _check_compatible(a, b)
    return complex(sum(np.vdot(ca.psi, cb.psi) for ca, cb in zip(a.channels, b.channels))
                   * a.grid.dx)


def fidelity(a: SuperpositionState, b: SuperpositionState) -> float:
    """Ray overlap ``|<a|b>|^2 / (|a|^2 |b|^2)``; 1 means same ray."""
    ov = inner(a, b)
    na, nb = norm(a), norm(b)
    if na == 0 or nb == 0:
        raise IncompatibleStatesError("fidelity undefined for a zero state")
    return min(1.0, abs(ov) ** 2 / (na * nb) ** 2)


def channel_fidelities(a: SuperpositionState, b: SuperpositionState) -> dict:
    """Per-mass ray overlap between matching channels."""
    _check_compatible(a, b)
    out = {}
    for ca, cb in zip(a.channels, b.channels):
        ov = np.vdot(ca.psi, cb.psi)
        den = np.vdot(ca.psi, ca.psi).real * np.vdot(cb.psi, cb.psi).real
        out[ca.mass] = min(1.0, float(abs(ov) ** 2 / den)) if den > 0 else float("nan")
    return out


# ---------------------------------------------------------------------------
# mass channels <-> s-field


def channels_to_sfield(state: SuperpositionState, sgrid: SGrid) -> ExtendedField:
    """Embed channels as ``Psi(x, s) = sum_m exp(-i m s/hbar) psi_m(x)``."""
    coeffs = np.zeros((state.grid.n, sgrid.n_s), dtype=np.complex128)
    for ch in state.channels:
        coeffs[:, sgrid.mass_index(ch.mass)] = ch.psi
    return ExtendedField.from_mass_components(coeffs, state.grid, sgrid, state.t)


def sfield_to_channels(field: ExtendedField, masses: Iterable[float]):
    """Project a field onto the requested lattice masses.

    Returns ``(state, residual)`` where ``residual`` is the norm left in
    the mass slots that were not requested.
    """
    masses = list(masses)
    idx = [field.sgrid.mass_index(m) for m in masses]
    coeffs = field.mass_components()
    chans = tuple(MassChannel(m, coeffs[:, k], field.grid, field.t)
                  for m, k in zip(masses, idx))
    rest = np.ones(field.sgrid.n_s, dtype=bool)
    rest[idx] = False
    residual = math.sqrt(float(np.sum(np.abs(coeffs[:, rest]) ** 2) * field.grid.dx))
    return SuperpositionState(chans, field.grid, field.t), residual


# ---------------------------------------------------------------------------
# spectral helpers


def spectral_derivative(wave, grid: SpatialGrid, order: int = 1) -> np.ndarray:
    """``d^order/dx^order`` by the Fourier multiplier ``(ik)^order``.

    Works along axis 0, so extended fields can be differentiated in x.
    """
    if order not in (1, 2):
        raise InvalidParameterError(f"derivative order must be 1 or 2, got {order}")
    wave = np.asarray(wave, dtype=np.complex128)
    mult = (1j * grid.k) ** order
    if wave.ndim > 1:
        mult = mult.reshape((-1,) + (1,) * (wave.ndim - 1))
    return np.fft.ifft(mult * np.fft.fft(wave, axis=0), axis=0)


def spectral_shift(wave, grid: SpatialGrid, shift: float) -> np.ndarray:
    """Periodic band-limited translation: returns ``wave(x - shift)``."""
    if shift == 0:
        return np.array(wave, dtype=np.complex128, copy=True)
    wave = np.asarray(wave, dtype=np.complex128)
    mult = np.exp(-1j * grid.k * shift)
    if wave.ndim > 1:
        mult = mult.reshape((-1,) + (1,) * (wave.ndim - 1))
    return np.fft.ifft(mult * np.fft.fft(wave, axis=0), axis=0)


def boundary_tail(psi, grid: SpatialGrid) -> float:
    """Relative norm of ``psi`` inside the two boundary strips."""
    psi = np.asarray(psi)
    w = max(1, int(grid.n * TAIL_FRACTION))
    total = np.sum(np.abs(psi) ** 2)
    if total == 0:
        return 0.0
    edge = np.sum(np.abs(psi[:w]) ** 2) + np.sum(np.abs(psi[-w:]) ** 2)
    return math.sqrt(float(edge / total))


def expectation_x(psi, grid: SpatialGrid) -> float:
    p = np.abs(psi) ** 2
    return float(np.sum(grid.x * p) / np.sum(p))


def variance_x(psi, grid: SpatialGrid) -> float:
    p = np.abs(psi) ** 2
    mu = np.sum(grid.x * p) / np.sum(p)
    return float(np.sum((grid.x - mu) ** 2 * p) / np.sum(p))


def expectation_k(psi, grid: SpatialGrid) -> float:
    p = np.abs(np.fft.fft(psi)) ** 2
    return float(np.sum(grid.k * p) / np.sum(p))
