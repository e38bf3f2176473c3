"""Frame changes, mass-dependent phase rules and generator algebra.

Direction conventions (all in one place)
----------------------------------------
Coordinates map *source* events ``(x, t, s)`` to *target* events:

* translation ``a``:  ``x' = x + a``,  ``s' = s``
* boost ``v``:        ``x' = x + v t``, ``s' = s + v x + v**2 t / 2``
* acceleration ``g``: ``x' = x - g t**2 / 2``,
  ``s' = s - g t x + g**2 t**3 / 3``

Wavefunctions are scalars on the extended space, ``Psi'(x', s') =
Psi(x, s)``.  With the channel kernel ``exp(-i m s / hbar)`` (see
:mod:`galext.core`) this turns into the per-channel rule::

    psi'_m(x') = exp(i m (s' - s) / hbar) psi_m(x)

so the boost phase is ``f_v(x, t) = v x + v**2 t / 2`` evaluated at the
*source* position, and the acceleration phase is ``-g t x + g**2 t**3 / 3``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    DEFAULT_CONSTANTS,
    TAIL_THRESHOLD,
    Constants,
    ExtendedField,
    SuperpositionState,
    boundary_tail,
    channels_to_sfield,
    spectral_derivative,
    spectral_shift,
    superposition,
)
from .dynamics import inverse_s_derivative
from .errors import InvalidParameterError, InvalidProbeError, OutOfBoxError


class SignConvention(str, Enum):
    """Candidate phase rules for the accelerated frame.

    ``S_TRANSFORM``
        phase inherited from the s-coordinate rule through the channel
        kernel: ``psi~ = exp(i m (-g t x~ - g^2 t^3/6) / hbar) psi``.
    ``PRINTED_PHASE``
        the printed closed form ``f~ = -g t x~ + g^2 t^3 / 6`` applied as
        ``psi~ = exp(i m f~ / hbar) psi``.

    The two differ only in the sign of the cubic term.  Which one is
    physical is decided numerically by :func:`galext.verify.check_ep`.
    """

    S_TRANSFORM = "s_transform"
    PRINTED_PHASE = "printed_phase"


@dataclass(frozen=True)
class Event:
    x: float
    t: float
    s: Optional[float] = None


@dataclass(frozen=True)
class FrameTransform:
    """Tagged frame change.

    Build with :meth:`translation`, :meth:`boost`, :meth:`acceleration` or
    :meth:`compose`.  Composed steps apply left to right.
    """

    kind: str
    value: float = 0.0
    steps: tuple = ()
    constants: Constants = field(default=DEFAULT_CONSTANTS, compare=False)

    def __post_init__(self):
        if self.kind not in ("translation", "boost", "acceleration", "composed"):
            raise InvalidParameterError(f"unknown transform kind {self.kind!r}")
        if self.kind == "composed":
            if not self.steps:
                raise InvalidParameterError("composed transform needs at least one step")
        elif not math.isfinite(self.value):
            raise InvalidParameterError(f"{self.kind} parameter must be finite")

    @classmethod
    def translation(cls, a, constants=DEFAULT_CONSTANTS):
        return cls("translation", float(a), constants=constants)

    @classmethod
    def boost(cls, v, constants=DEFAULT_CONSTANTS):
        return cls("boost", float(v), constants=constants)

    @classmethod
    def acceleration(cls, g, constants=DEFAULT_CONSTANTS):
        return cls("acceleration", float(g), constants=constants)

    @classmethod
    def compose(cls, *transforms):
        flat = []
        for tr in transforms:
            flat.extend(tr.steps if tr.kind == "composed" else (tr,))
        constants = transforms[0].constants if transforms else DEFAULT_CONSTANTS
        return cls("composed", steps=tuple(flat), constants=constants)

    def then(self, other: "FrameTransform") -> "FrameTransform":
        return FrameTransform.compose(self, other)

    def legs(self):
        return self.steps if self.kind == "composed" else (self,)


def bargmann_loop(a: float, v: float, constants=DEFAULT_CONSTANTS) -> FrameTransform:
    """``T_a``, then ``B_v``, then ``T_-a``, then ``B_-v``."""
    T, B = FrameTransform.translation, FrameTransform.boost
    return FrameTransform.compose(T(a, constants), B(v, constants),
                                  T(-a, constants), B(-v, constants))


# ---------------------------------------------------------------------------
# coordinates


def _s_shift(leg: FrameTransform, x, t):
    """``s' - s`` for a single leg at source position ``x`` and time ``t``."""
    if leg.kind == "boost":
        return boost_phase(leg.value, x, t)
    if leg.kind == "acceleration":
        g = leg.value
        return -g * t * x + g**2 * t**3 / 3.0
    return 0.0 * x


def _x_shift(leg: FrameTransform, t: float) -> float:
    """``x' - x`` for a single leg at time ``t``."""
    if leg.kind == "translation":
        return leg.value
    if leg.kind == "boost":
        return leg.value * t
    if leg.kind == "acceleration":
        return -0.5 * leg.value * t**2
    raise InvalidParameterError(f"not a single leg: {leg.kind}")


def transform_event(e: Event, f: FrameTransform) -> Event:
    x, t, s = e.x, e.t, e.s
    for leg in f.legs():
        if s is not None:
            s = s + _s_shift(leg, x, t)
        x = x + _x_shift(leg, t)
    return Event(x, t, s)


def boost_phase(v: float, x, t):
    """``f_v = v x + v**2 t / 2`` with ``x`` the pre-boost position."""
    return v * x + 0.5 * v**2 * t


def accel_phase(g: float, xt, tt):
    """Printed accelerated-frame phase ``-g t x~ + g**2 t**3 / 6``."""
    return -g * tt * xt + g**2 * tt**3 / 6.0


def accel_pullback_phase(g: float, xt, tt, convention=SignConvention.S_TRANSFORM):
    """Phase ``theta`` with ``psi~(x~) = exp(i m theta / hbar) psi(x)``.

    ``xt`` is the accelerated-frame position.
    """
    convention = SignConvention(convention)
    if convention is SignConvention.PRINTED_PHASE:
        return accel_phase(g, xt, tt)
    return -g * tt * xt - g**2 * tt**3 / 6.0


# ---------------------------------------------------------------------------
# action on states


def _check_in_box(psi, grid, what):
    tail = boundary_tail(psi, grid)
    if tail > TAIL_THRESHOLD:
        raise OutOfBoxError(f"{what}: packet reaches the boundary (tail norm {tail:.3e})")


def _apply_leg(state: SuperpositionState, leg: FrameTransform, hbar: float,
               convention: SignConvention) -> SuperpositionState:
    grid, t = state.grid, state.t
    dx = _x_shift(leg, t)
    src_x = grid.x - dx
    if leg.kind == "acceleration" and convention is SignConvention.PRINTED_PHASE:
        theta = accel_pullback_phase(leg.value, grid.x, t, convention)
    else:
        theta = _s_shift(leg, src_x, t)

    def one(ch):
        out = spectral_shift(ch.psi, grid, dx)
        if leg.kind != "translation":
            out = out * np.exp(1j * ch.mass * theta / hbar)
        _check_in_box(out, grid, f"{leg.kind}({leg.value:g}) on mass {ch.mass:g}")
        return out

    return state.map_channels(one)


def apply_transform(state: SuperpositionState, f: FrameTransform,
                    convention=SignConvention.S_TRANSFORM) -> SuperpositionState:
    """Express ``state`` in the target frame of ``f`` at the state's time."""
    convention = SignConvention(convention)
    for leg in f.legs():
        state = _apply_leg(state, leg, f.constants.hbar, convention)
    return state


def apply_boost(state: SuperpositionState, v: float,
                constants: Constants = DEFAULT_CONSTANTS) -> SuperpositionState:
    """Boost every channel: ``psi'_m(x') = exp(i m f_v(x, t)/hbar) psi_m(x)``, ``x = x' - v t``."""
    if v == 0:
        return state
    return apply_transform(state, FrameTransform.boost(v, constants))


def apply_acceleration(state, g, constants=DEFAULT_CONSTANTS,
                       convention=SignConvention.S_TRANSFORM):
    return apply_transform(state, FrameTransform.acceleration(g, constants), convention)


def bargmann_loop_galileo(state: SuperpositionState, a: float, v: float,
                          constants: Constants = DEFAULT_CONSTANTS) -> SuperpositionState:
    """Run the four Bargmann legs explicitly at the state's time stamp.

    Each channel comes back multiplied by ``exp(i m a v / hbar)``.
    """
    return apply_transform(state, bargmann_loop(a, v, constants))


def s_translate(field: ExtendedField, ds: float) -> ExtendedField:
    """``Psi(x, s) -> Psi(x, s - ds)``; channel ``m`` gains ``exp(i m ds / hbar)``."""
    coeffs = field.mass_components()
    coeffs *= np.exp(1j * field.sgrid.masses * ds / field.sgrid.hbar)[None, :]
    return ExtendedField.from_mass_components(coeffs, field.grid, field.sgrid, field.t)


def bargmann_loop_extended(field: ExtendedField, a: float, v: float) -> ExtendedField:
    """Bargmann loop as the mass-generated unitary ``exp(i a v M / hbar)``.

    On the extended space this is the translation ``s -> s + a v`` of
    events, i.e. ``Psi'(x, s) = Psi(x, s - a v)``.
    """
    if a * v == 0:
        return field
    return s_translate(field, a * v)


def apply_transform_field(field: ExtendedField, f: FrameTransform) -> ExtendedField:
    """Scalar action ``Psi'(x', s') = Psi(x, s)`` on an extended field."""
    grid, t = field.grid, field.t
    for leg in f.legs():
        dx = _x_shift(leg, t)
        delta = _s_shift(leg, grid.x - dx, t)
        coeffs = spectral_shift(field.mass_components(), grid, dx)
        coeffs *= np.exp(1j * np.outer(delta, field.sgrid.masses) / field.sgrid.hbar)
        field = ExtendedField.from_mass_components(coeffs, grid, field.sgrid, t)
    return field


# ---------------------------------------------------------------------------
# generator algebra on extended fields


@dataclass(frozen=True)
class GeneratorSpec:
    """Named linear operator on extended fields.

    ``realization(field) -> ndarray`` returns the operator applied to
    ``field.field``.
    """

    name: str
    realization: Callable[[ExtendedField], np.ndarray] = field(compare=False)

    def __call__(self, f: ExtendedField) -> np.ndarray:
        return self.realization(f)

    def scaled(self, factor) -> "GeneratorSpec":
        inner = self.realization
        return GeneratorSpec(f"{factor}*{self.name}", lambda f: factor * inner(f))


def _mass_multiply(f: ExtendedField, mult: np.ndarray) -> np.ndarray:
    coeffs = f.mass_components() * mult[None, :]
    return np.fft.fft(coeffs, axis=1)


def _inverse_mass(f: ExtendedField) -> np.ndarray:
    # M^-1 = (i hbar d/ds)^-1
    return inverse_s_derivative(f).field / (1j * f.sgrid.hbar)


def generator(name: str, constants: Constants = DEFAULT_CONSTANTS) -> GeneratorSpec:
    """Grid realization of ``I``, ``X``, ``P``, ``M``, ``C`` or ``H``.

    ``P = -i hbar d/dx``, ``M = i hbar d/ds``, ``C = M X - t P`` at the
    field's time stamp and ``H = M c^2 - (hbar^2/2) M^-1 d^2/dx^2``.
    """
    hbar = constants.hbar

    def X(f):
        return f.grid.x[:, None] * f.field

    def P(f):
        return -1j * hbar * spectral_derivative(f.field, f.grid, 1)

    def M(f):
        return _mass_multiply(f, f.sgrid.masses)

    def C(f):
        return M(f.replace(field=X(f))) - f.t * P(f)

    def H(f):
        if constants.galilean:
            raise InvalidParameterError("H needs a finite speed of light")
        lap = f.replace(field=spectral_derivative(f.field, f.grid, 2))
        return constants.c**2 * M(f) - 0.5 * hbar**2 * _inverse_mass(lap)

    table = {"I": lambda f: np.array(f.field), "X": X, "P": P, "M": M, "C": C, "H": H}
    if name not in table:
        raise InvalidParameterError(f"unknown generator {name!r}")
    return GeneratorSpec(name, table[name])


def commutator_check(A: GeneratorSpec, B: GeneratorSpec, expected: Optional[GeneratorSpec],
                     probes: Sequence[ExtendedField]) -> float:
    """Max over probes of ``|[A, B] psi - expected psi| / |psi|``.

    ``expected=None`` means the commutator should vanish.
    """
    worst = 0.0
    for probe in probes:
        pn = np.linalg.norm(probe.field)
        if pn == 0:
            raise InvalidProbeError("probe field has zero norm")
        ab = A(probe.replace(field=B(probe)))
        ba = B(probe.replace(field=A(probe)))
        res = ab - ba
        if expected is not None:
            res = res - expected(probe)
        worst = max(worst, float(np.linalg.norm(res) / pn))
    return worst


def gaussian_probes(grid, sgrid, masses, count, rng, t=0.0):
    """Random smooth lattice fields built from Gaussian channels."""
    probes = []
    for _ in range(count):
        weights = rng.normal(size=len(masses)) + 1j * rng.normal(size=len(masses))
        state = superposition(grid, masses, weights,
                              x0=rng.uniform(-3, 3, len(masses)),
                              k0=rng.uniform(-2, 2, len(masses)),
                              sigma=rng.uniform(0.7, 1.5, len(masses)), t=t)
        probes.append(channels_to_sfield(state, sgrid))
    return probes


# ---------------------------------------------------------------------------
# relativistic loop to O(1/c^2)


def poincare_loop_coords(v: float, a: float, c: float):
    """Displacement ``(dx, dt)`` of an event under the relativistic Bargmann loop."""
    if not c > 0:
        raise InvalidParameterError(f"c must be positive, got {c}")
    if math.isinf(c):
        return 0.0, 0.0
    va = v * a
    return va * v / (2 * c**2), va / c**2


def poincare_loop_phase(m: float, p: float, v: float, a: float, c: float,
                        hbar: float = 1.0) -> float:
    """Phase of the relativistic loop on a momentum eigenstate.

    ``H v a / (hbar c^2) + (v a)(v p) / (2 hbar c^2)`` with the quadratic
    ``H = m c^2 + p^2 / 2m``.  The rest-energy piece is kept separate so it
    reduces to ``m v a / hbar`` without roundoff.
    """
    va = v * a
    rest = m * va / hbar
    if math.isinf(c):
        return rest
    if abs(p) > 0.1 * m * c:
        warnings.warn(f"|p| = {abs(p):g} is not small against m c = {m * c:g}",
                      RuntimeWarning, stacklevel=2)
    return rest + (p**2 / (2 * m) * va + va * v * p / 2) / (hbar * c**2)
