import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from galext.core import (
    Constants,
    ExtendedField,
    MassChannel,
    SGrid,
    SpatialGrid,
    SuperpositionState,
    boundary_tail,
    channels_to_sfield,
    fidelity,
    gaussian_packet,
    norm,
    sfield_to_channels,
    spectral_derivative,
    superposition,
)
from galext.errors import (
    IncompatibleStatesError,
    InvalidParameterError,
    LatticeMismatchError,
)


def test_constants_validation():
    assert Constants().galilean
    assert not Constants(c=10.0).galilean
    with pytest.raises(InvalidParameterError):
        Constants(hbar=0)
    with pytest.raises(InvalidParameterError):
        Constants(c=-1)


@pytest.mark.parametrize("n", [0, 3, 100, 1000])
def test_grid_rejects_non_power_of_two(n):
    with pytest.raises(InvalidParameterError):
        SpatialGrid(n, 10.0)


def test_grid_points():
    g = SpatialGrid(8, 8.0)
    assert g.dx == 1.0
    np.testing.assert_array_equal(g.x, np.arange(-4.0, 4.0))


def test_sgrid_lattice():
    sg = SGrid(8, 2 * np.pi)
    assert sg.mass_quantum == pytest.approx(1.0)
    assert sg.mass_index(3.0) == 3
    with pytest.raises(LatticeMismatchError):
        sg.mass_index(1.5)
    with pytest.raises(LatticeMismatchError):
        sg.mass_index(8.0)  # aliases slot 0


# --- gaussian_packet -------------------------------------------------------


def test_gaussian_real_even_unit_norm():
    g = SpatialGrid(8, 8.0)
    psi = gaussian_packet(g, 0.0, 0.0, 1.0)
    assert np.all(psi.imag == 0)
    # periodic evenness about x = 0, which sits at index n/2
    mirrored = np.roll(psi[::-1], 1)
    np.testing.assert_allclose(psi, mirrored, atol=0, rtol=1e-15)
    assert np.sum(np.abs(psi) ** 2) * g.dx == pytest.approx(1.0, abs=1e-14)


def test_gaussian_momentum_does_not_change_modulus(grid256):
    a = gaussian_packet(grid256, 0.0, 0.0, 1.0)
    b = gaussian_packet(grid256, 0.0, np.pi, 1.0)
    np.testing.assert_allclose(np.abs(a), np.abs(b), rtol=1e-14)


def test_gaussian_moments(grid1024):
    g = grid1024
    psi = gaussian_packet(g, 0.0, 2.0, 1.0)
    w = np.abs(psi) ** 2 * g.dx
    assert abs(np.sum(g.x * w)) < 1e-10
    # <k> = Re sum psi* (-i dpsi/dx) dx with the derivative taken analytically
    dpsi = (-(g.x - 0.0) / 2.0 + 2.0j) * psi
    k_mean = np.sum(np.conj(psi) * (-1j) * dpsi).real * g.dx
    assert abs(k_mean - 2.0) < 1e-10


def test_gaussian_rejects_bad_sigma(grid256):
    with pytest.raises(InvalidParameterError):
        gaussian_packet(grid256, 0, 0, 0.0)


# --- states, norms, fidelity ----------------------------------------------


def test_channel_validation(grid256):
    with pytest.raises(InvalidParameterError):
        MassChannel(0.0, np.zeros(256), grid256)
    with pytest.raises(InvalidParameterError):
        MassChannel(1.0, np.zeros(10), grid256)
    ch = MassChannel(1.0, gaussian_packet(grid256), grid256)
    assert not ch.psi.flags.writeable


def test_state_sorts_and_rejects_duplicate_masses(grid256):
    psi = gaussian_packet(grid256)
    s = SuperpositionState.from_arrays(grid256, [3.0, 1.0], [psi, psi])
    assert s.masses == (1.0, 3.0)
    with pytest.raises(InvalidParameterError):
        SuperpositionState.from_arrays(grid256, [1.0, 1.0], [psi, psi])


def test_norm_examples(grid256, sgrid8):
    single = superposition(grid256, [1.0])
    assert norm(single) == pytest.approx(1.0, abs=1e-12)
    psi = gaussian_packet(grid256) / math.sqrt(2)
    two = SuperpositionState.from_arrays(grid256, [1.0, 2.0], [psi, psi])
    assert norm(two) == pytest.approx(1.0, abs=1e-12)
    f = channels_to_sfield(two, sgrid8)
    assert norm(f.replace(field=3 * f.field)) == pytest.approx(3 * norm(f), rel=1e-15)


def test_fidelity_examples(grid256):
    s = superposition(grid256, [1.0, 2.0])
    assert fidelity(s, s) == pytest.approx(1.0, abs=1e-14)
    assert fidelity(s, s.scaled(np.exp(0.731j))) == pytest.approx(1.0, abs=1e-14)
    flipped = SuperpositionState(
        (s.channels[0], s.channels[1].replace(psi=-s.channels[1].psi)), grid256)
    # |(1 + e^{i pi}) / 2|^2 = 0
    assert fidelity(s, flipped) < 1e-28


def test_fidelity_incompatible(grid256, grid512):
    a = superposition(grid256, [1.0, 2.0])
    with pytest.raises(IncompatibleStatesError):
        fidelity(a, superposition(grid256, [1.0, 3.0]))
    with pytest.raises(IncompatibleStatesError):
        fidelity(a, superposition(grid512, [1.0, 2.0]))


def test_sector_orthogonality(grid256):
    psi = gaussian_packet(grid256)
    zero = np.zeros_like(psi)
    a = SuperpositionState.from_arrays(grid256, [1.0, 2.0], [psi, zero])
    b = SuperpositionState.from_arrays(grid256, [1.0, 2.0], [zero, psi])
    assert fidelity(a, b) == 0.0


# --- channels <-> s-field -------------------------------------------------


def test_single_channel_field_is_separable(grid256, sgrid8):
    s = superposition(grid256, [2.0])
    f = channels_to_sfield(s, sgrid8)
    psi = s.channels[0].psi
    expected = psi[:, None] * np.exp(-1j * 2.0 * sgrid8.s[None, :])
    np.testing.assert_allclose(f.field, expected, atol=1e-14)
    mod = np.abs(f.field)
    np.testing.assert_allclose(mod, mod[:, :1].repeat(8, axis=1), atol=1e-14)


def test_empty_state_gives_zero_field(grid256, sgrid8):
    f = channels_to_sfield(SuperpositionState((), grid256), sgrid8)
    assert np.all(f.field == 0)


def test_off_lattice_mass_refused(grid256, sgrid8):
    with pytest.raises(LatticeMismatchError):
        channels_to_sfield(superposition(grid256, [1.5]), sgrid8)
    f = channels_to_sfield(superposition(grid256, [1.0]), sgrid8)
    with pytest.raises(LatticeMismatchError):
        sfield_to_channels(f, [0.5])


def test_roundtrip_two_channels(grid256, sgrid8):
    s = superposition(grid256, [1.0, 3.0], [1.0, 0.5j], x0=[-1, 2], k0=[0.3, -1])
    back, residual = sfield_to_channels(channels_to_sfield(s, sgrid8), s.masses)
    assert residual < 1e-14
    for a, b in zip(s.channels, back.channels):
        assert np.max(np.abs(a.psi - b.psi)) < 1e-12


def test_projection_other_mass(grid256, sgrid8):
    s = superposition(grid256, [2.0])
    f = channels_to_sfield(s, sgrid8)
    same, r0 = sfield_to_channels(f, [2.0])
    assert r0 == 0.0
    np.testing.assert_allclose(same.channels[0].psi, s.channels[0].psi, atol=1e-15)
    other, r1 = sfield_to_channels(f, [5.0])
    assert np.max(np.abs(other.channels[0].psi)) < 1e-15
    assert r1 == pytest.approx(norm(f), rel=1e-12)


def test_parseval_random_field(grid256, sgrid8, rng):
    data = rng.normal(size=(256, 8)) + 1j * rng.normal(size=(256, 8))
    f = ExtendedField(data, grid256, sgrid8)
    masses = list(sgrid8.masses[1:])
    state, residual = sfield_to_channels(f, masses)
    total = norm(state) ** 2 + residual**2
    assert abs(total - norm(f) ** 2) < 1e-12 * norm(f) ** 2
    # with the zero slot removed the channel norms alone carry everything
    coeffs = f.mass_components()
    coeffs[:, 0] = 0
    g = ExtendedField.from_mass_components(coeffs, grid256, sgrid8)
    state, residual = sfield_to_channels(g, masses)
    assert residual < 1e-13
    assert abs(norm(state) ** 2 - norm(g) ** 2) < 1e-12 * norm(g) ** 2


@settings(max_examples=30, deadline=None)
@given(weights=st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False,
                                           allow_infinity=False), min_size=3, max_size=3),
       x0=st.floats(-4, 4))
def test_roundtrip_and_parseval_property(weights, x0):
    grid, sgrid = SpatialGrid(128, 30.0), SGrid(8, 2 * np.pi)
    if sum(abs(w) for w in weights) < 1e-3:
        return
    s = superposition(grid, [1.0, 2.0, 5.0], weights, x0=x0)
    f = channels_to_sfield(s, sgrid)
    assert abs(norm(f) - norm(s)) < 1e-12
    back, _ = sfield_to_channels(f, s.masses)
    for a, b in zip(s.channels, back.channels):
        assert np.max(np.abs(a.psi - b.psi)) < 1e-12


# --- spectral derivative --------------------------------------------------


def test_derivative_of_plane_wave(grid256):
    k = 2 * np.pi * 5 / grid256.length
    wave = np.exp(1j * k * grid256.x)
    np.testing.assert_allclose(spectral_derivative(wave, grid256, 1), 1j * k * wave, atol=1e-12)
    np.testing.assert_allclose(spectral_derivative(wave, grid256, 2), -k * k * wave, atol=1e-12)


def test_derivative_of_constant(grid256):
    assert np.max(np.abs(spectral_derivative(np.ones(256), grid256, 1))) < 1e-15


def test_derivative_of_gaussian(grid1024):
    g = grid1024
    psi = gaussian_packet(g, 0.0, 0.0, 1.0)
    expected = -(g.x / 2.0) * psi
    assert np.max(np.abs(spectral_derivative(psi, g, 1) - expected)) < 1e-10


def test_derivative_order_checked(grid256):
    with pytest.raises(InvalidParameterError):
        spectral_derivative(np.ones(256), grid256, 3)


def _smooth(rng, grid, modes=12):
    c = np.zeros(grid.n, dtype=complex)
    idx = np.r_[0:modes, grid.n - modes:grid.n]
    c[idx] = rng.normal(size=idx.size) + 1j * rng.normal(size=idx.size)
    return np.fft.ifft(c) * grid.n


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_derivative_symmetry(seed):
    rng = np.random.default_rng(seed)
    grid = SpatialGrid(128, 20.0)
    f, g = _smooth(rng, grid), _smooth(rng, grid)
    ip = lambda a, b: np.vdot(a, b) * grid.dx  # noqa: E731
    d1f, d1g = spectral_derivative(f, grid, 1), spectral_derivative(g, grid, 1)
    scale = np.linalg.norm(f) * np.linalg.norm(d1g) * grid.dx
    assert abs(ip(f, d1g) + ip(d1f, g)) < 1e-10 * scale
    d2f, d2g = spectral_derivative(f, grid, 2), spectral_derivative(g, grid, 2)
    scale2 = np.linalg.norm(f) * np.linalg.norm(d2g) * grid.dx
    assert abs(ip(f, d2g) - ip(d2f, g)) < 1e-10 * scale2
    assert ip(f, d2f).real <= 1e-10 * scale2
    # linearity
    lhs = spectral_derivative(2 * f - 3j * g, grid, 1)
    assert np.max(np.abs(lhs - (2 * d1f - 3j * d1g))) < 1e-9 * np.max(np.abs(lhs))


def test_boundary_tail(grid256):
    assert boundary_tail(gaussian_packet(grid256, 0, 0, 1), grid256) < 1e-30
    assert boundary_tail(gaussian_packet(grid256, 18, 0, 1), grid256) > 1e-8
