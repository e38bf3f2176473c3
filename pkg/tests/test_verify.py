import numpy as np
import pytest

from galext.core import (
    Constants,
    SGrid,
    SpatialGrid,
    SuperpositionState,
    spectral_shift,
    superposition,
)
from galext.dynamics import HamiltonianSpec, Trajectory, evolve_trajectory
from galext.errors import InsufficientDataError, LatticeMismatchError
from galext.frames import SignConvention, boost_phase
from galext.verify import (
    check_ep,
    check_galilean_covariance,
    loop_fidelity_law,
    loop_fidelity_scan,
    pde_residual,
)

FREE = HamiltonianSpec()


def plane_wave_trajectory(grid, k, m, times):
    snaps = []
    for t in times:
        psi = np.exp(1j * (k * grid.x - k**2 * t / (2 * m)))
        snaps.append(SuperpositionState.from_arrays(grid, [m], [psi], t))
    return Trajectory(times, snaps)


# --- PDE residual ----------------------------------------------------------


def test_plane_wave_residual():
    grid = SpatialGrid(256, 40.0)
    k = 2 * np.pi * 3 / 40  # periodic on the box
    traj = plane_wave_trajectory(grid, k, 1.0, np.arange(5) * 1e-3)
    assert pde_residual(traj, FREE).max_residual < 1e-8


def test_split_step_trajectory_residual(grid512):
    s = superposition(grid512, [1.0, 2.0], k0=[0.5, -0.5])
    traj = evolve_trajectory(s, FREE, 1e-3, 200)
    rep = pde_residual(traj, FREE)
    assert rep.passed and rep.max_residual < 1e-5
    assert len(rep.residuals) == len(traj) - 2


def test_wrong_mass_fails(grid512):
    s = superposition(grid512, [1.0], k0=0.8)
    traj = evolve_trajectory(s, FREE, 1e-3, 50)
    assert pde_residual(traj, FREE, masses=[2.0]).max_residual > 1e-1


def test_residual_scales_as_dt_squared(grid512):
    s = superposition(grid512, [1.0], k0=1.0)
    res = []
    for dt in (4e-3, 2e-3):
        traj = evolve_trajectory(s, FREE, dt, int(round(0.2 / dt)))
        res.append(pde_residual(traj, FREE).max_residual)
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.05)


def test_residual_needs_three_snapshots(grid256):
    s = superposition(grid256, [1.0])
    traj = evolve_trajectory(s, FREE, 1e-3, 1)
    with pytest.raises(InsufficientDataError):
        pde_residual(traj, FREE)


def test_rest_energy_residual_demodulates(grid256):
    ham = HamiltonianSpec(rest_energy=True, constants=Constants(c=10.0))
    s = superposition(grid256, [1.0, 2.0])
    traj = evolve_trajectory(s, ham, 1e-3, 50)
    assert pde_residual(traj, ham).max_residual < 1e-5
    # without stripping the m c^2 phase the centered difference is swamped
    assert pde_residual(traj, ham, demodulate_rest=False).max_residual > 1e-4


# --- Galilean covariance -----------------------------------------------------


def test_zero_boost_covariance(grid512):
    s = superposition(grid512, [1.0, 2.0])
    rep = check_galilean_covariance(s, 0.0, 0.2, 1e-3)
    assert rep.passed and rep.fidelity == pytest.approx(1.0, abs=1e-14)
    assert rep.relative_phase_error < 1e-12


@pytest.mark.parametrize("masses", [[1.0], [1.0, 3.0]])
def test_boost_covariance(grid512, masses):
    s = superposition(grid512, masses, k0=0.2)
    rep = check_galilean_covariance(s, 1.0, 0.3, 1e-3)
    assert rep.passed
    assert rep.residual.max_residual < 1e-5
    assert all(f > 1 - 1e-10 for f in rep.channel_fidelities.values())
    assert rep.relative_phase_error < 1e-6


def test_covariance_invariant_under_global_phase(grid512):
    s = superposition(grid512, [1.0, 2.0])
    a = check_galilean_covariance(s, 0.8, 0.2, 1e-3)
    b = check_galilean_covariance(s.scaled(np.exp(0.7j)), 0.8, 0.2, 1e-3)
    assert a.residual.max_residual == pytest.approx(b.residual.max_residual, rel=1e-9)
    assert a.fidelity == pytest.approx(b.fidelity, abs=1e-14)


def test_phase_at_target_position_is_not_covariant(grid512):
    # evaluating v x + v^2 t / 2 at the post-boost x' instead of x = x' - v t
    # breaks the free equation
    v = 1.0
    s = superposition(grid512, [1.0], k0=0.3)
    traj = evolve_trajectory(s, FREE, 1e-3, 100)

    def wrong_boost(state):
        t = state.t
        return state.map_channels(lambda ch: spectral_shift(ch.psi, state.grid, v * t)
                                  * np.exp(1j * ch.mass * boost_phase(v, state.grid.x, t)))

    bad = pde_residual(traj.map(wrong_boost), FREE).max_residual
    assert bad > 1e-2


# --- equivalence principle -------------------------------------------------


def test_ep_zero_field(grid512):
    s = superposition(grid512, [1.0, 2.0])
    rep = check_ep(s, 0.0, 0.2, 1e-3)
    assert rep.passed
    assert rep.sign_convention is SignConvention.S_TRANSFORM
    # with g = 0 both conventions coincide
    assert all(f > 1 - 1e-12 for f in rep.candidates.values())


def test_ep_single_channel_cannot_discriminate(grid512):
    s = superposition(grid512, [1.0])
    rep = check_ep(s, 0.5, 0.5, 1e-3)
    assert all(f > 1 - 1e-10 for f in rep.candidates.values())
    assert not rep.unique


def test_ep_superposition_picks_one_convention(grid512):
    s = superposition(grid512, [1.0, 2.0])
    rep = check_ep(s, 0.5, 0.5, 1e-3)
    assert rep.unique and rep.passed
    assert rep.sign_convention is SignConvention.S_TRANSFORM
    assert rep.residual.max_residual < 1e-5
    printed = rep.candidates[SignConvention.PRINTED_PHASE]
    # deficit from a g^2 t^3 / 3 relative phase error on an equal-weight pair
    expected = np.cos(0.5**2 * 0.5**3 / 3 / 2) ** 2
    assert printed == pytest.approx(expected, abs=1e-8)


def test_ep_rejected_deficit_grows_with_g(grid512):
    s = superposition(grid512, [1.0, 2.0])
    deficits = []
    for g in (0.2, 0.4, 0.8):
        rep = check_ep(s, g, 0.4, 1e-3, sign_convention="printed_phase")
        deficits.append(1 - rep.fidelity)
    assert deficits[0] < deficits[1] < deficits[2]


def test_ep_mirror_symmetry(grid512):
    s = superposition(grid512, [1.0, 2.0])
    up = check_ep(s, 0.5, 0.3, 1e-3)
    down = check_ep(s, -0.5, 0.3, 1e-3)
    for conv in SignConvention:
        assert up.candidates[conv] == pytest.approx(down.candidates[conv], abs=1e-10)


def test_ep_field_residual(grid512, sgrid8):
    s = superposition(grid512, [1.0, 2.0])
    rep = check_ep(s, 0.5, 0.2, 1e-3, constants=Constants(c=10.0), rest_energy=True,
                   sgrid=sgrid8)
    assert rep.passed and rep.residual.max_residual < 1e-5


def test_ep_off_lattice_mass(grid256):
    s = superposition(grid256, [1.0, 1.5])
    with pytest.raises(LatticeMismatchError):
        check_ep(s, 0.5, 0.1, 1e-3, sgrid=SGrid(8, 2 * np.pi))


# --- loop scan -------------------------------------------------------------


def test_loop_scan_examples():
    table = loop_fidelity_scan(1.0, 3.0, [0.0, np.pi / 2, np.pi], SpatialGrid(256, 40.0))
    f = [row[1] for row in table]
    assert f[0] == pytest.approx(1.0, abs=1e-12)
    assert f[1] < 1e-12
    assert f[2] == pytest.approx(1.0, abs=1e-12)


def test_loop_scan_matches_law():
    av = np.linspace(0, 2 * np.pi, 20)
    table = loop_fidelity_scan(1.0, 2.5, av, SpatialGrid(256, 40.0), v=1.5)
    law = loop_fidelity_law(1.0, 2.5, av)
    assert np.max(np.abs(np.array([f for _, f in table]) - law)) < 1e-10


def test_loop_scan_equal_masses():
    table = loop_fidelity_scan(2.0, 2.0, [0.3, 1.7], SpatialGrid(256, 40.0))
    assert all(abs(f - 1) < 1e-12 for _, f in table)
    assert np.allclose(loop_fidelity_law(2.0, 2.0, [0.3, 1.7]), 1.0)


def test_loop_law_examples():
    assert loop_fidelity_law(1.0, 3.0, np.pi / 2) == pytest.approx(0.0, abs=1e-30)
    assert loop_fidelity_law(1.0, 2.0, np.pi, hbar=0.5) == pytest.approx(1.0)
