import warnings

import numpy as np
import pytest

from pathclass.lattice import GaussianPacketSpec, SpatialGrid, free_propagate, gaussian_packet
from pathclass.scattering import StepAmplitudes, StepSolver, step_evolve, step_evolve_exact, step_T


def test_step_amplitude_limits():
    k = np.linspace(0.5, 9.0, 50)
    E = k**2 / 2
    assert np.abs(step_T(k, 0.0) - 1).max() < 1e-12
    assert np.abs(step_T(k, E) - 2).max() < 1e-12


@pytest.mark.parametrize("V", [-30.0, 3.0, 12.5, 40.0])
def test_flux_balance(V):
    amp = StepAmplitudes.compute(5.0, V)
    assert amp.R == pytest.approx(amp.T - 1, abs=1e-15)
    assert amp.flux_balance() == pytest.approx(1.0, abs=1e-12)


def test_optical_step_absorbs():
    amp = StepAmplitudes.compute(5.0, -1j * 3.0)
    assert amp.q.imag > 0
    assert abs(amp.R) < 1


def test_zero_step_is_free(packet):
    solver = StepSolver(packet)
    out = solver.evolve(0.0, 10.0)[0]
    assert np.abs(out - free_propagate(packet, 10.0).amp).max() < 1e-10


def test_solver_at_zero_time_is_initial_packet(packet):
    # threshold panels keep the t = 0 state on the left for steps inside the band
    solver = StepSolver(packet)
    for V in (6.25, 12.5, 25.0):
        out = solver.evolve(V, 0.0)[0]
        assert np.abs(out - packet.amp).max() < 1e-9


@pytest.mark.parametrize("V", [-60.0, -10.0, 6.25, 12.5, 25.0, 200.0])
def test_norm_including_off_grid_weight(packet, V):
    solver = StepSolver(packet)
    psi = solver.evolve(V, 10.0)
    total = np.sum(np.abs(psi) ** 2) * packet.grid.dx + solver.beyond_grid_norm(np.array([V]), 10.0, psi)[0]
    assert total == pytest.approx(1.0, abs=1e-8)


def test_step_evolve_warns_when_packet_sits_on_step(packet):
    with pytest.warns(Warning):
        step_evolve(packet, 12.5, 4.0)


@pytest.mark.parametrize("V", [6.25, 25.0])
def test_expansion_against_crank_nicolson(V):
    # independent oracle: grid time stepping with a sixth-order Laplacian
    grid = SpatialGrid(-50.0, 50.0, 8001)
    psi = gaussian_packet(GaussianPacketSpec(), grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exact = step_evolve(psi, V, 10.0).amp
    cn = step_evolve_exact(psi, V, 10.0, n_steps=20000).amp
    assert np.abs(exact - cn).max() < 1e-3
