import numpy as np
import pytest
from scipy.integrate import quad

from pathclass.lattice import wall_propagate
from pathclass.scattering import step_T
from pathclass.traversal import (
    TauAliasingError,
    default_v_grid,
    reflected_kernel,
    reflected_kernel_cells,
    sum_rule_residual,
    traversal_distribution,
    two_class_split,
)


def test_reflected_kernel_matches_step_transform():
    # damped transform int dtau exp(-i V tau - eta tau) E Tcal(E tau) = T(k, V - i eta),
    # evaluated by direct quadrature in y = sqrt(tau)
    E, eta = 12.5, 2.0
    k = np.sqrt(2 * E)
    for V in (-20.0, 5.0, 30.0):
        def integrand(y, f):
            tau = y * y
            return f(2 * y * np.exp(-1j * (V - 1j * eta) * tau) * E * reflected_kernel(E * tau))

        re = quad(integrand, 0, 8, args=(np.real,), limit=500)[0]
        im = quad(integrand, 0, 8, args=(np.imag,), limit=500)[0]
        assert re + 1j * im == pytest.approx(complex(step_T(k, V - 1j * eta)), abs=1e-7)


def test_kernel_cells_match_quadrature():
    E = np.array([3.0, 12.5])
    edges = np.array([0.0, 0.01, 0.5, 0.51, 3.0, 3.2])
    cells = reflected_kernel_cells(E, edges)
    for i, e in enumerate(E):
        for j in (0, 2, 4):
            a, b = np.sqrt(e * edges[j]), np.sqrt(e * edges[j + 1])
            re = quad(lambda y: np.real(2 * y * reflected_kernel(y * y)), a, b)[0]
            im = quad(lambda y: np.imag(2 * y * reflected_kernel(y * y)), a, b)[0]
            assert cells[i, j] == pytest.approx(re + 1j * im, abs=1e-10)


def test_v_grid_is_dual_to_window():
    V = default_v_grid(12.5, 10.0)
    assert V[1] - V[0] == pytest.approx(2 * np.pi / 20.0)
    assert np.any(V == 0)


def test_singular_part_is_wall_packet(traversal, packet):
    (f0, c0), = traversal.singular
    assert f0 == 0.0
    assert np.abs(c0 - wall_propagate(packet, 10.0).amp).max() == 0


def test_sum_rule(traversal, packet):
    assert sum_rule_residual(traversal, packet) < 1e-3


def test_smooth_part_lives_in_physical_window(traversal):
    assert traversal.meta["tau_outside_fraction"] < 1e-6


def test_two_class_split(traversal):
    s = two_class_split(traversal)
    assert s.total_probability == pytest.approx(2.0, abs=0.02)
    assert s.norm_zero == pytest.approx(1.0, abs=1e-9)


def test_window_too_short_raises(packet):
    with pytest.raises(ValueError):
        traversal_distribution(packet, 10.0, default_v_grid(12.5, 10.0, window_factor=0.5))


def test_aliasing_guard(packet):
    # any weight outside [0, t] trips a zero tolerance
    with pytest.raises(TauAliasingError):
        traversal_distribution(packet, 10.0, default_v_grid(12.5, 10.0, v_max_factor=10), alias_tol=0.0)
