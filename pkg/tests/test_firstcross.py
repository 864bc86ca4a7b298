import numpy as np
import pytest

from pathclass.firstcross import (
    _time_antiderivative,
    completeness_residual,
    filtered_pointer_norm,
    first_crossing_distribution,
    first_crossing_kernel,
    free_kernel_dx,
    norm_leak_rate,
    pointer_norm,
    wall_kernel,
    wall_kernel_dx,
)
from pathclass.lattice import free_kernel
from pathclass.meter import MeterFilter


@pytest.fixture(scope="module")
def crossing(packet):
    return first_crossing_distribution(packet, 10.0, 100)


def test_image_kernel_vanishes_on_wall():
    xp = np.linspace(-30.0, 0.0, 7)
    assert np.abs(wall_kernel(0.0, xp, 3.0)).max() < 1e-12


def test_image_kernel_slope_doubles_free_slope():
    xp = np.linspace(-30.0, -0.5, 7)
    diff = wall_kernel_dx(0.0, xp, 3.0) - 2 * free_kernel_dx(0.0, xp, 3.0)
    assert np.abs(diff).max() < 1e-12


def test_free_kernel_slope_matches_finite_difference():
    h = 1e-6
    fd = (free_kernel(1.0 + h, -2.0, 2.0) - free_kernel(1.0 - h, -2.0, 2.0)) / (2 * h)
    assert abs(fd - free_kernel_dx(1.0, -2.0, 2.0)) < 1e-7


def test_time_antiderivative_differentiates_back():
    a, b = np.array(3.0), np.array(2.5)
    s = np.linspace(0.3, 4.0, 9)
    h = 1e-5
    fd = (_time_antiderivative(s + h, a, b) - _time_antiderivative(s - h, a, b)) / (2 * h)
    exact = np.exp(1j * (a / s + b * s)) / np.sqrt(s)
    assert np.abs(fd - exact).max() < 1e-6


def test_kernel_rejects_endpoint_tau():
    with pytest.raises(ValueError):
        first_crossing_kernel(0.0, -1.0, 2.0, [0.0, 1.0])
    with pytest.raises(ValueError):
        first_crossing_kernel(0.0, -1.0, 2.0, 2.0)


def test_cell_averages_match_kernel_quadrature(crossing, packet):
    g = packet.grid
    idx = [int(np.argmin(np.abs(g.x - x))) for x in (-12.0, -3.0, 0.0, 5.0, 20.0)]
    xs = g.x[idx]
    sup = np.abs(packet.amp) > 1e-300
    xg, wg = np.polynomial.legendre.leggauss(16)
    for j in (40, 50, 60):
        a, b = crossing.tau_edges[j], crossing.tau_edges[j + 1]
        tau = 0.5 * (a + b) + 0.5 * (b - a) * xg
        kt = first_crossing_kernel(xs[:, None], g.x[None, sup], 10.0, tau)
        avg = 0.5 * wg @ (kt.smooth @ packet.amp[sup] * g.dx)
        assert np.abs(avg - crossing.crossing_density[j, idx]).max() < 1e-10


def test_density_even_in_x(crossing):
    d = crossing.crossing_density
    assert np.abs(d - d[:, ::-1]).max() < 1e-12


def test_completeness(crossing, packet):
    assert completeness_residual(crossing, packet) < 1e-8


def test_nothing_crosses_before_contact(packet):
    dec = first_crossing_distribution(packet, 1.0, 20)
    assert dec.crossed_norm() < 1e-4
    assert completeness_residual(dec, packet) < 1e-8


def test_crossed_weight_grows_with_t(packet):
    w = [first_crossing_distribution(packet, t, 40).crossed_norm() for t in (2.0, 4.0, 6.0)]
    assert w[0] < w[1] < w[2]


def test_explicit_edges_validated(packet):
    with pytest.raises(ValueError):
        first_crossing_distribution(packet, 1.0, [0.0, 0.5, 0.4])
    with pytest.raises(ValueError):
        first_crossing_distribution(packet, 1.0, [0.0, 2.0])


def test_leak_rate_matches_pointer_norm_derivative(packet):
    G = MeterFilter("gaussian", 1.0)
    h = 1e-3
    q = dict(panel=0.05, order=12)
    for t, rate in zip((2.0, 4.0, 6.0), norm_leak_rate(packet, G, [2.0, 4.0, 6.0], **q)):
        fd = (pointer_norm(packet, G, t + h, **q) - pointer_norm(packet, G, t - h, **q)) / (2 * h)
        assert rate == pytest.approx(fd, abs=1e-6)


def test_leak_rate_zero_before_contact_and_decoupled(packet):
    G = MeterFilter("gaussian", 1.0)
    assert abs(norm_leak_rate(packet, G, [0.5])[0]) < 1e-6
    assert np.all(norm_leak_rate(packet, G, [2.0, 6.0], coupled=False) == 0)


def test_leak_rate_rejects_bad_input(packet):
    with pytest.raises(ValueError):
        norm_leak_rate(packet, MeterFilter("boxcar", 1.0), [1.0])
    with pytest.raises(ValueError):
        norm_leak_rate(packet, MeterFilter("gaussian", 1.0), [0.0])


def test_pointer_norm_from_decomposition(packet):
    G = MeterFilter("gaussian", 1.0)
    direct = filtered_pointer_norm(first_crossing_distribution(packet, 4.0, 400), G)
    assert direct == pytest.approx(pointer_norm(packet, G, 4.0), abs=1e-4)
