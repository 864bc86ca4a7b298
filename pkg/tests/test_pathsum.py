import numpy as np
import pytest

from pathclass.cli import oracle_case
from pathclass.meter import MeterFilter
from pathclass.pathsum import (
    AliasingError,
    BinRangeError,
    DiscreteSystem,
    EnumerationCapError,
    enumerate_paths,
    enumerate_restricted_amplitude,
    filtered_reading,
    finite_dim_zeno,
    lambda_grid,
    lattice_amplitudes,
    meter_evolve,
    random_hermitian,
)


def _system(dim=2, seed=0, beta=1.0):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return DiscreteSystem(random_hermitian(dim, rng), np.arange(dim, dtype=float), beta), psi / np.linalg.norm(psi)


def test_system_validation():
    with pytest.raises(ValueError):
        DiscreteSystem(np.array([[0, 1], [0, 0]]), [0, 1])
    with pytest.raises(ValueError):
        DiscreteSystem(np.eye(7), np.zeros(7))
    with pytest.raises(ValueError):
        DiscreteSystem(np.eye(2), [0.0])
    with pytest.raises(ValueError):
        DiscreteSystem(np.eye(2), [0.0, 1.0], [(-1.0, 1.0)])


@pytest.mark.parametrize("dim,K", [(2, 6), (3, 4)])
def test_path_sum_is_complete(dim, K):
    sys, psi = _system(dim)
    U = sys.propagator(1.3)
    for x in range(dim):
        e = np.eye(dim)[x]
        assert abs(enumerate_paths(sys, psi, e, 1.3, K).amplitude.sum() - (U @ psi)[x]) < 1e-10


def test_single_pulse_splits_by_label():
    sys, psi = _system(2, beta=[(0.4, 2.0)])
    table = enumerate_paths(sys, psi, np.array([0.0, 1.0]), 1.0)
    assert table.labels.shape == (2, 1)
    np.testing.assert_allclose(table.f_value, [0.0, 2.0])
    expect = [sys.propagator(0.6)[1, x] * (sys.propagator(0.4) @ psi)[x] for x in (0, 1)]
    np.testing.assert_allclose(table.amplitude, expect, atol=1e-14)


def test_records_iterate_paths():
    sys, psi = _system(2)
    rec = list(enumerate_paths(sys, psi, np.array([1.0, 0.0]), 1.0, 2).records())
    assert len(rec) == 8 and all(len(r.labels) == 3 for r in rec)


def test_enumeration_cap():
    sys, psi = _system(6)
    with pytest.raises(EnumerationCapError):
        enumerate_paths(sys, psi, np.eye(6)[0], 1.0, 12)


def test_bins_must_cover_range():
    sys, psi = _system(2)
    with pytest.raises(BinRangeError):
        enumerate_restricted_amplitude(sys, psi, np.eye(2)[0], 1.0, 4, [0.0, 0.2, 0.4])
    with pytest.raises(BinRangeError):
        enumerate_restricted_amplitude(sys, psi, np.eye(2)[0], 1.0, 4, [0.0, 1.0, 0.5])


def test_lambda_grid_too_coarse_aliases():
    sys, psi = _system(3)
    with pytest.raises(AliasingError):
        meter_evolve(sys, psi, 1.0, lambda_grid(2, 0.25), K=4)


def test_identical_slices_agree_with_enumeration():
    r = oracle_case(2, 8, 1.0, seed=3)
    assert r["max_abs_diff_trotter"] < 1e-10
    assert r["completeness_error"] < 1e-10


def test_continuum_converges_with_K():
    errs = [oracle_case(2, K, 1.0, seed=1)["max_abs_diff"] for K in (4, 8, 16)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.25)


def test_zero_coupling_concentrates_at_zero():
    sys, psi = _system(2, beta=0.0)
    dist = meter_evolve(sys, psi, 1.0, lambda_grid(9, 0.25), K=4)
    amp = lattice_amplitudes(dist)
    i0 = int(np.argmin(np.abs(dist.f)))
    np.testing.assert_allclose(amp[i0], sys.propagator(1.0) @ psi, atol=1e-12)
    assert np.abs(np.delete(amp, i0, axis=0)).max() < 1e-12


def test_pulses_give_integer_readings():
    sys, psi = _system(3, beta=[(0.2, 1.0), (0.5, 1.0), (0.9, 1.0)])
    dist = meter_evolve(sys, psi, 1.0, lambda_grid(32, 0.25))
    amp = lattice_amplitudes(dist)
    on = np.abs(dist.f - np.round(dist.f)) < 1e-9
    assert np.abs(amp[~on]).max() < 1e-12
    assert np.sum(np.abs(amp) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_filtered_reading_is_normalised():
    sys, psi = _system(3)
    f, p = filtered_reading(sys, psi, 2.0, MeterFilter("gaussian", 0.3))
    assert p.sum() * (f[1] - f[0]) == pytest.approx(1.0, abs=1e-8)


def test_zeno_identity_coupling_reads_single_value():
    sys, psi = _system(2)
    sys = DiscreteSystem(sys.H, np.ones(2), 1.0)
    rep = finite_dim_zeno(sys, psi, 1.0, MeterFilter("gaussian", 0.5), [1.0, 100.0])
    # all weight inside the 3-sigma window of the single reading beta t
    np.testing.assert_allclose(rep.window_mass[:, 0], 0.9973, atol=1e-3)


def test_zeno_commuting_coupling_keeps_populations():
    a = np.array([0.0, 1.0])
    psi = np.array([0.6, 0.8], dtype=complex)
    sys = DiscreteSystem(np.diag([0.3, -0.7]), a, 1.0)
    rep = finite_dim_zeno(sys, psi, 1.0, MeterFilter("gaussian", 0.5), [10.0])
    np.testing.assert_allclose(rep.window_mass[0], np.array([0.36, 0.64]) * 0.9973, atol=1e-3)


def test_zeno_mass_grows_with_alpha():
    sys, psi = _system(2, seed=2)
    rep = finite_dim_zeno(sys, psi, 1.0, MeterFilter("gaussian", 1.0), [10.0, 100.0, 1000.0])
    m = rep.window_mass.sum(axis=1)
    assert m[0] < m[1] < m[2]
    np.testing.assert_allclose(rep.total, 1.0, atol=1e-8)
