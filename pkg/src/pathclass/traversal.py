"""Traversal-time amplitudes for the right half-line, from the step-height Fourier representation.

The amplitude for spending a duration tau in x >= 0 is

    Phi(x, t | tau) = (2 pi)^-1 int dV exp(iV tau) psi_V(x, t),

where psi_V evolves under a step of height V.  On x < 0 the V-independent part of
psi_V is the hard-wall packet and transforms into a delta(tau) term; the rest is
smooth.  For the reflected branch the transform is done per momentum in closed form:

    (2 pi)^-1 int dV exp(iV tau) T(k, V) = E_k Tcal(E_k tau),

    Tcal(theta) = (2 pi)^-1 e^{i theta} [4 sqrt(pi/theta) e^{-i pi/4}
                                          + 4 i pi w(sqrt(theta) e^{i pi/4})],  theta > 0,

with w the Faddeeva function and Tcal = 0 for theta < 0.  The transmitted branch is
transformed numerically from the uniform V-grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import wofz

from .distribution import AmplitudeDistribution, Spectrum, lam_to_f
from .lattice import WaveFunction, free_propagate, wall_propagate
from .scattering import StepSolver


class TauAliasingError(RuntimeError):
    """The smooth part has too much weight outside the physical window [0, t]."""


def reflected_kernel(theta) -> np.ndarray:
    """Tcal(theta): the tau-transform of T(k, V) in units of E_k (see module docstring)."""
    th = np.asarray(theta, dtype=float)
    out = np.zeros(th.shape, dtype=complex)
    pos = th > 0
    s = np.sqrt(th[pos])
    out[pos] = (
        np.exp(1j * th[pos])
        / (2 * np.pi)
        * (4 * np.sqrt(np.pi) / s * np.exp(-0.25j * np.pi) + 4j * np.pi * wofz(s * np.exp(0.25j * np.pi)))
    )
    return out


def reflected_kernel_cells(E: np.ndarray, edges: np.ndarray, order: int = 6) -> np.ndarray:
    """Integrals of E Tcal(E tau) over tau-cells, shape (n_E, n_cells).

    Uses y = sqrt(E tau) so the tau^(-1/2) edge at zero is integrated exactly.
    """
    xg, wg = np.polynomial.legendre.leggauss(order)
    y = np.sqrt(np.clip(np.multiply.outer(E, edges), 0.0, None))
    a, b = y[:, :-1], y[:, 1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    out = np.zeros(a.shape, dtype=complex)
    for xi, wi in zip(xg, wg):
        yy = mid + half * xi
        out += wi * half * 2 * yy * reflected_kernel(yy**2)
    return out


def default_v_grid(energy: float, t: float, v_max_factor: float = 40.0, window_factor: float = 2.0) -> np.ndarray:
    """Uniform V-grid with spacing 2 pi / (window_factor t) reaching v_max_factor * energy."""
    dV = 2 * np.pi / (window_factor * t)
    half = int(np.ceil(v_max_factor * energy / dV))
    return dV * (np.arange(2 * half) - half)


def _check_v_grid(V: np.ndarray, t: float) -> tuple[float, int]:
    V = np.asarray(V, dtype=float)
    if V.ndim != 1 or V.size < 4:
        raise ValueError("V_grid must be a 1-D array")
    dV = V[1] - V[0]
    if not np.allclose(np.diff(V), dV, rtol=1e-9, atol=0):
        raise ValueError("V_grid must be uniform")
    zero = np.flatnonzero(np.abs(V) < 1e-9 * dV)
    if zero.size != 1:
        raise ValueError("V_grid must contain V = 0")
    if abs(V[0] + V[-1] + dV) > 1e-6 * dV and abs(V[0] + V[-1]) > 1e-6 * dV:
        raise ValueError("V_grid must be symmetric about 0")
    if dV > 2 * np.pi / t * (1 + 1e-12):
        raise ValueError(f"V spacing {dV:g} exceeds 2 pi / t; the tau window would not cover [0, t]")
    return float(dV), int(zero[0])


def traversal_distribution(
    psi_I: WaveFunction,
    t: float,
    V_grid: np.ndarray | None = None,
    alias_tol: float = 1e-3,
) -> AmplitudeDistribution:
    """Fine-grained traversal-time distribution Phi(x, t | tau) for Omega = [0, inf).

    Returns a distribution on the tau-grid dual to ``V_grid`` whose window is
    centred on [0, t], with the single delta term (0, c_0) where c_0 is the hard-wall
    packet on x < 0.  The characteristic function (psi_V for any, even complex, V)
    is attached for exact spectral filtering.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    g = psi_I.grid
    solver = StepSolver(psi_I)
    if V_grid is None:
        k_mean = psi_I.mean_momentum()
        V_grid = default_v_grid(k_mean**2 / (2 * psi_I.mass), t)
    V_grid = np.asarray(V_grid, dtype=float)
    dV, _ = _check_v_grid(V_grid, t)
    n = V_grid.size
    dtau = 2 * np.pi / (n * dV)
    window = n * dtau
    j0 = -int(np.floor(0.5 * (window - t) / dtau))
    tau = dtau * (np.arange(n) + j0)

    psi_V = solver.evolve(V_grid, t)

    c0 = wall_propagate(psi_I, t, warn=False).amp
    smooth = np.zeros((n, g.n_x), dtype=complex)

    # transmitted side: discrete V -> tau transform
    right = ~solver.left
    smooth[:, right] = lam_to_f(psi_V[:, right], V_grid, tau)

    # reflected side: closed-form transform per momentum, cell averaged
    edges = np.concatenate([tau - 0.5 * dtau, [tau[-1] + 0.5 * dtau]])
    cells = reflected_kernel_cells(solver.E, edges) / dtau
    smooth[:, solver.left] = (cells.T * solver.weights(t)) @ solver.reflected_basis()

    outside = (tau < -0.5 * dtau) | (tau > t + 0.5 * dtau)
    p = np.abs(smooth) ** 2
    alias = float(p[outside].sum() / p.sum()) if p.sum() > 0 else 0.0
    if alias > alias_tol:
        raise TauAliasingError(f"{alias:.2e} of the smooth weight lies outside [0, t]")

    return AmplitudeDistribution(
        g,
        tau,
        smooth,
        singular=[(0.0, c0)],
        spectrum=Spectrum(V_grid, psi_V, solver.beyond_grid_norm(V_grid, t, psi_V)),
        characteristic=lambda lam: solver.evolve(lam, t),
        meta={"kind": "traversal", "solver": solver, "t": t, "dV": dV, "tau_outside_fraction": alias, "mass": psi_I.mass},
    )


def sum_rule_residual(dist: AmplitudeDistribution, psi_I: WaveFunction) -> float:
    """Sup-norm of int_0^t Phi~ dtau minus the free packet, read with the mirror convention.

    The integral runs over the cells whose centres lie in [0, t] (within half a
    cell), so content aliased into the unphysical part of a wide tau-window is
    excluded.  On x >= 0 the integral is compared with psi_0(x, t); on x < 0 the
    smooth part describes the reflected copy, so it is compared with psi_0(-x, t)
    plus the (negligible at large t) left tail psi_0(x, t).
    """
    g = psi_I.grid
    t = dist.meta["t"]
    psi0 = free_propagate(psi_I, t, warn=False).amp
    target = psi0.copy()
    left = ~g.right
    target[left] = psi0[left] + g.mirror(psi0)[left]
    inside = (dist.f > -0.5 * dist.df) & (dist.f < t + 0.5 * dist.df)
    integral = dist.smooth[inside].sum(axis=0) * dist.df
    return float(np.abs(integral - target).max())


@dataclass
class TwoClassSplit:
    A_zero: np.ndarray
    A_nonzero: np.ndarray
    total_probability: float
    norm_reflected: float
    norm_transmitted: float
    norm_zero: float


def two_class_split(dist: AmplitudeDistribution) -> TwoClassSplit:
    """Coarse-grain Phi into the classes tau = 0 and tau != 0 and square naively.

    ``total_probability`` is int dx |A(x, t | tau != 0)|^2 with A(tau != 0) the full
    tau-integral of the smooth part.  Its two constituents are the weights on
    x < 0 (the mirrored reflected copy) and x >= 0 (the free packet).
    """
    if not dist.singular:
        raise ValueError("distribution has no delta component")
    dx = dist.weight
    A_zero = sum(c for fk, c in dist.singular if abs(fk) < 0.5 * dist.df)
    A_nonzero = dist.smooth_integral()
    right = dist.grid.right
    n_ref = float(np.sum(np.abs(A_nonzero[~right]) ** 2) * dx)
    n_tr = float(np.sum(np.abs(A_nonzero[right]) ** 2) * dx)
    return TwoClassSplit(
        A_zero=A_zero,
        A_nonzero=A_nonzero,
        total_probability=n_ref + n_tr,
        norm_reflected=n_ref,
        norm_transmitted=n_tr,
        norm_zero=float(np.sum(np.abs(A_zero) ** 2) * dx),
    )


def nyquist_change(psi_I: WaveFunction, t: float, V_grid: np.ndarray) -> float:
    """Relative change of Phi~ on [0, t] when the V spacing is halved."""
    fine = np.concatenate([V_grid, V_grid + 0.5 * (V_grid[1] - V_grid[0])])
    fine.sort()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = traversal_distribution(psi_I, t, V_grid)
        b = traversal_distribution(psi_I, t, fine)
    ia = (a.f >= 0) & (a.f <= t)
    # the finer grid has the same dtau and a doubled window
    idx = np.searchsorted(b.f, a.f[ia] - 0.25 * a.df)
    diff = np.abs(a.smooth[ia] - b.smooth[idx])
    return float(diff.max() / np.abs(a.smooth[ia]).max())
