"""Survival amplitudes under an absorbing potential confined to x >= 0.

The path weight exp(-U t_Omega) turns the traversal-time distribution into

    psi_U(x, t) = int dtau exp(-U tau) Phi(x, t | tau),

which is the characteristic function of Phi at the imaginary step height V = -iU.
``optical_evolve`` integrates the Schroedinger equation with the potential
-iU theta(x) directly and serves as the independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distribution import AmplitudeDistribution
from .lattice import WaveFunction
from .scattering import crank_nicolson, default_steps, step_profile


class TimeStepError(ValueError):
    pass


@dataclass
class OpticalRun:
    U: float
    t: float
    psi_U: WaveFunction
    survival: float
    n_steps: int | None = None


def absorbed_amplitude(dist: AmplitudeDistribution, U: float, method: str = "spectral") -> WaveFunction:
    """psi_U = int exp(-U tau) Phi(tau) dtau, delta terms weighted by exp(-U f_k).

    ``spectral`` evaluates the characteristic function at V = -iU (exact for the
    continuum integral); ``quadrature`` sums the smooth cells directly, which is only
    accurate while U df << 1.
    """
    if U < 0:
        raise ValueError("U must be >= 0")
    if method == "spectral":
        if dist.characteristic is None:
            raise ValueError("distribution has no characteristic function; use method='quadrature'")
        amp = dist.characteristic(np.array([-1j * U]))[0]
    elif method == "quadrature":
        amp = (np.exp(-U * np.clip(dist.f, 0.0, None)) @ dist.smooth) * dist.df
        for fk, ck in dist.singular:
            amp = amp + np.exp(-U * fk) * ck
    else:
        raise ValueError(f"unknown method {method!r}")
    mass = dist.meta.get("mass", 1.0)
    return WaveFunction(dist.grid, amp, mass, {"U": U, "method": method})


def optical_evolve(
    psi_I: WaveFunction,
    U: float,
    t: float,
    n_steps: int | None = None,
    max_phase: float = 0.1,
    edge_value: float = 0.5,
) -> OpticalRun:
    """Crank-Nicolson evolution under p^2/2M - iU theta(x) (decay inside x >= 0)."""
    if U < 0:
        raise ValueError("U must be >= 0")
    if n_steps is None:
        n_steps = default_steps(psi_I, t, U)
    dt = t / n_steps
    e_scale = max(default_steps(psi_I, 1.0, 0.0, per_unit=1.0), U)
    if dt * e_scale > max_phase * (1 + 1e-12):
        raise TimeStepError(f"dt * max(E, U) = {dt * e_scale:.3g} exceeds {max_phase:g}; increase n_steps")
    amp = crank_nicolson(psi_I, -1j * U * step_profile(psi_I.grid, edge_value), t, n_steps)
    out = psi_I.replace(amp)
    out.meta.update(U=U, t=t, n_steps=n_steps)
    return OpticalRun(U, t, out, out.norm2, n_steps)


def wall_overlap(psi_U: WaveFunction, psi_inf: WaveFunction) -> float:
    """|<psi_inf|psi_U>| / (||psi_inf|| ||psi_U||)."""
    ov = np.vdot(psi_inf.amp, psi_U.amp) * psi_U.grid.dx
    return float(abs(ov) / np.sqrt(psi_U.norm2 * psi_inf.norm2))


def residual_exponent(Us, overlaps) -> float:
    """Log-log slope of 1 - overlap against U."""
    r = 1 - np.asarray(overlaps)
    return float(np.polyfit(np.log(Us), np.log(r), 1)[0])
