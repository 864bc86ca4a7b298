"""Uniform 1-D grids, Gaussian packets and the free / hard-wall reference propagations.

Units: hbar = 1, the mass M is carried explicitly.  Momentum amplitudes use the
continuum convention

    psi(x) = int dk A(k) exp(ikx),    A(k) = (2 pi)^-1 int dx psi(x) exp(-ikx),

discretised on the FFT grid conjugate to the spatial grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Raised when a grid or a wavefunction violates a structural requirement."""


class SupportError(ValueError):
    """Raised when a wave packet is not confined to the left half-line."""


class GridAliasingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SpatialGrid:
    x_min: float
    x_max: float
    n_x: int

    def __post_init__(self):
        if self.n_x < 2:
            raise GridError(f"n_x must be >= 2, got {self.n_x}")
        if not self.x_max > self.x_min:
            raise GridError("x_max must exceed x_min")
        j0 = -self.x_min / self.dx
        if not (0 <= round(j0) < self.n_x) or abs(j0 - round(j0)) > 1e-9:
            raise GridError("grid must contain x = 0 exactly")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def x(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n_x)
        x[self.origin] = 0.0
        return x

    @property
    def origin(self) -> int:
        """Index of the grid point x = 0."""
        return int(round(-self.x_min / self.dx))

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_x, d=self.dx)

    @property
    def dk(self) -> float:
        return 2 * np.pi / (self.n_x * self.dx)

    @property
    def symmetric(self) -> bool:
        return abs(self.x_min + self.x_max) <= 1e-12 * self.x_max

    @property
    def right(self) -> np.ndarray:
        """Mask of the region 0 <= x (theta(0) = 1)."""
        return self.x >= 0

    def mirror(self, values: np.ndarray) -> np.ndarray:
        """Return ``values`` evaluated at -x (last axis)."""
        if not self.symmetric:
            raise GridError("mirroring x -> -x needs a grid symmetric about 0")
        return values[..., ::-1]


@dataclass(frozen=True)
class GaussianPacketSpec:
    x0: float = -20.0
    k0: float = 5.0
    sigma_x: float = 2.0
    mass: float = 1.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.sigma_x <= 0:
            raise ValueError("sigma_x must be positive")
        if not self.x0 + 5 * self.sigma_x < 0:
            raise SupportError("packet must start on the left: need x0 + 5 sigma < 0")
        if not (self.k0 > 0 and self.k0 * self.sigma_x >= 4):
            raise ValueError("need k0 > 0 and k0 * sigma_x >= 4 (negligible k < 0 tail)")

    @property
    def energy(self) -> float:
        return self.k0**2 / (2 * self.mass)


@dataclass
class MomentumRepresentation:
    k: np.ndarray
    A: np.ndarray


@dataclass
class WaveFunction:
    grid: SpatialGrid
    amp: np.ndarray
    mass: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amp = np.asarray(self.amp, dtype=complex)
        if self.amp.shape != (self.grid.n_x,):
            raise GridError(f"amplitude shape {self.amp.shape} does not match grid")
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2) * self.grid.dx)

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.norm2 - 1.0) <= tol

    def right_mass(self) -> float:
        """Probability on x >= 0."""
        return float(np.sum(np.abs(self.amp[self.grid.right]) ** 2) * self.grid.dx)

    def mean_position(self) -> float:
        p = np.abs(self.amp) ** 2
        return float(np.sum(p * self.grid.x) / np.sum(p))

    def mean_momentum(self) -> float:
        mom = to_momentum(self)
        p = np.abs(mom.A) ** 2
        return float(np.sum(p * mom.k) / np.sum(p))

    def width(self) -> float:
        p = np.abs(self.amp) ** 2
        x = self.grid.x
        m = np.sum(p * x) / np.sum(p)
        return float(np.sqrt(np.sum(p * (x - m) ** 2) / np.sum(p)))

    def replace(self, amp: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, amp, self.mass, dict(self.meta))


def to_momentum(psi: WaveFunction) -> MomentumRepresentation:
    g = psi.grid
    k = g.k
    A = g.dx / (2 * np.pi) * np.exp(-1j * k * g.x_min) * np.fft.fft(psi.amp)
    return MomentumRepresentation(k, A)


def from_momentum(mom: MomentumRepresentation, grid: SpatialGrid) -> np.ndarray:
    return grid.n_x * np.fft.ifft(mom.A * grid.dk * np.exp(1j * mom.k * grid.x_min))


def check_left_confined(psi: WaveFunction, tol: float = 1e-12) -> None:
    leak = psi.right_mass()
    if leak > tol * max(psi.norm2, 1e-300):
        raise SupportError(f"wavefunction has mass {leak:.3e} on x >= 0 (limit {tol:g})")


def gaussian_packet(spec: GaussianPacketSpec, grid: SpatialGrid) -> WaveFunction:
    """Normalised Gaussian packet exp(-(x-x0)^2/(4 sigma^2) + i k0 x) on ``grid``."""
    s = spec.sigma_x
    if grid.x_min > spec.x0 - 8 * s or grid.x_max < abs(spec.x0) + 8 * s:
        raise GridError("grid must span [x0 - 8 sigma, |x0| + 8 sigma]")
    x = grid.x
    amp = (2 * np.pi * s**2) ** -0.25 * np.exp(-((x - spec.x0) ** 2) / (4 * s**2) + 1j * spec.k0 * x)
    amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.dx)
    psi = WaveFunction(grid, amp, spec.mass, {"packet": spec})
    check_left_confined(psi)
    return psi


def _aliasing_check(psi: WaveFunction, t: float) -> None:
    g = psi.grid
    p = np.abs(psi.amp) ** 2
    if not np.any(p):
        return
    xc = psi.mean_position()
    mom = to_momentum(psi)
    pk = np.abs(mom.A) ** 2
    kc = np.sum(pk * mom.k) / np.sum(pk)
    sk = np.sqrt(np.sum(pk * (mom.k - kc) ** 2) / np.sum(pk))
    sx = psi.width()
    centre = xc + kc / psi.mass * t
    spread = np.hypot(sx, sk * t / psi.mass)
    if centre - 8 * spread < g.x_min or centre + 8 * spread > g.x_max:
        warnings.warn(
            f"packet centre {centre:.3g} moves within 8 sigma of the grid edge at t={t:g}",
            GridAliasingWarning,
            stacklevel=3,
        )


def free_propagate(psi: WaveFunction, t: float, warn: bool = True) -> WaveFunction:
    """Exact spectral free evolution, A(k) -> A(k) exp(-i k^2 t / 2M)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return psi.replace(psi.amp.copy())
    if warn:
        _aliasing_check(psi, t)
    k = psi.grid.k
    amp = np.fft.ifft(np.fft.fft(psi.amp) * np.exp(-0.5j * k**2 * t / psi.mass))
    return psi.replace(amp)


def wall_propagate(psi: WaveFunction, t: float, warn: bool = True) -> WaveFunction:
    """Evolution with an infinite wall at x = 0, by the method of images.

    psi_inf(x, t) = psi_0(x, t) - psi_0(-x, t) on x < 0 and exactly 0 on x >= 0.
    """
    check_left_confined(psi)
    psi0 = free_propagate(psi, t, warn=warn).amp
    g = psi.grid
    amp = psi0 - g.mirror(psi0)
    amp[g.right] = 0.0
    return psi.replace(amp)


def free_kernel(x, xp, t, M: float = 1.0):
    """Free propagator sqrt(M/(2 pi i t)) exp(i M (x-x')^2 / 2t), with sqrt(i) = exp(i pi/4)."""
    t = np.asarray(t, dtype=float)
    if not np.all(t > 0):
        raise ValueError("free_kernel needs t > 0")
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    pref = np.sqrt(M / (2 * np.pi * t)) * np.exp(-0.25j * np.pi)
    return pref * np.exp(0.5j * M * (x - xp) ** 2 / t)


def kernel_apply(psi: WaveFunction, t: float, x_out=None) -> np.ndarray:
    """Direct quadrature  int dx' K(x, x', t) psi(x')  on the grid."""
    g = psi.grid
    x_out = g.x if x_out is None else np.asarray(x_out, dtype=float)
    return free_kernel(x_out[:, None], g.x[None, :], t, psi.mass) @ psi.amp * g.dx


def gaussian_width(sigma: float, t: float, M: float = 1.0) -> float:
    """Closed-form spatial width of a freely spreading Gaussian."""
    return sigma * np.sqrt(1 + (t / (2 * M * sigma**2)) ** 2)
