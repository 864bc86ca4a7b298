"""Amplitude distributions over (x, f): a smooth field plus explicit delta components."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lattice import SpatialGrid


class GridMismatchError(ValueError):
    pass


@dataclass
class Spectrum:
    """Samples of the characteristic function Phi^(lam, x) = int df exp(-i lam f) Phi(x, f).

    ``lam`` is the uniform grid conjugate to the distribution's f-grid (FFT order
    not required, but spacing must equal 2 pi / (n_f df)).
    """

    lam: np.ndarray
    values: np.ndarray
    beyond: Optional[np.ndarray] = None  # per-lam weight outside the spatial grid

    @property
    def dlam(self) -> float:
        return float(self.lam[1] - self.lam[0])


@dataclass
class AmplitudeDistribution:
    """Complex field Phi(x, f) on a uniform f-grid together with delta terms.

    Parameters
    ----------
    grid : SpatialGrid
        Spatial grid; the smooth field has shape (n_f, n_x), or (n_f, dim) for
        finite-dimensional systems where ``grid`` is None and ``weights`` is 1.
    f : ndarray
        Uniform grid of the functional value (cell centres).
    smooth : ndarray
        Cell-averaged smooth part.
    singular : list of (f_k, c_k)
        Delta components c_k(x) delta(f - f_k), kept out of the grid.
    spectrum : Spectrum, optional
        Characteristic function on the conjugate grid; when present, filtering
        is done spectrally and is exactly norm-consistent.
    characteristic : callable, optional
        lam -> Phi^(lam, x) for arbitrary (possibly complex) lam, shape (n_lam, n_x).
    """

    grid: Optional[SpatialGrid]
    f: np.ndarray
    smooth: np.ndarray
    singular: list = field(default_factory=list)
    spectrum: Optional[Spectrum] = None
    characteristic: Optional[Callable] = None
    weight: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.smooth = np.asarray(self.smooth, dtype=complex)
        if self.smooth.ndim != 2 or self.smooth.shape[0] != self.f.size:
            raise GridMismatchError("smooth must have shape (n_f, n_x)")
        if self.f.size > 1 and not np.allclose(np.diff(self.f), self.df, rtol=1e-9, atol=0):
            raise GridMismatchError("f-grid must be uniform")
        if self.grid is not None:
            self.weight = self.grid.dx
            if self.smooth.shape[1] != self.grid.n_x:
                raise GridMismatchError("smooth field does not match the spatial grid")

    @property
    def df(self) -> float:
        return float(self.f[1] - self.f[0]) if self.f.size > 1 else 1.0

    @property
    def n_f(self) -> int:
        return self.f.size

    @property
    def n_x(self) -> int:
        return self.smooth.shape[1]

    def marginal(self) -> np.ndarray:
        """int df Phi(x, f): smooth sum plus every delta coefficient."""
        out = self.smooth.sum(axis=0) * self.df
        for _, c in self.singular:
            out = out + c
        return out

    def smooth_integral(self) -> np.ndarray:
        return self.smooth.sum(axis=0) * self.df

    def conjugate_grid(self) -> np.ndarray:
        """The lam grid dual to ``f`` (FFT frequencies, ascending)."""
        n = self.n_f
        return 2 * np.pi / (n * self.df) * (np.arange(n) - n // 2)

    def scaled(self, a: complex) -> "AmplitudeDistribution":
        return self._combine(a, None, 0)

    def __add__(self, other: "AmplitudeDistribution") -> "AmplitudeDistribution":
        return self._combine(1.0, other, 1.0)

    def _combine(self, a, other, b) -> "AmplitudeDistribution":
        smooth = a * self.smooth
        sing = [(fk, a * c) for fk, c in self.singular]
        spec = None
        if other is not None:
            if other.f.shape != self.f.shape or not np.allclose(other.f, self.f):
                raise GridMismatchError("distributions live on different f-grids")
            smooth = smooth + b * other.smooth
            sing += [(fk, b * c) for fk, c in other.singular]
        elif self.spectrum is not None:
            spec = Spectrum(
                self.spectrum.lam,
                a * self.spectrum.values,
                None if self.spectrum.beyond is None else abs(a) ** 2 * self.spectrum.beyond,
            )
        return AmplitudeDistribution(self.grid, self.f.copy(), smooth, sing, spec, None, self.weight, dict(self.meta))


def lam_to_f(values: np.ndarray, lam: np.ndarray, f: np.ndarray) -> np.ndarray:
    """(dlam / 2 pi) sum_m values[m] exp(i lam_m f_j) for uniform dual grids, via one FFT.

    ``values`` has the lam axis first; requires dlam * df * n = 2 pi.
    """
    n = lam.size
    dlam = lam[1] - lam[0]
    b = values * np.exp(1j * lam * f[0]).reshape((-1,) + (1,) * (values.ndim - 1))
    phase = np.exp(2j * np.pi * (lam[0] / dlam) * np.arange(n) / n)
    return dlam / (2 * np.pi) * n * np.fft.ifft(b, axis=0) * phase.reshape((-1,) + (1,) * (values.ndim - 1))
