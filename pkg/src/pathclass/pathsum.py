"""Restricted path sums for finite-dimensional systems.

A path is a sequence of basis labels x_0 .. x_m at the insertion times s_0 .. s_m.
Its amplitude is

    A[path] = <psi_F|U(t - s_m)|x_m> <x_m|U(s_m - s_{m-1})|x_{m-1}> ... <x_0|U(s_0)|psi_I>,

and the functional is F[path] = sum_i w_i a(x_i).  For a constant coupling beta over
K slices, s_i = i eps and w_i = beta eps for i < K (left Riemann sum, w_K = 0); for
pulses, s_i are the pulse times and w_i the pulse weights.  Brute-force enumeration
is the oracle for the lambda-grid evolution, where the pointer translation is
diagonal: every lambda evolves under H + lambda beta(t) A.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .distribution import AmplitudeDistribution, Spectrum, lam_to_f
from .meter import MeterFilter

ENUMERATION_CAP = 10**7


class EnumerationCapError(ValueError):
    pass


class BinRangeError(ValueError):
    pass


class AliasingError(ValueError):
    pass


@dataclass
class DiscreteSystem:
    """Finite-dimensional system with a diagonal measured quantity.

    Parameters
    ----------
    H : (dim, dim) array
        Hermitian Hamiltonian.
    a : (dim,) array
        Values a(x) of the measured quantity; A = sum_x |x> a(x) <x|.
    beta : float or sequence of (time, weight)
        Constant coupling over [0, t], or delta pulses beta(t) = sum w_j delta(t - t_j).
    """

    H: np.ndarray
    a: np.ndarray
    beta: float | Sequence = 1.0

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=complex)
        self.a = np.asarray(self.a, dtype=float)
        if self.H.ndim != 2 or self.H.shape[0] != self.H.shape[1]:
            raise ValueError("H must be square")
        if not 1 <= self.dim <= 6:
            raise ValueError("dimension must be between 1 and 6")
        if np.abs(self.H - self.H.conj().T).max() > 1e-12:
            raise ValueError("H is not Hermitian within 1e-12")
        if self.a.shape != (self.dim,):
            raise ValueError("a must have one real value per basis state")
        if not np.isscalar(self.beta):
            pulses = sorted((float(s), float(w)) for s, w in self.beta)
            if any(s < 0 for s, _ in pulses):
                raise ValueError("pulse times must be >= 0")
            self.beta = pulses

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def pulsed(self) -> bool:
        return not np.isscalar(self.beta)

    def propagator(self, s: float) -> np.ndarray:
        return expm(-1j * self.H * s)

    def insertions(self, t: float, K: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Insertion times and weights (s_i, w_i) for a path on [0, t]."""
        if self.pulsed:
            s = np.array([p[0] for p in self.beta])
            w = np.array([p[1] for p in self.beta])
            if s.size and s[-1] > t:
                raise ValueError("pulse after the final time")
            return s, w
        if K is None or K < 1:
            raise ValueError("constant coupling needs a slice count K >= 1")
        eps = t / K
        w = np.full(K + 1, self.beta * eps)
        w[-1] = 0.0
        return eps * np.arange(K + 1), w

    def f_range(self, t: float, K: int | None = None) -> tuple[float, float]:
        """Smallest and largest attainable F."""
        if self.pulsed or K is not None:
            _, w = self.insertions(t, K)
        else:
            w = np.array([self.beta * t])
        lo = np.minimum(w * self.a.min(), w * self.a.max()).sum()
        hi = np.maximum(w * self.a.min(), w * self.a.max()).sum()
        return float(lo), float(hi)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (z + z.conj().T)


# ---------------------------------------------------------------- enumeration


@dataclass
class PathRecord:
    labels: tuple
    amplitude: complex
    f_value: float


@dataclass
class PathTable:
    """All paths at once: labels (n_paths, m + 1), amplitudes and F values."""

    labels: np.ndarray
    amplitude: np.ndarray
    f_value: np.ndarray

    def records(self):
        for lab, amp, f in zip(self.labels, self.amplitude, self.f_value):
            yield PathRecord(tuple(int(v) for v in lab), complex(amp), float(f))


def enumerate_paths(sys: DiscreteSystem, psi_I, psi_F, t: float, K: int | None = None) -> PathTable:
    """Every path amplitude as an explicit ordered product of matrix elements."""
    psi_I = np.asarray(psi_I, dtype=complex)
    psi_F = np.asarray(psi_F, dtype=complex)
    s, w = sys.insertions(t, K)
    m = s.size
    d = sys.dim
    if m == 0:
        amp = np.vdot(psi_F, sys.propagator(t) @ psi_I)
        return PathTable(np.zeros((1, 0), dtype=np.int8), np.array([amp]), np.zeros(1))
    if float(d) ** m > ENUMERATION_CAP:
        raise EnumerationCapError(f"{d}^{m} paths exceed the cap of {ENUMERATION_CAP}")
    first = sys.propagator(s[0]) @ psi_I
    last = np.conj(psi_F) @ sys.propagator(t - s[-1])
    steps = [sys.propagator(s[i] - s[i - 1]) for i in range(1, m)]
    labels = np.indices((d,) * m, dtype=np.int8).reshape(m, -1).T
    amp = first[labels[:, 0]].copy()
    for i, U in enumerate(steps, start=1):
        amp *= U[labels[:, i], labels[:, i - 1]]
    amp *= last[labels[:, -1]]
    f = sys.a[labels] @ w
    return PathTable(labels, amp, f)


def enumerate_restricted_amplitude(sys: DiscreteSystem, psi_I, psi_F, t: float, K: int | None, f_bins) -> np.ndarray:
    """Path amplitudes summed per bin of F[path]; bins are [e_i, e_{i+1}), last one closed."""
    edges = np.asarray(f_bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise BinRangeError("f_bins must be increasing edges")
    lo, hi = sys.f_range(t, K)
    if lo < edges[0] or hi > edges[-1]:
        raise BinRangeError(f"bins [{edges[0]:g}, {edges[-1]:g}] do not cover attainable F in [{lo:g}, {hi:g}]")
    table = enumerate_paths(sys, psi_I, psi_F, t, K)
    idx = np.clip(np.searchsorted(edges, table.f_value, side="right") - 1, 0, edges.size - 2)
    out = np.zeros(edges.size - 1, dtype=complex)
    np.add.at(out, idx, table.amplitude)
    return out


# ---------------------------------------------------------------- lambda evolution


def lambda_grid(n: int, df: float) -> np.ndarray:
    """Uniform conjugate grid with spacing 2 pi / (n df), containing 0."""
    return 2 * np.pi / (n * df) * (np.arange(n) - n // 2)


def _characteristic(sys: DiscreteSystem, psi_I: np.ndarray, t: float, lam: np.ndarray, K: int | None) -> np.ndarray:
    """Phi^(lam) = int df exp(-i lam f) Phi(x, t | f), shape (n_lam, dim)."""
    lam = np.asarray(lam)
    if sys.pulsed or K is not None:
        s, w = sys.insertions(t, K)
        state = np.broadcast_to(psi_I, (lam.size, sys.dim)).astype(complex)
        prev = 0.0
        cache = {}
        for si, wi in zip(s, w):
            dt = si - prev
            key = round(dt, 14)
            if key not in cache:
                cache[key] = sys.propagator(dt)
            state = state @ cache[key].T
            state = state * np.exp(-1j * np.outer(lam * wi, sys.a))
            prev = si
        return state @ sys.propagator(t - prev).T
    # continuous coupling: eigen-decompose H + lam beta A for every lam at once
    Hl = sys.H[None, :, :] + (lam * sys.beta)[:, None, None] * np.diag(sys.a)[None, :, :]
    e, v = np.linalg.eigh(Hl)
    c = np.einsum("lji,j->li", v.conj(), psi_I)
    return np.einsum("lij,lj->li", v, np.exp(-1j * e * t) * c)


def meter_evolve(
    sys: DiscreteSystem,
    psi_I,
    t: float,
    lam,
    K: int | None = None,
    f_start: float | None = None,
) -> AmplitudeDistribution:
    """Phi(x, t | f) on the f-grid dual to ``lam``, from the lambda-diagonal evolution.

    The initial pointer delta(f) is a constant spectrum.  With ``K`` the coupling
    is applied on the same slice grid as the enumeration (identical Trotter
    factorisation); without it the continuous coupling is integrated exactly.
    The f-window starts at ``f_start`` (default: just below the attainable range).
    """
    psi_I = np.asarray(psi_I, dtype=complex)
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    dlam = lam[1] - lam[0]
    if not np.allclose(np.diff(lam), dlam, rtol=1e-9, atol=0):
        raise ValueError("lambda grid must be uniform")
    if not np.any(np.abs(lam) < 1e-9 * dlam):
        raise ValueError("lambda grid must contain 0")
    df = 2 * np.pi / (n * dlam)
    lo, hi = sys.f_range(t, K)
    if f_start is None:
        f_start = lo - df * np.floor(0.5 * (n * df - (hi - lo)) / df)
    f = f_start + df * np.arange(n)
    if lo < f[0] - 0.5 * df - 1e-12 or hi > f[-1] + 0.5 * df + 1e-12:
        raise AliasingError(f"F range [{lo:g}, {hi:g}] exceeds the f-window [{f[0]:g}, {f[-1]:g}]")
    values = _characteristic(sys, psi_I, t, lam, K)
    smooth = lam_to_f(values, lam, f)
    return AmplitudeDistribution(
        None,
        f,
        smooth,
        spectrum=Spectrum(lam, values),
        characteristic=lambda l: _characteristic(sys, psi_I, t, np.atleast_1d(l), K),
        meta={"kind": "pathsum", "t": t, "K": K, "system": sys},
    )


def lattice_amplitudes(dist: AmplitudeDistribution) -> np.ndarray:
    """Per-cell amplitudes Phi df, the quantity that bins compare against."""
    return dist.smooth * dist.df


# ---------------------------------------------------------------- Zeno


@dataclass
class DiscreteZenoReport:
    alphas: np.ndarray
    eigenvalues: np.ndarray
    window_mass: np.ndarray  # (n_alpha, n_eigenvalues)
    total: np.ndarray
    meta: dict = field(default_factory=dict)


def filtered_reading(
    sys: DiscreteSystem,
    psi_I,
    t: float,
    filt: MeterFilter,
    oversample: float = 4.0,
    cutoff: float = 8.0,
) -> tuple[np.ndarray, np.ndarray]:
    """P(f) = sum_x |(G * Phi)(x, f)|^2 for continuous coupling, on a fine f-grid.

    The lambda range is set by where |G^| has decayed (|lam| < cutoff alpha / width)
    and the f-window covers the attainable range plus 10 filter widths.
    """
    if sys.pulsed:
        raise ValueError("filtered_reading needs a constant coupling")
    w = filt.effective_width
    lo, hi = sys.f_range(t)
    L = (hi - lo) + 20 * max(w, 1e-3)
    lam_max = oversample * cutoff / w
    dlam = 2 * np.pi / L
    n = 2 * int(np.ceil(lam_max / dlam))
    lam = dlam * (np.arange(n) - n // 2)
    f = lo - 10 * max(w, 1e-3) + (2 * np.pi / (n * dlam)) * np.arange(n)
    vals = filt.fourier(lam)[:, None] * _characteristic(sys, np.asarray(psi_I, dtype=complex), t, lam, None)
    psi = lam_to_f(vals, lam, f)
    return f, np.sum(np.abs(psi) ** 2, axis=1)


def finite_dim_zeno(sys: DiscreteSystem, psi_I, t: float, filt: MeterFilter, alphas, window: float = 3.0) -> DiscreteZenoReport:
    """Reading mass within +-window * width / alpha of each attainable pure reading a_k beta t."""
    if sys.pulsed:
        raise ValueError("the Zeno sweep needs a constant coupling (time-average measurement)")
    alphas = np.asarray(alphas, dtype=float)
    eig = np.unique(sys.a) * sys.beta * t
    mass = np.zeros((alphas.size, eig.size))
    total = np.zeros(alphas.size)
    for i, al in enumerate(alphas):
        fi = filt.scaled(al)
        f, p = filtered_reading(sys, psi_I, t, fi)
        df = f[1] - f[0]
        half = window * fi.effective_width
        total[i] = p.sum() * df
        for j, e in enumerate(eig):
            mass[i, j] = p[np.abs(f - e) <= half].sum() * df
    return DiscreteZenoReport(alphas, eig, mass, total, {"filter": filt, "window": window})
