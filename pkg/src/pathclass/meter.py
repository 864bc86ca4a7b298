"""Von Neumann pointer filters: physical amplitudes, probabilities, the Zeno limit and the final mixed state.

A pointer prepared in G(f) and read at f turns a fine-grained amplitude
distribution Phi(x, f) into

    Psi(x, f) = int df' G(f - f') Phi(x, f'),

which is square integrable and normalised whenever G is.  Accuracy is controlled
by scaling a fixed shape, G_alpha(f) = alpha^(1/2) G(alpha f).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erf

from .distribution import AmplitudeDistribution, GridMismatchError, Spectrum, lam_to_f

SHAPES = ("gaussian", "exponential", "boxcar")


@dataclass(frozen=True)
class MeterFilter:
    """Pointer initial state G_alpha(f) = alpha^(1/2) G(alpha f).

    Parameters
    ----------
    shape : {"gaussian", "exponential", "boxcar"}
        ``gaussian``: |G|^2 is a normal density of standard deviation ``width``.
        ``exponential``: G = (2/width)^(1/2) exp(-f/width) for f > 0.
        ``boxcar``: G = (2 width)^(-1/2) on [-width, width].
    width : float
        Reference width of the unscaled shape.
    alpha : float
        Accuracy (scaling) factor, >= 1.
    """

    shape: str = "gaussian"
    width: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown filter shape {self.shape!r}; choose from {SHAPES}")
        if not self.width > 0:
            raise ValueError("filter width must be positive")
        if not self.alpha >= 1:
            raise ValueError("alpha must be >= 1")

    def scaled(self, alpha: float) -> "MeterFilter":
        return replace(self, alpha=self.alpha * alpha)

    @property
    def effective_width(self) -> float:
        return self.width / self.alpha

    def _base(self, s):
        w = self.width
        s = np.asarray(s, dtype=float)
        if self.shape == "gaussian":
            return (2 * np.pi * w**2) ** -0.25 * np.exp(-(s**2) / (4 * w**2))
        if self.shape == "exponential":
            val = np.sqrt(2 / w) * np.exp(-np.clip(s, 0, None) / w)
            return np.where(s > 0, val, np.where(s == 0, 0.5 * val, 0.0))
        inside = np.abs(s) < w
        edge = np.abs(s) == w
        return (2 * w) ** -0.5 * (inside + 0.5 * edge)

    def evaluate(self, f) -> np.ndarray:
        """G_alpha(f) in closed form."""
        return np.sqrt(self.alpha) * self._base(self.alpha * np.asarray(f, dtype=float))

    def __call__(self, f) -> np.ndarray:
        return self.evaluate(f)

    @property
    def integral(self) -> float:
        """C = int G_alpha(f) df (scales as alpha^(-1/2))."""
        w = self.width
        c0 = {
            "gaussian": (2 * np.pi * w**2) ** -0.25 * 2 * np.sqrt(np.pi) * w,
            "exponential": np.sqrt(2 * w),
            "boxcar": np.sqrt(2 * w),
        }[self.shape]
        return c0 / np.sqrt(self.alpha)

    def fourier(self, lam) -> np.ndarray:
        """G^(lam) = int df G_alpha(f) exp(-i lam f)."""
        a, w = self.alpha, self.width
        nu = np.asarray(lam, dtype=float) / a
        if self.shape == "gaussian":
            g = (2 * np.pi * w**2) ** -0.25 * 2 * np.sqrt(np.pi) * w * np.exp(-(w**2) * nu**2)
        elif self.shape == "exponential":
            g = np.sqrt(2 / w) / (1 / w + 1j * nu)
        else:
            g = (2 * w) ** -0.5 * 2 * w * np.sinc(nu * w / np.pi)
        return g / np.sqrt(a)

    def power(self, lam) -> np.ndarray:
        """|G^(lam)|^2."""
        return np.abs(self.fourier(lam)) ** 2

    def cell_integral(self, a, b) -> np.ndarray:
        """int_a^b G_alpha(s) ds in closed form (a <= b elementwise)."""
        al, w = self.alpha, self.width
        a = np.asarray(a, dtype=float) * al
        b = np.asarray(b, dtype=float) * al
        if self.shape == "gaussian":
            amp = (2 * np.pi * w**2) ** -0.25
            val = amp * np.sqrt(np.pi) * w * (erf(b / (2 * w)) - erf(a / (2 * w)))
        elif self.shape == "exponential":
            lo, hi = np.clip(a, 0, None), np.clip(b, 0, None)
            val = np.sqrt(2 / w) * w * (np.exp(-lo / w) - np.exp(-hi / w))
        else:
            lo, hi = np.clip(a, -w, w), np.clip(b, -w, w)
            val = (2 * w) ** -0.5 * (hi - lo)
        return val / np.sqrt(al)

    def breakpoints(self) -> list[float]:
        """Points where G_alpha is not smooth."""
        if self.shape == "exponential":
            return [0.0]
        if self.shape == "boxcar":
            return [-self.effective_width, self.effective_width]
        return []

    def support(self) -> tuple[float, float]:
        """Interval holding G_alpha up to ~exp(-36)."""
        w = self.effective_width
        if self.shape == "gaussian":
            return -12 * w, 12 * w
        if self.shape == "exponential":
            return 0.0, 40 * w
        return -w, w

    def samples(self, n: int, df: float) -> tuple[np.ndarray, float]:
        """G at the circular offsets j df (FFT order), renormalised to unit discrete norm.

        Returns the samples and the renormalisation factor applied.
        """
        off = df * np.fft.fftfreq(n, d=1.0 / n)
        g = self.evaluate(off)
        nrm = np.sqrt(np.sum(np.abs(g) ** 2) * df)
        if nrm == 0:
            raise ValueError("filter is narrower than the f-grid can sample; use the Zeno sweep")
        return g / nrm, 1.0 / nrm


def _wrap(d: np.ndarray, period: float) -> np.ndarray:
    return (d + 0.5 * period) % period - 0.5 * period


def apply_filter(dist: AmplitudeDistribution, filt: MeterFilter, route: str = "auto") -> AmplitudeDistribution:
    """Psi = G * Phi on the distribution's f-grid (circular on the window).

    With a spectrum available the convolution is done in the conjugate domain,
    where the delta terms are already included and Parseval holds exactly.
    Otherwise the smooth part is convolved directly and every delta term adds
    G(f - f_k) c_k(x).
    """
    n, df = dist.n_f, dist.df
    g, scale = filt.samples(n, df)
    if route == "auto":
        route = "spectral" if dist.spectrum is not None else "direct"
    beyond = 0.0
    spec = None
    if route == "spectral":
        if dist.spectrum is None:
            raise ValueError("distribution carries no spectrum")
        lam = dist.spectrum.lam
        if lam.size != n or abs(lam[1] - lam[0] - 2 * np.pi / (n * df)) > 1e-9 * abs(lam[1] - lam[0]):
            raise GridMismatchError("spectrum grid is not dual to the f-grid")
        off = df * np.fft.fftfreq(n, d=1.0 / n)
        Ghat = np.exp(-1j * np.outer(lam, off)) @ g * df
        values = Ghat[:, None] * dist.spectrum.values
        psi = lam_to_f(values, lam, dist.f)
        b = None
        if dist.spectrum.beyond is not None:
            b = np.abs(Ghat) ** 2 * dist.spectrum.beyond
            beyond = float(np.sum(b) * (lam[1] - lam[0]) / (2 * np.pi))
        spec = Spectrum(lam, values, b)
    elif route == "direct":
        psi = np.fft.ifft(np.fft.fft(g)[:, None] * np.fft.fft(dist.smooth, axis=0), axis=0) * df
        period = n * df
        for fk, ck in dist.singular:
            psi += scale * filt.evaluate(_wrap(dist.f - fk, period))[:, None] * ck[None, :]
    else:
        raise ValueError(f"unknown route {route!r}")
    meta = {k: v for k, v in dist.meta.items()}
    meta.update(filtered=True, filter=filt, beyond_mass=beyond)
    return AmplitudeDistribution(dist.grid, dist.f.copy(), psi, [], spec, None, dist.weight, meta)


def _require_filtered(d: AmplitudeDistribution):
    if d.singular:
        raise ValueError("distribution still has delta components; apply a filter first")


def probability_density(filtered: AmplitudeDistribution) -> np.ndarray:
    """P(x, f) = |Psi(x, f)|^2."""
    _require_filtered(filtered)
    return np.abs(filtered.smooth) ** 2


def probability_marginal(filtered: AmplitudeDistribution) -> np.ndarray:
    """P(f) = int dx |Psi(x, f)|^2 over the spatial grid."""
    return probability_density(filtered).sum(axis=1) * filtered.weight


def total_norm(filtered: AmplitudeDistribution) -> float:
    """int dx df |Psi|^2, including weight carried past the grid edge."""
    return float(probability_marginal(filtered).sum() * filtered.df + filtered.meta.get("beyond_mass", 0.0))


def mean_reading(filtered: AmplitudeDistribution) -> float:
    p = probability_marginal(filtered)
    return float(np.sum(p * filtered.f) / np.sum(p))


@dataclass
class MixedState:
    """Density operator rho(x, x') with quadrature weight w: tr rho = sum_x rho_xx w + outside.

    ``outside`` is the trace of the block carried past the spatial grid edge.  It
    is orthogonal to every grid state and positive by construction, so it enters
    the trace but not the grid eigenvalues.
    """

    rho: np.ndarray
    weight: float = 1.0
    outside: float = 0.0

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)) * self.weight + self.outside)

    @property
    def purity(self) -> float:
        return float(np.real(np.sum(np.abs(self.rho) ** 2)) * self.weight**2)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.rho - self.rho.conj().T).max())

    def eigenvalues(self) -> np.ndarray:
        h = 0.5 * (self.rho + self.rho.conj().T)
        return np.linalg.eigvalsh(h * self.weight)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues().min())


def post_measurement_state(filtered: AmplitudeDistribution, trace_tol: float = 1e-6) -> MixedState:
    """rho = int df |Psi(f)><Psi(f)| after the pointer has been read and discarded."""
    _require_filtered(filtered)
    psi = filtered.smooth
    rho = (psi.T @ psi.conj()) * filtered.df
    state = MixedState(rho, filtered.weight, filtered.meta.get("beyond_mass", 0.0))
    if abs(state.trace - 1) > trace_tol:
        raise ValueError(f"trace of the post-measurement state is {state.trace:.9f}; expected 1 within {trace_tol:g}")
    return state


# --- Zeno analysis ------------------------------------------------------------


@dataclass
class ZenoReport:
    alphas: np.ndarray
    smooth_mass: np.ndarray
    singular_mass: dict
    smooth_mass_right: np.ndarray
    slope: float
    slope_right: float
    method: list = field(default_factory=list)
    filter: MeterFilter | None = None

    def rows(self):
        keys = sorted(self.singular_mass)
        for i, a in enumerate(self.alphas):
            yield (a, self.smooth_mass[i], self.smooth_mass_right[i], *[self.singular_mass[k][i] for k in keys], self.method[i])


def fit_slope(alphas, mass) -> float:
    x, y = np.log(np.asarray(alphas)), np.log(np.asarray(mass))
    return float(np.polyfit(x, y, 1)[0])


class _RemainderTable:
    """||Phi~^(lam)||^2 (whole line) on a master lam table, for Parseval quadratures.

    Inside the distribution's V-window the values come from its spectrum; outside
    they are computed from the step solver on sinh-spaced nodes and interpolated
    in asinh(lam).
    """

    def __init__(self, dist: AmplitudeDistribution, lam_max: float, du: float = 0.004):
        solver = dist.meta["solver"]
        t = dist.meta["t"]
        spec = dist.spectrum
        c0 = sum(c for _, c in dist.singular)
        dx = dist.weight
        self.lam_in = spec.lam
        rem = spec.values - c0[None, :]
        self.N_in = np.sum(np.abs(rem) ** 2, axis=1) * dx + (spec.beyond if spec.beyond is not None else 0.0)
        self.N_right_in = np.sum(np.abs(rem[:, dist.grid.right]) ** 2, axis=1) * dx + (
            spec.beyond if spec.beyond is not None else 0.0
        )
        self.edge = min(abs(spec.lam[0]), abs(spec.lam[-1]))
        self.inner = CubicSpline(self.lam_in, self.N_in)
        self.inner_right = CubicSpline(self.lam_in, self.N_right_in)
        u0 = np.arcsinh(0.9 * self.edge)
        u1 = np.arcsinh(max(lam_max, 10 * self.edge))
        u = np.arange(u0, u1 + du, du)
        self.outer = {}
        for sign in (1.0, -1.0):
            lam = sign * np.sinh(u)
            tm = solver.transmitted_mass(lam, t)
            full = solver.remainder_norm(lam, t)
            self.outer[sign] = (CubicSpline(u, full), CubicSpline(u, tm), u1)

    def __call__(self, lam, right_only: bool = False) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        out = np.empty(lam.shape)
        inside = np.abs(lam) <= self.edge
        out[inside] = (self.inner_right if right_only else self.inner)(lam[inside])
        for sign in (1.0, -1.0):
            m = (~inside) & (np.sign(lam) == sign)
            if np.any(m):
                full, tm, u1 = self.outer[sign]
                u = np.minimum(np.arcsinh(np.abs(lam[m])), u1)
                out[m] = (tm if right_only else full)(u)
        return np.clip(out, 0.0, None)


def _parseval_smooth_mass(table: _RemainderTable, filt: MeterFilter, right_only: bool = False, du: float = 0.002) -> float:
    """(2 pi)^-1 int dlam |G^_alpha(lam)|^2 ||Phi~^(lam)||^2.

    Nodes are sinh-spaced in lam so that both the O(1)-wide structure of the
    remainder norm near lam = 0 and the alpha/w-wide filter are resolved.  Far in
    the boxcar tail (|lam| w/alpha > 40) the oscillating sin^2 is replaced by its mean.
    """
    a_w = filt.alpha / filt.width
    reach = {"gaussian": 9.0, "exponential": 1e6, "boxcar": 1e6}[filt.shape]
    u = np.arange(0.0, np.arcsinh(reach * a_w) + du, du)
    total = 0.0
    for sign in (1.0, -1.0):
        lam = sign * np.sinh(u)
        p = filt.power(lam)
        if filt.shape == "boxcar":
            s = np.abs(lam) / a_w
            far = s > 40
            p[far] = 2 * filt.width * 0.5 / (s[far] * filt.width) ** 2 / filt.alpha
        total += np.trapezoid(p * table(lam, right_only) * np.cosh(u), u)
    return float(total / (2 * np.pi))


def _window_mass_semianalytic(dist: AmplitudeDistribution, filt: MeterFilter, half: float, n_gl: int = 24) -> float:
    """P-mass of G_alpha * Phi in |f| <= half for a filter far narrower than the f-cells.

    On x < 0 the filtered field is built per momentum from the closed-form
    reflected kernel; on x >= 0 it uses the cell values of the smooth part.
    """
    from .traversal import reflected_kernel

    solver = dist.meta["solver"]
    t = dist.meta["t"]
    xg, wg = np.polynomial.legendre.leggauss(n_gl)
    bps = sorted({-half, half, *[b for b in filt.breakpoints() if -half < b < half]})
    f_nodes, f_w = [], []
    for a, b in zip(bps[:-1], bps[1:]):
        f_nodes.append(0.5 * (b - a) * xg + 0.5 * (a + b))
        f_w.append(0.5 * (b - a) * wg)
    f_nodes, f_w = np.concatenate(f_nodes), np.concatenate(f_w)

    lo_s, hi_s = filt.support()
    E = solver.E
    rho = np.empty((f_nodes.size, E.size), dtype=complex)
    for i, f in enumerate(f_nodes):
        # tau range where G_alpha(f - tau) is non-negligible, tau >= 0
        t_lo, t_hi = max(0.0, f - hi_s), max(0.0, f - lo_s)
        cuts = sorted({t_lo, t_hi, *[f - b for b in filt.breakpoints() if t_lo < f - b < t_hi]})
        conv = np.zeros(E.size, dtype=complex)
        for a, b in zip(cuts[:-1], cuts[1:]):
            ya, yb = np.sqrt(a), np.sqrt(b)
            y = 0.5 * (yb - ya) * xg + 0.5 * (ya + yb)
            wy = 0.5 * (yb - ya) * wg * 2 * y
            kern = E[None, :] * reflected_kernel(np.outer(y**2, E))
            conv += (wy * filt.evaluate(f - y**2)) @ kern
        rho[i] = conv - filt.evaluate(f)
    inc = solver.incident(t)
    left = (rho * solver.weights(t)[None, :]) @ solver.reflected_basis() + filt.evaluate(f_nodes)[:, None] * inc[None, :]
    mass = np.sum(f_w * np.sum(np.abs(left) ** 2, axis=1)) * dist.weight

    right = dist.grid.right
    tau = dist.f
    lo_c, hi_c = tau - 0.5 * dist.df, tau + 0.5 * dist.df
    near = np.flatnonzero((hi_c > -half + lo_s) & (lo_c < half + hi_s))
    weights = filt.cell_integral(f_nodes[:, None] - hi_c[None, near], f_nodes[:, None] - lo_c[None, near])
    psi_r = weights @ dist.smooth[np.ix_(near, np.flatnonzero(right))]
    mass += np.sum(f_w * np.sum(np.abs(psi_r) ** 2, axis=1)) * dist.weight
    return float(mass)


def _window_mass_grid(filtered: AmplitudeDistribution, centre: float, half: float) -> float:
    p = probability_marginal(filtered)
    lo = filtered.f - 0.5 * filtered.df
    hi = filtered.f + 0.5 * filtered.df
    overlap = np.clip(np.minimum(hi, centre + half) - np.maximum(lo, centre - half), 0, None) / filtered.df
    return float(np.sum(p * overlap) * filtered.df)


def zeno_sweep(
    dist: AmplitudeDistribution,
    filt: MeterFilter,
    alphas,
    window: float = 3.0,
    grid_resolution: float = 10.0,
) -> ZenoReport:
    """Smooth-part and singular-bin probability masses as the filter is sharpened.

    For each alpha the smooth mass int dx df |G_alpha * Phi~|^2 is computed by
    Parseval from ||Phi~^(lam)||^2 over the whole line, and the singular-bin mass
    is the P-mass in [f_k - window w/alpha, f_k + window w/alpha].  Bin masses use
    the f-grid when it resolves the filter (w/alpha >= grid_resolution df) and the
    per-momentum closed form otherwise.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.size < 2 or np.any(np.diff(alphas) <= 0):
        raise ValueError("alphas must be increasing")
    if np.log10(alphas[-1] / alphas[0]) < 3 - 1e-9:
        raise ValueError("the alpha sweep must span at least three decades")
    if "solver" not in dist.meta:
        raise ValueError("zeno_sweep needs a traversal distribution")
    lam_max = 1e6 * alphas[-1] * filt.alpha / filt.width
    table = _RemainderTable(dist, lam_max)
    smooth, smooth_r, method = [], [], []
    sing = {fk: [] for fk, _ in dist.singular}
    for a in alphas:
        fa = filt.scaled(a)
        smooth.append(_parseval_smooth_mass(table, fa))
        smooth_r.append(_parseval_smooth_mass(table, fa, right_only=True))
        half = window * fa.effective_width
        if fa.effective_width >= grid_resolution * dist.df:
            filtered = apply_filter(dist, fa)
            for fk in sing:
                sing[fk].append(_window_mass_grid(filtered, fk, half))
            method.append("grid")
        else:
            for fk in sing:
                if fk != 0.0:
                    raise NotImplementedError("closed-form bin mass is implemented for the tau = 0 term")
                sing[fk].append(_window_mass_semianalytic(dist, fa, half))
            method.append("closed-form")
    smooth = np.array(smooth)
    smooth_r = np.array(smooth_r)
    return ZenoReport(
        alphas=alphas,
        smooth_mass=smooth,
        singular_mass={k: np.array(v) for k, v in sing.items()},
        smooth_mass_right=smooth_r,
        slope=fit_slope(alphas, smooth),
        slope_right=fit_slope(alphas, smooth_r),
        method=method,
        filter=filt,
    )
