"""First-crossing-time amplitudes for entry into x >= 0.

For a packet starting on x < 0 the amplitude to enter x >= 0 for the first time
at tau splits into the never-entered term psi_inf(x, t) delta(tau - t) and the
boundary-flux density

    Phi_c(x, t | tau) = -(i / 2M) K(x, 0, t - tau) d_x psi_inf(0-, tau),   0 < tau < t,

with psi_inf the hard-wall packet and d_x psi_inf(0-, tau) = 2 d_x psi_0(0, tau) by
images.  The prefactor sign is the one for which the tau-integral of Phi
reproduces the free packet.  The density is stored as exact tau-cell averages,
since the time integral of K(x, 0, s) exp(i E s) has a closed form in error
functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .lattice import SpatialGrid, WaveFunction, check_left_confined, free_kernel, free_propagate, wall_propagate
from .meter import MeterFilter
from .scattering import StepSolver


# ---------------------------------------------------------------- kernels


def free_kernel_dx(x, xp, t: float, M: float = 1.0):
    """d/dx K(x, x', t) = i M (x - x') / t K(x, x', t)."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    return 1j * M * (x - xp) / t * free_kernel(x, xp, t, M)


def wall_kernel(x, xp, t: float, M: float = 1.0):
    """Hard-wall propagator K_inf by images; zero unless x <= 0 and x' <= 0."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    val = free_kernel(x, xp, t, M) - free_kernel(x, -xp, t, M)
    return np.where((x <= 0) & (xp <= 0), val, 0.0)


def wall_kernel_dx(x, xp, t: float, M: float = 1.0):
    """d/dx K_inf(x, x', t) on the closed left half-line (left derivative at x = 0)."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    val = free_kernel_dx(x, xp, t, M) - free_kernel_dx(x, -xp, t, M)
    return np.where((x <= 0) & (xp <= 0), val, 0.0)


@dataclass
class KernelTerms:
    """Components of K(x, x', t | tau).

    ``at_zero`` multiplies delta(tau) (paths that start inside x >= 0),
    ``at_t`` multiplies delta(tau - t) (paths that never enter) and ``smooth``
    is the density at the requested tau values.
    """

    at_zero: np.ndarray
    at_t: np.ndarray
    smooth: np.ndarray


def first_crossing_kernel(x, xp, t: float, tau, M: float = 1.0) -> KernelTerms:
    """First-crossing propagator from x' to x, resolved by the first entry time tau.

    ``x`` and ``xp`` broadcast against each other; ``tau`` adds a leading axis to
    ``smooth``.  Interior tau only: the endpoints carry the delta terms.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau <= 0) or np.any(tau >= t):
        raise ValueError("tau must lie strictly inside (0, t); the endpoints are delta terms")
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    at_zero = np.where(xp >= 0, free_kernel(x, xp, t, M), 0.0)
    at_t = wall_kernel(x, xp, t, M)
    shape = (-1,) + (1,) * np.broadcast(x, xp).ndim
    tt = tau.reshape(shape)
    smooth = -0.5j / M * free_kernel(x, 0.0, t - tt, M) * wall_kernel_dx(0.0, xp, tt, M)
    return KernelTerms(at_zero, at_t, smooth)


def _time_antiderivative(s: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """F(s) with dF/ds = s^(-1/2) exp(i (a / s + b s)), for a >= 0, b > 0.

    Written with u, v = sqrt(b s) -/+ sqrt(a / s) so each piece is a Fresnel integral.
    """
    rb = np.sqrt(b)
    ra = np.sqrt(a)
    ph = np.exp(2j * ra * rb)
    rot = np.exp(-0.25j * np.pi)
    pref = 0.5 * np.sqrt(np.pi) * np.exp(0.25j * np.pi) / rb
    with np.errstate(divide="ignore", invalid="ignore"):
        rs = np.sqrt(s)
        u = rb * rs - np.where(s > 0, ra / rs, np.where(a > 0, np.inf, 0.0))
        v = rb * rs + np.where(s > 0, ra / rs, np.where(a > 0, np.inf, 0.0))
    eu = np.where(np.isinf(u), np.sign(u), erf(rot * np.where(np.isinf(u), 0.0, u)))
    ev = np.where(np.isinf(v), np.sign(v), erf(rot * np.where(np.isinf(v), 0.0, v)))
    return pref * (ph * eu + ev / ph)


# ---------------------------------------------------------------- distribution


@dataclass
class CrossingDecomposition:
    """Phi(x, t | tau) = not_crossed(x) delta(tau - t) + crossing_density(x, tau).

    ``crossing_density`` holds averages over the cells bounded by ``tau_edges``.
    """

    grid: SpatialGrid
    t: float
    tau_edges: np.ndarray
    not_crossed: np.ndarray
    crossing_density: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def tau(self) -> np.ndarray:
        return 0.5 * (self.tau_edges[1:] + self.tau_edges[:-1])

    @property
    def dtau(self) -> np.ndarray:
        return np.diff(self.tau_edges)

    def crossed(self) -> np.ndarray:
        """int_0^t crossing_density dtau."""
        return self.dtau @ self.crossing_density

    def marginal(self) -> np.ndarray:
        return self.not_crossed + self.crossed()

    def crossed_norm(self) -> float:
        """|| int crossing_density dtau ||^2, the weight that has entered x >= 0."""
        return float(np.sum(np.abs(self.crossed()) ** 2) * self.grid.dx)


def _tau_edges(tau_grid, t: float) -> np.ndarray:
    if np.isscalar(tau_grid):
        n = int(tau_grid)
        if n < 1:
            raise ValueError("need at least one tau cell")
        return np.linspace(0.0, t, n + 1)
    edges = np.asarray(tau_grid, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("tau edges must be strictly increasing")
    if edges[0] < 0 or edges[-1] > t * (1 + 1e-12):
        raise ValueError("tau edges must lie in [0, t]")
    return edges


def wall_slope(psi_I: WaveFunction, tau, solver: StepSolver | None = None) -> np.ndarray:
    """d_x psi_inf(0-, tau) = 2 d_x psi_0(0, tau), by spectral differentiation."""
    solver = StepSolver(psi_I) if solver is None else solver
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    w = solver.A * psi_I.grid.dk * 2j * solver.k
    return np.exp(-1j * np.outer(tau, solver.E)) @ w


def first_crossing_distribution(psi_I: WaveFunction, t: float, tau_grid=200, chunk: int = 64) -> CrossingDecomposition:
    """First-crossing decomposition of the packet at time t.

    Parameters
    ----------
    psi_I : WaveFunction
        Packet supported on x < 0.
    t : float
        Final time.
    tau_grid : int or array
        Number of uniform cells on [0, t], or explicit cell edges inside [0, t].
    """
    if not t > 0:
        raise ValueError("t must be positive")
    check_left_confined(psi_I)
    g = psi_I.grid
    M = psi_I.mass
    edges = _tau_edges(tau_grid, t)
    solver = StepSolver(psi_I)
    # d_x psi_inf(0-, tau) = sum_k c_k exp(-i E_k tau)
    c = solver.A * g.dk * 2j * solver.k
    E = solver.E
    pref = -0.5j / M * np.sqrt(M / (2 * np.pi)) * np.exp(-0.25j * np.pi)
    # the density depends on x only through x^2
    ax, inv = np.unique(np.abs(g.x), return_inverse=True)
    s = t - edges
    coef = c * np.exp(-1j * E * t)
    dens = np.empty((edges.size - 1, ax.size), dtype=complex)
    for lo in range(0, ax.size, chunk):
        a = 0.5 * M * ax[lo : lo + chunk] ** 2
        F = _time_antiderivative(s[:, None, None], a[None, :, None], E[None, None, :])
        cells = F[:-1] - F[1:]
        dens[:, lo : lo + chunk] = cells @ coef
    dens *= pref / np.diff(edges)[:, None]
    return CrossingDecomposition(
        g,
        t,
        edges,
        wall_propagate(psi_I, t, warn=False).amp,
        dens[:, inv],
        {"solver": solver, "mass": M},
    )


def completeness_residual(dec: CrossingDecomposition, psi_I: WaveFunction) -> float:
    """Sup-norm of not_crossed + int crossing_density dtau - psi_0(x, t)."""
    psi0 = free_propagate(psi_I, dec.t, warn=False).amp
    return float(np.abs(dec.marginal() - psi0).max())


# ---------------------------------------------------------------- norm leak


def _gauss_autocorrelation(width: float):
    """R(a) = int G(f) G(f - a) df for the normalised Gaussian, with R' and R''."""
    c = 1.0 / (8 * width**2)

    def R1(a):
        return -2 * c * a * np.exp(-c * a**2)

    def R2(a):
        return (4 * c**2 * a**2 - 2 * c) * np.exp(-c * a**2)

    return R1, R2


def _interaction_states(psi_I: WaveFunction, times: np.ndarray) -> np.ndarray:
    """Momentum-space exp(iHt) psi_inf(t) for each t, rows normalised for plain dot products."""
    g = psi_I.grid
    phase = 0.5 * g.k**2 / psi_I.mass
    out = np.empty((times.size, g.n_x), dtype=complex)
    for i, ti in enumerate(times):
        w = wall_propagate(psi_I, ti, warn=False).amp if ti > 0 else psi_I.amp
        out[i] = np.exp(1j * phase * ti) * np.fft.fft(w)
    return out * np.sqrt(g.dx / g.n_x)


def _panel_nodes(t: float, panel: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    n = max(1, int(np.ceil(t / panel)))
    xg, wg = np.polynomial.legendre.leggauss(order)
    a = np.linspace(0.0, t, n + 1)
    h = 0.5 * np.diff(a)
    nodes = (0.5 * (a[1:] + a[:-1])[:, None] + h[:, None] * xg).ravel()
    weights = (h[:, None] * wg).ravel()
    return nodes, weights


def norm_leak_rate(
    psi_I: WaveFunction,
    filt: MeterFilter,
    t_grid,
    coupled: bool = True,
    panel: float = 0.1,
    order: int = 8,
) -> np.ndarray:
    """dP/dt for the pointer-plus-particle state Psi = G * Phi, one value per t.

    Psi obeys i d_t Psi = H Psi - i G'(tau - t) psi_inf(t), so

        dP/dt = -2 Re int dtau G'(tau - t) <Psi(t | tau) | psi_inf(t)>.

    Writing Psi in the interaction picture, Psi = exp(-iHt)[G(tau) psi_I
    - int_0^t dt' G'(tau - t') phi(t')] with phi(t') = exp(iHt') psi_inf(t'),
    the tau-integrals reduce to derivatives of the Gaussian autocorrelation R and

        dP/dt = 2 Re[R'(t) <psi_I|phi(t)> - int_0^t R''(t - t') <phi(t')|phi(t)> dt'].

    ``coupled=False`` drops the source term (a decoupled pointer), for which the
    rate vanishes identically.
    """
    if filt.shape != "gaussian":
        raise ValueError("norm_leak_rate needs a Gaussian filter (closed-form G')")
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t_grid <= 0):
        raise ValueError("t_grid must be positive (t = 0 is excluded)")
    check_left_confined(psi_I)
    if not coupled:
        return np.zeros(t_grid.size)
    R1, R2 = _gauss_autocorrelation(filt.effective_width)
    psi_hat = _interaction_states(psi_I, np.array([0.0]))[0]
    out = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        nodes, weights = _panel_nodes(t, panel, order)
        phi = _interaction_states(psi_I, np.concatenate([nodes, [t]]))
        phi_t = phi[-1]
        gram = np.conj(phi[:-1]) @ phi_t
        val = R1(t) * np.vdot(psi_hat, phi_t) - np.sum(weights * R2(t - nodes) * gram)
        out[i] = 2 * val.real
    return out


def pointer_norm(psi_I: WaveFunction, filt: MeterFilter, t: float, panel: float = 0.1, order: int = 8) -> float:
    """P(t) = int dx dtau |Psi|^2 from the same interaction-picture representation.

    P = 1 + 2 Re int_0^t R'(t') <psi_I|phi(t')> dt' - int int R''(t'' - t') <phi(t')|phi(t'')> dt' dt''.
    """
    if filt.shape != "gaussian":
        raise ValueError("pointer_norm needs a Gaussian filter")
    R1, R2 = _gauss_autocorrelation(filt.effective_width)
    nodes, weights = _panel_nodes(t, panel, order)
    phi = _interaction_states(psi_I, np.concatenate([[0.0], nodes]))
    psi_hat, phi = phi[0], phi[1:]
    lin = np.sum(weights * R1(nodes) * (np.conj(psi_hat) @ phi.T))
    gram = np.conj(phi) @ phi.T
    quad = weights @ (R2(nodes[None, :] - nodes[:, None]) * gram) @ weights
    return float(1 + 2 * lin.real - quad.real)


def filtered_pointer_norm(dec: CrossingDecomposition, filt: MeterFilter, n_tau: int = 801, margin: float = 8.0) -> float:
    """P(t) computed directly from a crossing decomposition filtered by a Gaussian G.

    Psi(x, tau) = G(tau - t) not_crossed(x) + sum_cells [int_cell G(tau - tau') dtau'] density(x, cell)/dtau,
    integrated over tau with the trapezoid rule on [-margin w, t + margin w].
    """
    w = filt.effective_width
    tau = np.linspace(-margin * w, dec.t + margin * w, n_tau)
    dt = tau[1] - tau[0]
    e = dec.tau_edges
    # int_cell G(tau - tau') dtau' = cell_integral(tau - e_hi, tau - e_lo)
    cells = filt.cell_integral(tau[:, None] - e[None, 1:], tau[:, None] - e[None, :-1])
    psi = np.outer(filt.evaluate(tau - dec.t), dec.not_crossed) + cells @ dec.crossing_density
    dens = np.sum(np.abs(psi) ** 2, axis=1) * dec.grid.dx
    return float(np.trapezoid(dens, dx=dt))
