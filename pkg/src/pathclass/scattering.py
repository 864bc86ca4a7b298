"""Potential-step amplitudes and evolution of a left-incident packet under p^2/2M + V theta(x).

``step_evolve`` expands the packet in left-incident scattering states

    x < 0:  exp(ikx) + R exp(-ikx),      x >= 0:  T exp(iqx),   q = sqrt(2M(E - V)),

which is exact (not only asymptotic) for a packet with no support on x >= 0 and no
negative-momentum content.  ``step_evolve_exact`` is an independent Crank-Nicolson
stepper on the grid, used as its oracle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import WaveFunction, check_left_confined, to_momentum


class SeparationWarning(UserWarning):
    """Transmitted and reflected packets are not yet well separated."""


class NormDriftError(RuntimeError):
    pass


def _branch_sqrt(z):
    """Principal square root with the branch Im >= 0."""
    s = np.sqrt(np.asarray(z, dtype=complex))
    return np.where(s.imag < 0, -s, s)


def step_T(k, V, M: float = 1.0):
    """Transmission amplitude T(k, V) = 2 / (1 + (1 - V/E)^(1/2)), E = k^2 / 2M.

    ``V`` may be complex (an optical potential -iU gives V = -iU).
    """
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("step_T needs k > 0")
    E = k**2 / (2 * M)
    return 2.0 / (1.0 + _branch_sqrt(1.0 - np.asarray(V) / E))


def step_q(k, V, M: float = 1.0):
    """Wavenumber of the transmitted wave, k (1 - V/E)^(1/2) on the same branch as step_T."""
    k = np.asarray(k, dtype=float)
    E = k**2 / (2 * M)
    return k * _branch_sqrt(1.0 - np.asarray(V) / E)


@dataclass(frozen=True)
class StepAmplitudes:
    k: float
    V: float
    T: complex
    R: complex
    q: complex

    @classmethod
    def compute(cls, k: float, V: float, M: float = 1.0) -> "StepAmplitudes":
        T = complex(step_T(k, V, M))
        return cls(k, V, T, T - 1.0, complex(step_q(k, V, M)))

    def flux_balance(self) -> float:
        """|T|^2 Re(q)/k + |R|^2, equal to 1 for a real step."""
        return abs(self.T) ** 2 * self.q.real / self.k + abs(self.R) ** 2


class StepSolver:
    """Scattering-state expansion of one left-confined packet, reusable over many V.

    Momentum integrals run over the band where the packet amplitude is above
    ``rel_cutoff`` of its peak (a packet with k0 sigma >= 4 has no usable k < 0
    content).  The FFT momentum grid is used whenever the integrand is smooth.
    When a real V puts the threshold k_c = sqrt(2MV) inside the band, T(k) has a
    square-root branch point there and the uniform sum converges slowly, so those
    V use Gauss-Legendre panels in s = |k - k_c|^(1/2) instead, with A(k)
    evaluated directly from the grid values.
    """

    panel_phase = 20.0
    panel_order = 24

    def __init__(self, psi_I: WaveFunction, rel_cutoff: float = 1e-14):
        check_left_confined(psi_I)
        self.psi_I = psi_I
        g = psi_I.grid
        mom = to_momentum(psi_I)
        mag = np.abs(mom.A)
        neg = np.sum(mag[mom.k <= 0] ** 2) * g.dk * 2 * np.pi
        if neg > 1e-12:
            warnings.warn(f"packet carries {neg:.2e} of its mass at k <= 0; it is dropped", stacklevel=2)
        order = np.argsort(mom.k)
        ks, As = mom.k[order], mom.A[order]
        above = np.abs(As) > rel_cutoff * mag.max()
        i = int(np.argmax(np.abs(As)))
        lo, hi = i, i
        while lo > 0 and above[lo - 1] and ks[lo - 1] > 0:
            lo -= 1
        while hi < ks.size - 1 and above[hi + 1]:
            hi += 1
        self.k = ks[lo : hi + 1]
        self.A = As[lo : hi + 1]
        self.M = psi_I.mass
        self.E = self.k**2 / (2 * self.M)
        x = g.x
        self.left = x < 0
        self.x_left = x[self.left]
        self.n_right = int(np.count_nonzero(~self.left))
        self._plane_left = np.exp(1j * self.k[:, None] * self.x_left[None, :])

    @property
    def band(self) -> tuple[float, float]:
        return float(self.k[0]), float(self.k[-1])

    def weights(self, t: float) -> np.ndarray:
        return self.A * np.exp(-1j * self.E * t) * self.psi_I.grid.dk

    def incident(self, t: float) -> np.ndarray:
        """Free incident wave on x < 0 (the V-independent part of the left region)."""
        return self.weights(t) @ self._plane_left

    def reflected_basis(self) -> np.ndarray:
        """exp(-ikx) on x < 0, shape (n_k, n_left)."""
        return np.conj(self._plane_left)

    def amplitude_at(self, k: np.ndarray) -> np.ndarray:
        """A(k) at arbitrary k by direct summation over the grid."""
        g = self.psi_I.grid
        sup = np.abs(self.psi_I.amp) > 0
        return g.dx / (2 * np.pi) * np.exp(-1j * np.outer(k, g.x[sup])) @ self.psi_I.amp[sup]

    def needs_panels(self, V) -> bool:
        if np.iscomplexobj(V) and np.imag(V) != 0:
            return False
        V = float(np.real(V))
        if V <= 0:
            return False
        kc = np.sqrt(2 * self.M * V)
        k_lo, k_hi = self.band
        return k_lo - 0.5 < kc < k_hi + 0.5

    def threshold_nodes(self, V: float) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes and weights on the band, clustered at the threshold."""
        k_lo, k_hi = self.band
        kc = np.sqrt(2 * self.M * float(np.real(V)))
        g = self.psi_I.grid
        reach = max(abs(g.x_min), abs(g.x_max))
        xg, wg = np.polynomial.legendre.leggauss(self.panel_order)
        nodes, weights = [], []
        for a, b in ((k_lo, min(kc, k_hi)), (max(kc, k_lo), k_hi)):
            if b <= a:
                continue
            # k = kc -/+ s^2; panels uniform in s, sized by the phase swept at the grid edge
            d = np.sort([abs(a - kc), abs(b - kc)])
            q_span = np.ptp(np.abs(step_q(np.array([a, b]), V, self.M)))
            n_p = max(1, int(np.ceil(reach * max(b - a, q_span) / self.panel_phase)))
            edges = np.linspace(np.sqrt(d[0]), np.sqrt(d[1]), n_p + 1)
            for s0, s1 in zip(edges[:-1], edges[1:]):
                s = 0.5 * (s1 - s0) * xg + 0.5 * (s1 + s0)
                w = 0.5 * (s1 - s0) * wg * 2 * s
                nodes.append(kc + s**2 if a >= kc else kc - s**2)
                weights.append(w)
        return np.concatenate(nodes), np.concatenate(weights)

    def evolve(self, V, t: float, parts: bool = False):
        """psi_V(x, t) for each V in ``V`` (scalar or 1-D, complex allowed).

        Returns an array of shape (n_V, n_x), or with ``parts=True`` the tuple
        (incident, reflected, transmitted) on their own regions.
        """
        V = np.atleast_1d(np.asarray(V))
        inc = self.incident(t)
        refl = np.empty((V.size, self.x_left.size), dtype=complex)
        trans = np.empty((V.size, self.n_right), dtype=complex)
        special = np.array([self.needs_panels(v) for v in V], dtype=bool)
        reg = np.flatnonzero(~special)
        if reg.size:
            w = self.weights(t)
            Vr = V[reg][:, None]
            T = step_T(self.k[None, :], Vr, self.M)
            refl[reg] = ((T - 1.0) * w) @ self.reflected_basis()
            trans[reg] = self._transmitted(w[None, :] * T, step_q(self.k[None, :], Vr, self.M))
        for i in np.flatnonzero(special):
            k, wq = self.threshold_nodes(V[i])
            w = self.amplitude_at(k) * np.exp(-0.5j * k**2 * t / self.M) * wq
            T = step_T(k, V[i], self.M)
            refl[i] = ((T - 1.0) * w) @ np.exp(-1j * np.outer(k, self.x_left))
            trans[i] = self._transmitted((w * T)[None, :], step_q(k, V[i], self.M)[None, :])[0]
        if parts:
            return inc, refl, trans
        out = np.empty((V.size, self.psi_I.grid.n_x), dtype=complex)
        out[:, self.left] = inc[None, :] + refl
        out[:, ~self.left] = trans
        return out

    def _nodes(self, V):
        """Momentum nodes, A(k) and quadrature weights appropriate for this V."""
        if self.needs_panels(V):
            k, wq = self.threshold_nodes(V)
            return k, self.amplitude_at(k), wq
        return self.k, self.A, np.full(self.k.size, self.psi_I.grid.dk)

    def transmitted_mass(self, V, t: float) -> np.ndarray:
        """Continuum weight on x >= 0 at time t, from the time-integrated flux through x = 0.

        int_0^t j(0, t') dt' with j = (1/M) Re(psi* (-i) d_x psi), done in closed form
        over each pair of momenta, so it does not depend on the grid extent.
        """
        V = np.atleast_1d(np.asarray(V))
        out = np.empty(V.size)

        def time_integrals(k):
            E = k**2 / (2 * self.M)
            dE = E[:, None] - E[None, :]
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.where(np.abs(dE) * t > 1e-8, (np.exp(1j * dE * t) - 1) / (1j * dE), t)

        special = np.array([self.needs_panels(v) for v in V], dtype=bool)
        reg = np.flatnonzero(~special)
        if reg.size:
            T = step_T(self.k[None, :], V[reg][:, None], self.M)
            c = self.A * self.psi_I.grid.dk * T
            cq = c * step_q(self.k[None, :], V[reg][:, None], self.M)
            out[reg] = np.real(np.sum(np.conj(c) * (cq @ time_integrals(self.k).T), axis=1)) / self.M
        for i in np.flatnonzero(special):
            k, A, wq = self._nodes(V[i])
            c = A * wq * step_T(k, V[i], self.M)
            out[i] = float(np.real(np.conj(c) @ time_integrals(k) @ (c * step_q(k, V[i], self.M)))) / self.M
        return out

    def remainder_norm(self, V, t: float, chunk: int = 256) -> np.ndarray:
        """||psi_V - psi_wall||^2 over the whole line, per V.

        The left part is sum_k A T exp(-ikx) on the grid; the right part is the
        full transmitted weight from ``transmitted_mass``.
        """
        V = np.atleast_1d(np.asarray(V))
        dx = self.psi_I.grid.dx
        left = np.empty(V.size)
        basis = self.reflected_basis()
        for s0 in range(0, V.size, chunk):
            sl = slice(s0, s0 + chunk)
            Vc = V[sl]
            special = np.array([self.needs_panels(v) for v in Vc], dtype=bool)
            reg = np.flatnonzero(~special)
            if reg.size:
                T = step_T(self.k[None, :], Vc[reg][:, None], self.M)
                field = (T * self.weights(t)) @ basis
                left[s0 + reg] = np.sum(np.abs(field) ** 2, axis=1) * dx
            for i in np.flatnonzero(special):
                k, A, wq = self._nodes(Vc[i])
                c = A * wq * np.exp(-0.5j * k**2 * t / self.M) * step_T(k, Vc[i], self.M)
                field = c @ np.exp(-1j * np.outer(k, self.x_left))
                left[s0 + i] = np.sum(np.abs(field) ** 2) * dx
        return left + self.transmitted_mass(V, t)

    def beyond_grid_norm(self, V, t: float, psi_V: np.ndarray | None = None, sigma_margin: float = 8.0) -> np.ndarray:
        """Weight of the transmitted wave past the right grid edge, per V.

        Deep wells (V << 0) accelerate the transmitted packet beyond any practical
        grid.  Its full weight is known from the flux through x = 0, so the part
        off the grid is that total minus what the grid holds.  V for which the
        fastest component cannot have reached the edge get exactly zero.
        """
        V = np.atleast_1d(np.asarray(V))
        g = self.psi_I.grid
        out = np.zeros(V.size)
        p = np.abs(self.A) ** 2
        kc = np.sum(p * self.k) / np.sum(p)
        sk = np.sqrt(np.sum(p * (self.k - kc) ** 2) / np.sum(p))
        q = step_q(kc + sigma_margin * sk, V, self.M)
        spread = sigma_margin * np.hypot(self.psi_I.width(), sk * t / self.M)
        reach = np.abs(q.real) / self.M * t + spread
        sel = np.flatnonzero(reach > g.x_max)
        if sel.size == 0:
            return out
        if psi_V is None:
            psi_V = self.evolve(V[sel], t)
        else:
            psi_V = psi_V[sel]
        on_grid = np.sum(np.abs(psi_V[:, ~self.left]) ** 2, axis=1) * g.dx
        out[sel] = np.clip(self.transmitted_mass(V[sel], t) - on_grid, 0.0, None)
        return out

    def _transmitted(self, coef: np.ndarray, q: np.ndarray) -> np.ndarray:
        # x_j = j dx on the right half, so exp(i q x_j) = z^j with z = exp(i q dx)
        dx = self.psi_I.grid.dx
        z = np.exp(1j * q * dx)
        out = np.empty((coef.shape[0], self.n_right), dtype=complex)
        w = coef.copy()
        for j in range(self.n_right):
            out[:, j] = w.sum(axis=1)
            w *= z
        return out


def separation_overlap(psi_V: np.ndarray, psi_I: WaveFunction, t: float) -> float:
    """Fraction of the mass of ``psi_V`` within one free-packet width of the step."""
    g = psi_I.grid
    from .lattice import free_propagate

    width = free_propagate(psi_I, t, warn=False).width()
    near = np.abs(g.x) < width
    total = np.sum(np.abs(psi_V) ** 2)
    return float(np.sum(np.abs(psi_V[near]) ** 2) / total) if total > 0 else 0.0


def step_evolve(psi_I: WaveFunction, V: float, t: float, tol: float = 1e-3) -> WaveFunction:
    """Evolve a left-confined packet under p^2/2M + V theta(x) for a time t."""
    if t < 0:
        raise ValueError("t must be >= 0")
    solver = StepSolver(psi_I)
    amp = solver.evolve(V, t)[0]
    ov = separation_overlap(amp, psi_I, t)
    if ov > tol:
        warnings.warn(
            f"transmitted/reflected packets overlap the step region ({ov:.2e} of the mass)",
            SeparationWarning,
            stacklevel=2,
        )
    out = psi_I.replace(amp)
    out.meta.update(V=V, t=t, separation_overlap=ov)
    return out


# --- grid time stepping --------------------------------------------------

_FD_STENCILS = {
    2: [1.0, -2.0, 1.0],
    4: [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12],
    6: [1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90],
}


def grid_hamiltonian(grid, potential: np.ndarray, M: float, order: int = 6) -> sp.csc_matrix:
    """Finite-difference H = -(1/2M) d^2/dx^2 + diag(potential), Dirichlet ends."""
    c = _FD_STENCILS[order]
    h = len(c) // 2
    n = grid.n_x
    diags = [np.full(n - abs(o), -c[o + h] / (2 * M * grid.dx**2)) for o in range(-h, h + 1)]
    H = sp.diags(diags, list(range(-h, h + 1)), shape=(n, n), dtype=complex)
    return (H + sp.diags(np.asarray(potential, dtype=complex))).tocsc()


def step_profile(grid, edge_value: float = 0.5) -> np.ndarray:
    """Sampled theta(x) with the value at the grid point x = 0 set to ``edge_value``."""
    th = (grid.x > 0).astype(float)
    th[grid.origin] = edge_value
    return th


def crank_nicolson(psi: WaveFunction, potential: np.ndarray, t: float, n_steps: int, order: int = 6) -> np.ndarray:
    """Crank-Nicolson evolution (second order in dt, unconditionally stable)."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    dt = t / n_steps
    H = grid_hamiltonian(psi.grid, np.asarray(potential, dtype=complex), psi.mass, order)
    eye = sp.identity(psi.grid.n_x, dtype=complex, format="csc")
    lu = spla.splu((eye + 0.5j * dt * H).tocsc())
    rhs = (eye - 0.5j * dt * H).tocsr()
    amp = psi.amp.copy()
    for _ in range(n_steps):
        amp = lu.solve(rhs @ amp)
    return amp


def default_steps(psi: WaveFunction, t: float, scale: float, per_unit: float = 0.01) -> int:
    """Step count with dt * max(E_packet, scale) <= per_unit."""
    mom = to_momentum(psi)
    p = np.abs(mom.A) ** 2
    kc = np.sum(p * mom.k) / np.sum(p)
    sk = np.sqrt(np.sum(p * (mom.k - kc) ** 2) / np.sum(p))
    e_max = (abs(kc) + 4 * sk) ** 2 / (2 * psi.mass)
    return max(1, int(np.ceil(t * max(e_max, abs(scale)) / per_unit)))


def step_evolve_exact(
    psi_I: WaveFunction,
    V: float,
    t: float,
    n_steps: int | None = None,
    drift_tol: float = 1e-8,
    edge_value: float = 0.5,
) -> WaveFunction:
    """Crank-Nicolson evolution under p^2/2M + V theta(x) on the grid."""
    if n_steps is None:
        n_steps = default_steps(psi_I, t, V)
    amp = crank_nicolson(psi_I, V * step_profile(psi_I.grid, edge_value), t, n_steps)
    out = psi_I.replace(amp)
    drift = abs(out.norm2 - psi_I.norm2)
    if drift > drift_tol:
        raise NormDriftError(f"norm drift {drift:.3e} exceeds {drift_tol:g}")
    out.meta.update(V=V, t=t, n_steps=n_steps, norm_drift=drift)
    return out
