"""Thin scikit-learn style wrappers and parameter validation.

The wrappers hold numerical settings as constructor parameters (so they clone,
compare and print like any estimator) and delegate all work to the functional
API.  ``fit`` computes the fine-grained distribution; ``transform`` applies a
meter filter.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, check_scalar

from .distribution import AmplitudeDistribution
from .firstcross import completeness_residual, first_crossing_distribution
from .lattice import WaveFunction, check_left_confined
from .meter import SHAPES, MeterFilter, apply_filter
from .traversal import default_v_grid, sum_rule_residual, traversal_distribution


def check_positive(value, name: str, include_zero: bool = False) -> float:
    """Real scalar > 0 (or >= 0)."""
    return float(
        check_scalar(value, name, numbers.Real, min_val=0.0, include_boundaries="left" if include_zero else "neither")
    )


def check_wavefunction(psi, left_confined: bool = True) -> WaveFunction:
    if not isinstance(psi, WaveFunction):
        raise TypeError(f"expected a WaveFunction, got {type(psi).__name__}")
    if not np.all(np.isfinite(psi.amp)):
        raise ValueError("wavefunction has non-finite samples")
    if left_confined:
        check_left_confined(psi)
    return psi


def check_filter_params(shape: str, width, alpha) -> MeterFilter:
    if shape not in SHAPES:
        raise ValueError(f"unknown filter shape {shape!r}; choose from {SHAPES}")
    check_positive(width, "width")
    check_scalar(alpha, "alpha", numbers.Real, min_val=1.0)
    return MeterFilter(shape, float(width), float(alpha))


class TraversalTimeAmplitudes(BaseEstimator):
    """Fine-grained traversal-time distribution of one packet.

    Parameters
    ----------
    t : float
        Evolution time.
    v_max_factor, window_factor : float
        Step-height grid reach (in units of the mean energy) and tau-window
        length (in units of t).
    """

    def __init__(self, t: float = 10.0, v_max_factor: float = 40.0, window_factor: float = 2.0):
        self.t = t
        self.v_max_factor = v_max_factor
        self.window_factor = window_factor

    def fit(self, psi_I: WaveFunction, y=None):
        check_positive(self.t, "t")
        check_positive(self.v_max_factor, "v_max_factor")
        check_scalar(self.window_factor, "window_factor", numbers.Real, min_val=1.0)
        psi_I = check_wavefunction(psi_I)
        energy = psi_I.mean_momentum() ** 2 / (2 * psi_I.mass)
        V = default_v_grid(energy, self.t, self.v_max_factor, self.window_factor)
        self.distribution_ = traversal_distribution(psi_I, self.t, V)
        self.sum_rule_residual_ = sum_rule_residual(self.distribution_, psi_I)
        return self


class FirstCrossingAmplitudes(BaseEstimator):
    """First-crossing decomposition of one packet on ``n_tau`` uniform cells."""

    def __init__(self, t: float = 10.0, n_tau: int = 200):
        self.t = t
        self.n_tau = n_tau

    def fit(self, psi_I: WaveFunction, y=None):
        check_positive(self.t, "t")
        check_scalar(self.n_tau, "n_tau", numbers.Integral, min_val=1)
        psi_I = check_wavefunction(psi_I)
        self.decomposition_ = first_crossing_distribution(psi_I, self.t, self.n_tau)
        self.completeness_residual_ = completeness_residual(self.decomposition_, psi_I)
        return self


class MeterTransformer(TransformerMixin, BaseEstimator):
    """Convolve a fine-grained distribution with the pointer state G_alpha."""

    def __init__(self, shape: str = "gaussian", width: float = 1.0, alpha: float = 1.0, route: str = "auto"):
        self.shape = shape
        self.width = width
        self.alpha = alpha
        self.route = route

    def fit(self, X=None, y=None):
        self.filter_ = check_filter_params(self.shape, self.width, self.alpha)
        return self

    def transform(self, X: AmplitudeDistribution) -> AmplitudeDistribution:
        check_is_fitted(self, "filter_")
        if not isinstance(X, AmplitudeDistribution):
            raise TypeError("MeterTransformer transforms an AmplitudeDistribution")
        return apply_filter(X, self.filter_, self.route)
