"""Independent checks on the bound engine.

``simulate`` draws an actual subcarrier channel ``y = z * x + n`` with a
Gauss-Markov response chain, ``track`` runs the Bayesian tracker over it,
and ``exact_conditional_mi`` evaluates ``I(x; y | z_hat)`` for a single
tracker state by quadrature.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.special import i0e, roots_legendre

from .channel import FrequencyCorrelation
from .exceptions import PrecisionError, ValidationError
from .gaussian import UNINFORMATIVE, Gaussian2, as_vector, fuse, sample_zmcs, to_matrix

TRACE_SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class ChannelTrace:
    z: np.ndarray
    x: np.ndarray
    n: np.ndarray
    y: np.ndarray
    sigma_z_sq: float
    posterior_mean: np.ndarray | None = None
    posterior_cov: np.ndarray | None = None

    def __len__(self):
        return len(self.z)

    def posterior(self, i: int) -> Gaussian2:
        if self.posterior_cov is None:
            raise ValueError("trace has not been tracked")
        return Gaussian2(as_vector(self.posterior_mean[i]), self.posterior_cov[i])

    def with_posterior(self, states: "TrackerStates") -> "ChannelTrace":
        return ChannelTrace(self.z, self.x, self.n, self.y, self.sigma_z_sq, states.mean, states.cov)

    def to_csv(self, path):
        """Write one row per subcarrier; posterior_var is the first diagonal entry."""
        var = (
            self.posterior_cov[:, 0, 0]
            if self.posterior_cov is not None
            else np.full(len(self), np.nan)
        )
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["schema_version", "index", "z_re", "z_im", "x_re", "x_im", "y_re", "y_im", "posterior_var"])
            for i in range(len(self)):
                w.writerow(
                    [TRACE_SCHEMA_VERSION, i]
                    + [f"{v:.17g}" for v in (
                        self.z[i].real, self.z[i].imag,
                        self.x[i].real, self.x[i].imag,
                        self.y[i].real, self.y[i].imag,
                        var[i],
                    )]
                )


@dataclass(frozen=True, eq=False)
class TrackerStates:
    """Posterior of each ``z_i`` given everything observed before index ``i``."""

    mean: np.ndarray
    cov: np.ndarray

    def __len__(self):
        return len(self.mean)

    def __getitem__(self, i) -> Gaussian2:
        return Gaussian2(as_vector(self.mean[i]), self.cov[i])

    @property
    def variance(self) -> np.ndarray:
        return self.cov[:, 0, 0]


def simulate(fc: FrequencyCorrelation, sigma_x_sq: float, sigma_n_sq: float, n: int, rng) -> ChannelTrace:
    """Draw ``n`` subcarriers of the channel with IID ZMCS inputs and noise."""
    if sigma_x_sq < 0.0 or sigma_n_sq < 0.0:
        raise ValidationError("variances must be >= 0")
    if n < 1:
        raise ValidationError("must be >= 1", field="n")
    drive = sample_zmcs(fc.innovation_variance, rng, size=n)
    drive[0] = sample_zmcs(fc.sigma_z_sq, rng)
    # z_i = a z_{i-1} + w_i
    z = lfilter([1.0], [1.0, -fc.a], drive)
    x = sample_zmcs(sigma_x_sq, rng, size=n)
    noise = sample_zmcs(sigma_n_sq, rng, size=n)
    return ChannelTrace(z, x, noise, z * x + noise, fc.sigma_z_sq)


def measurement(x: complex, y: complex, sigma_n_sq: float):
    """Likelihood of ``z`` from one input/output pair: mean ``y/x``, variance ``sigma_n^2/|x|^2``."""
    power = abs(x) ** 2
    if power == 0.0:
        return UNINFORMATIVE
    return Gaussian2(as_vector(y / x), (sigma_n_sq / power) * np.eye(2))


def predict(state: Gaussian2, fc: FrequencyCorrelation) -> Gaussian2:
    """Carry a belief about ``z_{i-1}`` to ``z_i`` through the Gauss-Markov step."""
    A = to_matrix(fc.a)
    cov = A @ state.cov @ A.T + fc.innovation_variance * np.eye(2)
    return Gaussian2(A @ state.mean, 0.5 * (cov + cov.T))


def track(trace: ChannelTrace, fc: FrequencyCorrelation, sigma_n_sq: float) -> TrackerStates:
    n = len(trace)
    means = np.empty(n, dtype=complex)
    covs = np.empty((n, 2, 2))
    state = Gaussian2(np.zeros(2), fc.sigma_z_sq * np.eye(2))
    for i in range(n):
        means[i] = state.mean_complex
        covs[i] = state.cov
        if i + 1 < n:
            state = predict(fuse(state, measurement(trace.x[i], trace.y[i], sigma_n_sq)), fc)
    return TrackerStates(means, covs)


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution of the conditional-MI quadrature.

    ``power_extent`` is the upper limit of ``|x|^2`` in units of ``sigma_x^2``.
    The result is computed at this resolution and at twice it; a difference
    above ``tol`` bits raises ``PrecisionError``.
    """

    n_power: int = 2000
    n_radial: int = 400
    power_extent: float = 40.0
    radial_sigmas: float = 12.0
    tol: float = 1e-4
    panel: int = 16

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(
            2 * self.n_power, 2 * self.n_radial, self.power_extent, self.radial_sigmas, self.tol, self.panel
        )


def _panels(lo: float, hi: float, n_nodes: int, order: int):
    n_panels = max(1, -(-n_nodes // order))
    nodes, weights = roots_legendre(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    wts = (half[:, None] * weights[None, :]).ravel()
    return pts, wts


def _mi_on_grid(sigma_hat_sq, mu_abs, sigma_x_sq, sigma_n_sq, spec: QuadratureSpec) -> float:
    # |x|^2 = 2 sigma_x^2 s with s ~ Exp(1), truncated at power_extent / 2
    s, ws = _panels(0.0, 0.5 * spec.power_extent, spec.n_power, spec.panel)
    ws = ws * np.exp(-s)
    ws /= ws.sum()
    t = 2.0 * sigma_x_sq * s
    v = t * sigma_hat_sq + sigma_n_sq
    h_cond = float(np.sum(ws * np.log2(2.0 * math.pi * math.e * v)))

    # |y| = r; density of w = r^2 is a mixture of noncentral (Rician-square) laws
    r_max = mu_abs * math.sqrt(t[-1]) + spec.radial_sigmas * math.sqrt(v[-1])
    r, wr = _panels(0.0, r_max, spec.n_radial, spec.panel)
    dw = 2.0 * r * wr
    c = mu_abs * np.sqrt(t)
    arg = r[:, None] * c[None, :] / v[None, :]
    log_kernel = -((r[:, None] - c[None, :]) ** 2) / (2.0 * v[None, :]) - np.log(2.0 * v[None, :])
    q = np.sum(ws[None, :] * np.exp(log_kernel) * i0e(arg), axis=1)
    pos = q > 0.0
    h_y = float(-np.sum(dw[pos] * q[pos] * np.log2(q[pos]))) + math.log2(math.pi)
    return h_y - h_cond


def exact_conditional_mi(
    sigma_hat_sq: float,
    mu_hat,
    sigma_x_sq: float,
    sigma_n_sq: float,
    grid: QuadratureSpec = QuadratureSpec(),
) -> float:
    """``I(x; y | z_hat)`` in bits for ``y = z x + n`` with ``z ~ N(mu_hat, sigma_hat_sq I)``.

    ``x`` and ``n`` are ZMCS with per-component variances ``sigma_x_sq`` and
    ``sigma_n_sq``.  Circular symmetry of ``x`` lets the output density depend
    on ``|y|`` only, so the output entropy is a 1-D integral over ``|y|^2`` of a
    mixture over ``|x|^2``; the conditional entropy given ``x`` is Gaussian.
    """
    value, err = conditional_mi_with_error(sigma_hat_sq, mu_hat, sigma_x_sq, sigma_n_sq, grid)
    if err > grid.tol:
        raise PrecisionError(
            f"quadrature changed by {err:.3g} bits under grid doubling (tol {grid.tol:.3g})",
            estimate=value,
            error=err,
        )
    return value


def conditional_mi_with_error(sigma_hat_sq, mu_hat, sigma_x_sq, sigma_n_sq, grid=QuadratureSpec()):
    """Like :func:`exact_conditional_mi` but returns ``(value, grid-doubling change)`` without raising."""
    if sigma_hat_sq < 0.0 or sigma_x_sq < 0.0:
        raise ValidationError("variances must be >= 0")
    if not sigma_n_sq > 0.0:
        raise ValidationError("must be > 0", field="sigma_n_sq")
    if sigma_x_sq == 0.0:
        return 0.0, 0.0
    mu_abs = abs(complex(mu_hat))
    coarse = _mi_on_grid(sigma_hat_sq, mu_abs, sigma_x_sq, sigma_n_sq, grid)
    fine = _mi_on_grid(sigma_hat_sq, mu_abs, sigma_x_sq, sigma_n_sq, grid.doubled())
    return fine, abs(fine - coarse)
