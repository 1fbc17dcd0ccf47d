"""Power delay profiles and the Gauss-Markov model of adjacent subcarrier responses.

Two profile kinds are supported: an exponential decay with a closed-form
treatment, and a tabulated density sampled on a delay grid (piecewise linear
between samples, integrated exactly segment by segment).  Both may be truncated
at a delay ``truncation``, beyond which the profile is zero.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .exceptions import InvalidTruncationError, UndefinedCorrelationError, ValidationError
from .gaussian import Gaussian2, as_vector, to_matrix


class SpacingConvention(str, enum.Enum):
    """How a subcarrier spacing in hertz enters the phase ``exp(-j*theta*tau)``.

    ``CYCLIC`` uses ``theta = 2*pi*spacing`` (angular frequency).  ``PAPER_TABLE``
    uses ``theta = spacing`` directly, which is how the published parameter
    table for the in-vehicle example was produced.
    """

    CYCLIC = "cyclic"
    PAPER_TABLE = "paper-table"

    def theta(self, spacing_hz: float) -> float:
        if self is SpacingConvention.CYCLIC:
            return 2.0 * math.pi * spacing_hz
        return float(spacing_hz)


def _check_truncation(value):
    if value is None:
        return math.inf
    value = float(value)
    if not value > 0.0:
        raise InvalidTruncationError(f"must be > 0, got {value!r}", field="truncation")
    return value


@dataclass(frozen=True)
class ExponentialPDP:
    """``P(tau) = amplitude * exp(-tau / tau_c)`` for ``tau >= 0``.

    The default amplitude ``1 / tau_c`` gives unit total (untruncated) energy.
    """

    tau_c: float
    amplitude: float | None = None
    truncation: float = math.inf

    def __post_init__(self):
        if not (self.tau_c > 0.0 and math.isfinite(self.tau_c)):
            raise ValidationError("must be finite and > 0", field="tau_c")
        if self.amplitude is None:
            object.__setattr__(self, "amplitude", 1.0 / self.tau_c)
        elif not (self.amplitude >= 0.0 and math.isfinite(self.amplitude)):
            raise ValidationError("must be finite and >= 0", field="amplitude")
        object.__setattr__(self, "truncation", _check_truncation(self.truncation))

    @property
    def total_energy(self) -> float:
        return self.amplitude * self.tau_c

    def density(self, tau):
        tau = np.asarray(tau, dtype=float)
        inside = (tau >= 0.0) & (tau < self.truncation)
        return np.where(inside, self.amplitude * np.exp(-np.clip(tau, 0.0, None) / self.tau_c), 0.0)


@dataclass(frozen=True, eq=False)
class TabulatedPDP:
    """Density samples on a strictly increasing delay grid starting at ``>= 0``."""

    delays: np.ndarray
    densities: np.ndarray
    truncation: float = math.inf

    def __post_init__(self):
        delays = np.array(self.delays, dtype=float).ravel()
        densities = np.array(self.densities, dtype=float).ravel()
        if delays.size == 0 or delays.shape != densities.shape:
            raise ValidationError("delays and densities must be non-empty and equal length")
        if not (np.all(np.isfinite(delays)) and np.all(np.isfinite(densities))):
            raise ValidationError("delays and densities must be finite")
        if delays[0] < 0.0 or np.any(np.diff(delays) <= 0.0):
            raise ValidationError("must start at >= 0 and be strictly increasing", field="delays")
        if np.any(densities < 0.0):
            raise ValidationError("must be >= 0", field="densities")
        delays.flags.writeable = False
        densities.flags.writeable = False
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "densities", densities)
        object.__setattr__(self, "truncation", _check_truncation(self.truncation))

    @property
    def total_energy(self) -> float:
        return float(np.trapezoid(self.densities, self.delays))

    def density(self, tau):
        tau = np.asarray(tau, dtype=float)
        inside = (tau >= self.delays[0]) & (tau <= self.delays[-1]) & (tau < self.truncation)
        return np.where(inside, np.interp(tau, self.delays, self.densities), 0.0)

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Grid and samples of the truncated density, closed at the cut with its left limit."""
        if self.truncation > self.delays[-1]:
            return self.delays, self.densities
        keep = self.delays < self.truncation
        if not np.any(keep):
            return np.empty(0), np.empty(0)
        cut = np.interp(self.truncation, self.delays, self.densities)
        return (
            np.append(self.delays[keep], self.truncation),
            np.append(self.densities[keep], cut),
        )


def read_pdp_csv(path, truncation=math.inf) -> TabulatedPDP:
    """Load ``delay_seconds,density_per_second`` rows (header row required)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty file")
        if _is_numeric_row(header):
            raise ValidationError(f"{path}: header row required")
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"{path}: malformed row ({exc})") from None
    if data.size == 0:
        raise ValidationError(f"{path}: no data rows")
    return TabulatedPDP(data[:, 0], data[:, 1], truncation)


def _is_numeric_row(row) -> bool:
    try:
        [float(c) for c in row]
    except ValueError:
        return False
    return True


def tabulate(pdp: ExponentialPDP, delays) -> TabulatedPDP:
    """Sample an analytic profile onto a delay grid, keeping its truncation."""
    delays = np.asarray(delays, dtype=float)
    dens = pdp.amplitude * np.exp(-delays / pdp.tau_c)
    return TabulatedPDP(delays, dens, pdp.truncation)


def response_variance(pdp) -> float:
    """Per-component variance of the subcarrier response: energy of the truncated profile."""
    if isinstance(pdp, ExponentialPDP):
        return pdp.amplitude * pdp.tau_c * -math.expm1(-pdp.truncation / pdp.tau_c)
    tau, dens = pdp.support()
    if tau.size < 2:
        return 0.0
    return float(np.trapezoid(dens, tau))


def truncate(pdp, tau_t: float):
    """Zero the profile from ``tau_t`` on.

    Returns ``(truncated_profile, retained_fraction)``, the fraction being
    relative to the energy of the profile passed in.
    """
    tau_t = _check_truncation(tau_t)
    before = response_variance(pdp)
    out = replace(pdp, truncation=min(tau_t, pdp.truncation))
    after = response_variance(out)
    if before == 0.0:
        return out, 1.0
    if isinstance(pdp, ExponentialPDP):
        # ratio of expm1 terms keeps full precision for deep truncations
        retained = math.expm1(-out.truncation / pdp.tau_c) / math.expm1(-pdp.truncation / pdp.tau_c)
        return out, retained
    return out, after / before


def correlation_a(pdp, spacing_hz: float, convention=SpacingConvention.CYCLIC) -> complex:
    """Normalized Fourier transform of the truncated profile at the subcarrier spacing."""
    if spacing_hz < 0.0:
        raise ValidationError("must be >= 0", field="spacing_hz")
    convention = SpacingConvention(convention)
    theta = convention.theta(spacing_hz)
    if response_variance(pdp) <= 0.0:
        raise UndefinedCorrelationError("profile has zero energy")
    if theta == 0.0:
        return 1.0 + 0.0j
    if isinstance(pdp, ExponentialPDP):
        beta = theta * pdp.tau_c
        if math.isinf(pdp.truncation):
            return 1.0 / complex(1.0, beta)
        rate = complex(1.0 / pdp.tau_c, theta)
        num = -_cexpm1(-pdp.truncation * rate)
        den = -math.expm1(-pdp.truncation / pdp.tau_c)
        return num / (complex(1.0, beta) * den)
    tau, dens = pdp.support()
    return complex(_pwl_transform(tau, dens, theta) / np.trapezoid(dens, tau))


def decorrelation(pdp, spacing_hz: float, convention=SpacingConvention.CYCLIC) -> float:
    """``1 - |a|^2``, evaluated without cancellation for exponential profiles."""
    convention = SpacingConvention(convention)
    if not isinstance(pdp, ExponentialPDP):
        return 1.0 - abs(correlation_a(pdp, spacing_hz, convention)) ** 2
    if spacing_hz < 0.0:
        raise ValidationError("must be >= 0", field="spacing_hz")
    theta = convention.theta(spacing_hz)
    beta_sq = (theta * pdp.tau_c) ** 2
    if math.isinf(pdp.truncation):
        return beta_sq / (1.0 + beta_sq)
    q = math.exp(-pdp.truncation / pdp.tau_c)
    ripple = 4.0 * q * math.sin(0.5 * theta * pdp.truncation) ** 2 / math.expm1(-pdp.truncation / pdp.tau_c) ** 2
    return (beta_sq - ripple) / (1.0 + beta_sq)


def _phi(w: np.ndarray):
    """``(e^w - 1)/w`` and ``(e^w (w - 1) + 1)/w^2``, with series near ``w = 0``."""
    small = np.abs(w) < 0.5
    ws = np.where(small, w, 0.0)
    f1 = np.zeros_like(w)
    f2 = np.zeros_like(w)
    term = np.ones_like(w)
    for k in range(20):
        # term = ws^k / k!
        f1 += term / (k + 1)
        f2 += term / (k + 2)
        term = term * ws / (k + 1)
    wl = np.where(small, 1.0, w)
    ew = np.exp(wl)
    f1 = np.where(small, f1, (ew - 1.0) / wl)
    f2 = np.where(small, f2, (ew * (wl - 1.0) + 1.0) / (wl * wl))
    return f1, f2


def _pwl_transform(tau, dens, theta) -> complex:
    """Exact ``int p(t) exp(-j theta t) dt`` for ``p`` linear between the samples."""
    if tau.size < 2:
        return 0j
    h = np.diff(tau)
    p0, dp = dens[:-1], np.diff(dens)
    f1, f2 = _phi(-1j * theta * h)
    seg = h * (p0 * f1 + dp * f2)
    return complex(np.sum(np.exp(-1j * theta * tau[:-1]) * seg))


def _cexpm1(w: complex) -> complex:
    # exp(w) - 1 accurate for small |w|
    if abs(w) < 1e-5:
        return w + 0.5 * w * w + w * w * w / 6.0
    return complex(np.exp(w)) - 1.0


@dataclass(frozen=True)
class FrequencyCorrelation:
    """Gauss-Markov link between adjacent subcarrier responses."""

    a: complex
    sigma_z_sq: float

    def __post_init__(self):
        a = complex(self.a)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise ValidationError("must be finite", field="a")
        if abs(a) > 1.0 + 1e-12:
            raise ValidationError(f"|a| must be <= 1, got {abs(a)!r}", field="a")
        if not (self.sigma_z_sq >= 0.0 and math.isfinite(self.sigma_z_sq)):
            raise ValidationError("must be finite and >= 0", field="sigma_z_sq")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "sigma_z_sq", float(self.sigma_z_sq))

    @classmethod
    def from_profile(cls, pdp, spacing_hz, convention=SpacingConvention.CYCLIC):
        return cls(correlation_a(pdp, spacing_hz, convention), response_variance(pdp))

    @property
    def a_sq(self) -> float:
        return min(self.a.real ** 2 + self.a.imag ** 2, 1.0)

    @property
    def innovation_variance(self) -> float:
        return self.sigma_z_sq * (1.0 - self.a_sq)


def conditional_response(fc: FrequencyCorrelation, z_prev) -> Gaussian2:
    """Distribution of a subcarrier response given the previous one."""
    mean = to_matrix(fc.a) @ as_vector(z_prev)
    return Gaussian2(mean, fc.innovation_variance * np.eye(2))


def joint_pair_covariance(fc: FrequencyCorrelation) -> np.ndarray:
    """4x4 covariance of ``[z(w), z(w - dw)]`` in real-vector form."""
    re, im = fc.a.real, fc.a.imag
    return fc.sigma_z_sq * np.array(
        [
            [1.0, 0.0, re, -im],
            [0.0, 1.0, im, re],
            [re, im, 1.0, 0.0],
            [-im, re, 0.0, 1.0],
        ]
    )
