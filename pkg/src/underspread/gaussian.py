"""Real 2-vector view of complex scalars and the 2x2 Gaussian algebra built on it.

A complex number ``z`` is carried either as a length-2 real vector
``[Re z, Im z]`` or, when it acts multiplicatively, as the rotation-scale
matrix ``[[Re z, -Im z], [Im z, Re z]]``.  With that convention
``to_matrix(z) @ as_vector(w) == as_vector(z * w)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateFusionError, ValidationError

DET_GUARD = 1e-300
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-12


def _check_complex(z) -> complex:
    z = complex(z)
    if not (cmath.isfinite(z)):
        raise ValidationError(f"complex value must be finite, got {z!r}")
    return z


def as_vector(z) -> np.ndarray:
    z = _check_complex(z)
    return np.array([z.real, z.imag])


def from_vector(v) -> complex:
    v = np.asarray(v, dtype=float)
    return complex(v[0], v[1])


def to_matrix(z) -> np.ndarray:
    """Matrix form of ``z``: left-multiplying a vector by it multiplies by ``z``."""
    z = _check_complex(z)
    return np.array([[z.real, -z.imag], [z.imag, z.real]])


def is_rot_scale(m, tol=0.0) -> bool:
    m = np.asarray(m, dtype=float)
    return (
        m.shape == (2, 2)
        and abs(m[0, 0] - m[1, 1]) <= tol
        and abs(m[0, 1] + m[1, 0]) <= tol
    )


def inv2(m) -> np.ndarray:
    """Cofactor inverse of a 2x2 matrix."""
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    det = a * d - b * c
    if not abs(det) > DET_GUARD:
        raise DegenerateFusionError(f"matrix is singular (det={det!r})")
    return np.array([[d, -b], [-c, a]]) / det


def sym_eigvals2(m) -> tuple[float, float]:
    """Eigenvalues ``(low, high)`` of the symmetric part of a 2x2 matrix."""
    m = np.asarray(m, dtype=float)
    a, d = m[0, 0], m[1, 1]
    b = 0.5 * (m[0, 1] + m[1, 0])
    mid = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), b)
    return mid - rad, mid + rad


def is_pds(m) -> bool:
    """True iff ``m`` is symmetric (to 1e-12) and both eigenvalues are positive."""
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2) or not np.all(np.isfinite(m)):
        return False
    scale = max(1.0, float(np.max(np.abs(m))))
    if abs(m[0, 1] - m[1, 0]) > SYMMETRY_TOL * scale:
        return False
    low, _ = sym_eigvals2(m)
    return low > 0.0


@dataclass(frozen=True)
class ZmcsGaussian:
    """Zero-mean circularly symmetric complex Gaussian, ``variance`` per component."""

    variance: float

    def __post_init__(self):
        if not (self.variance >= 0.0 and math.isfinite(self.variance)):
            raise ValidationError("variance must be finite and >= 0", field="variance")

    @property
    def power(self) -> float:
        return 2.0 * self.variance

    def as_gaussian2(self) -> "Gaussian2":
        return Gaussian2(np.zeros(2), self.variance * np.eye(2))


@dataclass(frozen=True, eq=False)
class Gaussian2:
    """Real bivariate Gaussian describing one complex quantity."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(2)
        cov = np.array(self.cov, dtype=float).reshape(2, 2)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValidationError("Gaussian2 parameters must be finite")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if abs(cov[0, 1] - cov[1, 0]) > SYMMETRY_TOL * scale:
            raise ValidationError("covariance must be symmetric", field="cov")
        if sym_eigvals2(cov)[0] < -PSD_TOL * scale:
            raise ValidationError("covariance must be positive semi-definite", field="cov")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def isotropic(cls, mean, variance: float) -> "Gaussian2":
        return cls(as_vector(mean), variance * np.eye(2))

    @property
    def mean_complex(self) -> complex:
        return from_vector(self.mean)

    def sample(self, rng: np.random.Generator) -> complex:
        """One draw; a zero covariance gives back the mean exactly."""
        if not np.any(self.cov):
            return self.mean_complex
        low, _ = sym_eigvals2(self.cov)
        if low > 0.0:
            factor = np.linalg.cholesky(self.cov)
        else:
            w, v = np.linalg.eigh(self.cov)
            factor = v * np.sqrt(np.clip(w, 0.0, None))
        return from_vector(self.mean + factor @ rng.standard_normal(2))

    def __repr__(self):
        return f"Gaussian2(mean={self.mean.tolist()}, cov={self.cov.tolist()})"


class Uninformative:
    """Likelihood carrying no information (infinite variance on both axes)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNINFORMATIVE"


UNINFORMATIVE = Uninformative()


def sample_zmcs(dist, rng: np.random.Generator, size=None):
    """Draw from a ZMCS Gaussian; ``dist`` is a ZmcsGaussian or a per-component variance.

    Returns a Python ``complex`` when ``size`` is None, else a complex array.
    """
    variance = dist.variance if isinstance(dist, ZmcsGaussian) else float(dist)
    if variance < 0.0:
        raise ValidationError("variance must be >= 0", field="variance")
    std = math.sqrt(variance)
    if size is None:
        re, im = rng.standard_normal(2)
        return complex(std * re, std * im)
    draws = rng.standard_normal((2,) + tuple(np.atleast_1d(size)))
    return std * (draws[0] + 1j * draws[1])


def fuse(prior: Gaussian2, likelihood) -> Gaussian2:
    """Combine two independent Gaussian beliefs about the same quantity.

    Works in information form: precisions add, and the posterior mean is the
    precision-weighted mean.  Either argument may be ``UNINFORMATIVE``.
    """
    if likelihood is UNINFORMATIVE:
        return prior
    if prior is UNINFORMATIVE:
        return likelihood
    try:
        prec_p = inv2(prior.cov)
        prec_l = inv2(likelihood.cov)
        cov = inv2(prec_p + prec_l)
    except DegenerateFusionError as exc:
        raise DegenerateFusionError(f"cannot fuse degenerate Gaussians: {exc}") from None
    cov = 0.5 * (cov + cov.T)
    mean = cov @ (prec_p @ prior.mean + prec_l @ likelihood.mean)
    return Gaussian2(mean, cov)


# --- random PDS matrices and the identity-perturbation lemmas ---------------

PDS_EPS = 1e-9
CONTRACTION_MARGIN = 1e-9


def random_pds(rng: np.random.Generator, eps: float = PDS_EPS) -> np.ndarray:
    """Gram matrix of a uniform [-1, 1] 2x2 matrix, lifted by ``eps * I``."""
    g = rng.uniform(-1.0, 1.0, size=(2, 2))
    return g.T @ g + eps * np.eye(2)


def random_contraction_pds(rng: np.random.Generator, eps: float = PDS_EPS) -> np.ndarray:
    """Random PDS ``D`` with ``I - D`` also PDS (spectral radius below one)."""
    d = random_pds(rng, eps)
    u = 0.0
    while u == 0.0:
        u = rng.uniform(0.0, 1.0)
    return d * (u / (sym_eigvals2(d)[1] + CONTRACTION_MARGIN))


def inverse_minus_identity_is_pds(d) -> bool:
    """``(I - D)^-1 - I`` is PDS, for PDS ``D`` with ``I - D`` PDS."""
    eye = np.eye(2)
    return is_pds(inv2(eye - d) - eye)


def identity_minus_inverse_is_pds(d) -> bool:
    """``I - (I + D)^-1`` is PDS, for PDS ``D``."""
    eye = np.eye(2)
    return is_pds(eye - inv2(eye + d))


def shrunk_determinant_below_one(d) -> bool:
    """``det(I - D) < 1``, for PDS ``D`` with ``I - D`` PDS."""
    m = np.eye(2) - np.asarray(d, dtype=float)
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] < 1.0
