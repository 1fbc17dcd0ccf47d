"""scikit-learn style wrappers around the tracker and the bound engine."""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bounds import McConfig, NormalizedParams, estimate_bounds
from .channel import FrequencyCorrelation
from .exceptions import ValidationError
from .oracle import ChannelTrace, track


def check_pairs(X) -> np.ndarray:
    """Validate an ``(n, 2)`` complex array of ``[x, y]`` input/output pairs."""
    # check_array refuses complex input, so validate by hand
    try:
        X = np.asarray(X, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"not convertible to complex: {exc}", field="X") from None
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValidationError(f"expected a non-empty 2-D array, got shape {X.shape}", field="X")
    if not np.all(np.isfinite(X)):
        raise ValidationError("must be finite", field="X")
    if X.shape[1] != 2:
        raise ValidationError(f"expected 2 columns [x, y], got {X.shape[1]}", field="X")
    return X


def check_seed_param(random_state) -> int:
    if random_state is None:
        return 0
    if isinstance(random_state, (int, np.integer)) and random_state >= 0:
        return int(random_state)
    raise ValidationError("must be a non-negative integer or None", field="random_state")


class KalmanChannelTracker(TransformerMixin, BaseEstimator):
    """Track subcarrier responses from input/output pairs.

    ``transform`` maps rows ``[x_i, y_i]`` to ``[Re mean_i, Im mean_i, var_i]``,
    the posterior of ``z_i`` given pairs ``0..i-1`` (``var_i`` per component).
    The tracker holds no state across calls, so ``fit`` only checks parameters.
    """

    def __init__(self, a=0.0, sigma_z_sq=1.0, sigma_n_sq=1.0):
        self.a = a
        self.sigma_z_sq = sigma_z_sq
        self.sigma_n_sq = sigma_n_sq

    def _correlation(self) -> FrequencyCorrelation:
        if not self.sigma_n_sq > 0.0:
            raise ValidationError("must be > 0", field="sigma_n_sq")
        return FrequencyCorrelation(self.a, self.sigma_z_sq)

    def fit(self, X=None, y=None):
        self.correlation_ = self._correlation()
        if X is not None:
            self.n_features_in_ = check_pairs(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "correlation_")
        X = check_pairs(X)
        x, y = X[:, 0], X[:, 1]
        n = np.zeros(len(x), dtype=complex)
        trace = ChannelTrace(np.full(len(x), np.nan + 0j), x, n, y, self.correlation_.sigma_z_sq)
        states = track(trace, self.correlation_, float(self.sigma_n_sq))
        return np.column_stack([states.mean.real, states.mean.imag, states.variance])


class NoncoherentBoundEstimator(BaseEstimator):
    """Monte Carlo lower bounds on noncoherent capacity for one parameter point.

    There is no data to learn from: ``fit`` runs the simulation and stores the
    estimates as fitted attributes (``L1_``, ``L2_``, ``L2B_``, ...).
    """

    def __init__(
        self,
        snr=0.0178,
        a_sq=1.0,
        n_subcarriers=100,
        n_truncate=None,
        trials=1000,
        random_state=None,
        n_jobs=None,
        prefix_multiplier=1.0,
    ):
        self.snr = snr
        self.a_sq = a_sq
        self.n_subcarriers = n_subcarriers
        self.n_truncate = n_truncate
        self.trials = trials
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.prefix_multiplier = prefix_multiplier

    def fit(self, X=None, y=None):
        if not 0.0 < self.prefix_multiplier <= 1.0:
            raise ValidationError("must be in (0, 1]", field="prefix_multiplier")
        params = NormalizedParams(self.snr, self.a_sq, self.n_subcarriers, self.n_truncate)
        workers = 1 if self.n_jobs is None else int(self.n_jobs)
        mc = McConfig(self.trials, check_seed_param(self.random_state), workers)
        result = estimate_bounds(params, mc)
        self.result_ = result
        self.per_index_ = result.per_index_info
        for name in ("L1", "L2", "L1A", "L2A", "C_csi"):
            setattr(self, name + "_", getattr(result, name))
        self.L2B_ = result.L2 * self.prefix_multiplier
        self.L2B_se_ = result.L2_se * self.prefix_multiplier
        self.fraction_of_csi_ = self.L2B_ / self.C_csi_ if self.C_csi_ > 0.0 else 0.0
        return self

    def predict(self, X=None):
        """Fitted ``L2B`` in bits/s/Hz, one value per row of ``X`` (or a scalar)."""
        check_is_fitted(self, "result_")
        if X is None:
            return self.L2B_
        return np.full(len(X), self.L2B_)

    def score(self, X=None, y=None):
        check_is_fitted(self, "result_")
        return self.fraction_of_csi_ if math.isfinite(self.fraction_of_csi_) else 0.0
