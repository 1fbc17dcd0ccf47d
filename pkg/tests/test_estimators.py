import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from underspread.bounds import McConfig, NormalizedParams, estimate_bounds
from underspread.channel import FrequencyCorrelation
from underspread.estimators import KalmanChannelTracker, NoncoherentBoundEstimator, check_pairs
from underspread.exceptions import ValidationError
from underspread.oracle import simulate, track


def test_tracker_transform_matches_track(rng):
    fc = FrequencyCorrelation(0.95j, 0.5)
    tr = simulate(fc, 1.0, 0.2, 100, rng)
    est = KalmanChannelTracker(a=0.95j, sigma_z_sq=0.5, sigma_n_sq=0.2).fit()
    out = est.transform(np.column_stack([tr.x, tr.y]))
    st = track(tr, fc, 0.2)
    assert out.shape == (100, 3)
    assert np.array_equal(out[:, 0] + 1j * out[:, 1], st.mean)
    assert np.array_equal(out[:, 2], st.variance)


def test_tracker_params_roundtrip():
    est = KalmanChannelTracker(a=0.3, sigma_z_sq=2.0)
    assert est.get_params() == {"a": 0.3, "sigma_z_sq": 2.0, "sigma_n_sq": 1.0}
    assert clone(est).get_params() == est.get_params()


def test_tracker_validation():
    with pytest.raises(NotFittedError):
        KalmanChannelTracker().transform(np.ones((3, 2)))
    with pytest.raises(ValidationError):
        KalmanChannelTracker(sigma_n_sq=0.0).fit()
    with pytest.raises(ValidationError):
        check_pairs(np.ones((3, 3)))
    with pytest.raises(ValueError):
        check_pairs(np.full((3, 2), np.nan))


def test_bound_estimator_matches_engine():
    est = NoncoherentBoundEstimator(snr=0.2, a_sq=0.99, n_subcarriers=40, n_truncate=10, trials=300, random_state=4)
    est.fit()
    r = estimate_bounds(NormalizedParams(0.2, 0.99, 40, 10), McConfig(300, 4))
    assert est.result_.fingerprint() == r.fingerprint()
    assert est.L2A_ == r.L2A
    assert est.predict() == est.L2B_ == r.L2
    assert est.predict(np.zeros(3)).shape == (3,)
    assert est.score() == pytest.approx(r.L2 / r.C_csi)


def test_bound_estimator_prefix_and_validation():
    est = NoncoherentBoundEstimator(n_subcarriers=5, trials=10, prefix_multiplier=0.5).fit()
    assert est.L2B_ == 0.5 * est.L2_
    with pytest.raises(ValidationError):
        NoncoherentBoundEstimator(prefix_multiplier=0.0).fit()
    with pytest.raises(ValidationError):
        NoncoherentBoundEstimator(random_state=-3).fit()
    with pytest.raises(NotFittedError):
        NoncoherentBoundEstimator().predict()
