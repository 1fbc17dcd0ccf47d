"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed together at the end of the run.
"""
import math
import os
import time

import numpy as np
import pytest

from underspread.bounds import McConfig, NormalizedParams, estimate_bounds, perfect_csi_capacity, perfect_csi_capacity_mc
from underspread.channel import FrequencyCorrelation
from underspread.config import ExperimentConfig
from underspread.experiment import (
    check_lemmas,
    check_mi_dominance,
    check_tracker_equivalence,
    derive_parameters,
    scale_invariance_fingerprints,
)
from underspread.oracle import simulate
from underspread.streams import trial_generator

TABLE1 = ExperimentConfig(
    tau_c=1.7e-8,
    bandwidth=5e6,
    block_length=5.30e-3,
    prefix_length=2e-7,
    snr=1.80e-2,
    coherence_fraction=0.99,
    convention="paper-table",
)
SEED = 0
HEADLINE_TRIALS = 10_000
N_TRUNCATE = 2000


def within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def test_table1_reproduction(criterion):
    start = time.perf_counter()
    d = derive_parameters(TABLE1)
    e_trunc = derive_parameters(TABLE1.replace(tau_c=17.2e-9)).trunc_energy
    elapsed = time.perf_counter() - start
    checks = {
        "N": d.n_subcarriers == 26500,
        "spacing": within(d.spacing, 1.89e2, 0.005),
        "snr'": within(d.snr_adjusted, 1.78e-2, 0.005),
        "1-|a|^2": within(d.one_minus_a_sq, 1.03e-11, 0.05),
        "E_trunc": within(e_trunc, 8.91e-6, 0.01),
        "runtime": elapsed < 1.0,
    }
    ok = all(checks.values())
    criterion(
        "parameter-table reproduction",
        ok,
        f"N={d.n_subcarriers} spacing={d.spacing:.4g} snr'={d.snr_adjusted:.4g} "
        f"1-|a|^2={d.one_minus_a_sq:.4g} E_trunc={e_trunc:.4g} ({elapsed:.2f}s)",
    )
    assert ok, checks


def test_perfect_csi_reference(criterion):
    start = time.perf_counter()
    c = perfect_csi_capacity(0.0180)
    mean, se = perfect_csi_capacity_mc(0.0180, 10**7, seed=SEED)
    elapsed = time.perf_counter() - start
    rate = c * 5e6
    z = abs(mean - c) / se
    ok = 245e3 <= rate <= 255e3 and z <= 4.0 and elapsed < 10.0
    criterion("perfect-CSI reference", ok, f"{rate / 1e3:.2f} kbit/s, MC |z|={z:.2f} ({elapsed:.1f}s)")
    assert ok


@pytest.fixture(scope="module")
def headline():
    d = derive_parameters(TABLE1)
    params = NormalizedParams(d.snr_adjusted, d.a_sq, d.n_subcarriers, N_TRUNCATE)
    mc = McConfig(HEADLINE_TRIALS, SEED, os.cpu_count() or 1)
    return estimate_bounds(params, mc, d.ofdm)


def test_headline_bound(criterion, headline):
    r = headline
    frac, se = r.fraction_of_csi, r.fraction_of_csi_se
    lo, hi = frac - 3 * se, frac + 3 * se
    ok = frac >= 0.999 and lo <= 0.9999 <= hi
    criterion(
        "headline bound",
        ok,
        f"L2B/C_csi={frac:.5f} +/- {se:.1g} (3-SE interval [{lo:.5f}, {hi:.5f}]; "
        f"need >= 0.999 and 0.9999 inside); L2A/C_csi={r.L2A / r.C_csi:.4f}",
    )
    assert ok


def test_monotonicity(criterion, headline):
    worst = math.inf
    bad = 0
    for arr in (headline.per_index_info, headline.per_index_clamped):
        m, s = arr[:N_TRUNCATE, 0], arr[:N_TRUNCATE, 1]
        drop = m[1:] - m[:-1]
        tol = 3 * np.hypot(s[1:], s[:-1])
        bad += int(np.sum(drop < -tol))
        z = np.where(tol > 0, drop / np.where(tol > 0, tol, 1.0) * 3, 0.0)
        worst = min(worst, float(z.min()))
    ok = bad == 0
    criterion(
        "monotonicity",
        ok,
        f"{bad} adjacent drops beyond 3 combined SE over 2 x {N_TRUNCATE - 1} pairs (worst z={worst:.2f})",
    )
    assert ok


def test_tracker_equivalence(criterion):
    start = time.perf_counter()
    checks = check_tracker_equivalence(SEED, traces=100, length=1000)
    elapsed = time.perf_counter() - start
    dev = checks[0].measured
    ok = dev <= 1e-12 and elapsed < 30.0
    criterion("tracker equivalence", ok, f"max relative deviation {dev:.2e} over 100 x 1000 ({elapsed:.1f}s)")
    assert ok


def test_scale_invariance(criterion):
    d = derive_parameters(TABLE1)
    triples = ((0.5, 0.0356, 1.0), (1.0, 0.0178, 1.0), (2.0, 1.0, 112.36))
    prints = scale_invariance_fingerprints(triples, d.a_sq, n_subcarriers=N_TRUNCATE, trials=256, seed=SEED)
    same = [p == prints[0] for p in prints]
    ok = all(same)
    snrs = [sz * sx / sn for sz, sx, sn in triples]
    criterion(
        "scale invariance",
        ok,
        "bit-identical to first: " + ", ".join(f"{t}->{s}" for t, s in zip(triples, same))
        + " (snr " + ", ".join(repr(s) for s in snrs) + ")",
    )
    assert ok


def test_mi_dominance(criterion):
    start = time.perf_counter()
    d = derive_parameters(TABLE1)
    dominance, quadrature = check_mi_dominance(d, SEED, count=24)
    elapsed = time.perf_counter() - start
    ok = dominance.passed and quadrature.passed and elapsed < 300
    criterion(
        "MI dominance",
        ok,
        f"24 states, min margin {dominance.measured:.3g} bits, grid-doubling change "
        f"{quadrature.measured:.2g} bits ({elapsed:.1f}s)",
    )
    assert ok


def test_lemma_predicates(criterion):
    start = time.perf_counter()
    checks = check_lemmas(SEED, 10_000)
    elapsed = time.perf_counter() - start
    violations = sum(int(c.measured) for c in checks)
    ok = violations == 0 and elapsed < 5.0
    criterion("lemma predicates", ok, f"{violations} violations in 3 x 10^4 instances ({elapsed:.1f}s)")
    assert ok


def test_channel_statistics(criterion):
    sigma_z_sq, n, batches = 0.5, 10**6, 100
    worst = 0.0
    for k, a in enumerate([0.0, 0.5, -0.9, 0.7 * np.exp(1j), 0.99j]):
        fc = FrequencyCorrelation(a, sigma_z_sq)
        z = simulate(fc, 1.0, 1.0, n, trial_generator(SEED, k, 99)).z
        prod = z[1:] * np.conj(z[:-1])
        means = prod[: (n - 1) // batches * batches].reshape(batches, -1).mean(axis=1)
        se_im = means.imag.std(ddof=1) / math.sqrt(batches)
        se_re = means.real.std(ddof=1) / math.sqrt(batches)
        err = prod.mean() - 2 * sigma_z_sq * fc.a
        worst = max(worst, abs(err.real) / se_re, abs(err.imag) / se_im)
    ok = worst <= 3.0
    criterion("channel statistics", ok, f"worst |z| of lag-1 moment over 5 values of a: {worst:.2f}")
    assert ok
