"""Monte Carlo evaluation of the noncoherent capacity lower bounds.

Everything here works in normalized units: the response variance, input
power and noise power enter only through ``snr = sigma_z^2 sigma_x^2 / sigma_n^2``.
Per subcarrier ``i`` a path carries the normalized estimation variance
``sigma_i'^2`` (1 at ``i = 0``), draws ``|x'_i|^2 ~ Exp(mean 2)`` and
``|mu'''_i|^2 ~ Exp(mean 2 (1 - sigma_i'^2))``, and emits the information
sample

    log2((snr |mu'''_i|^2 + 1) / (snr |x'_i|^2 sigma_i'^2 + 1)).

The same ``|x'_i|^2`` then drives the variance update to ``sigma_{i+1}'^2``.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import ValidationError
from .special import exp1_scaled
from .streams import check_seed, trial_generator

LN2 = math.log(2.0)
TRIAL_CHUNK = 256
BOUND_STREAM = 0
CSI_STREAM = 1


@dataclass(frozen=True)
class NormalizedParams:
    """``n_truncate`` (default ``n_subcarriers``) is where the truncated bounds stop summing."""

    snr: float
    a_sq: float
    n_subcarriers: int
    n_truncate: int | None = None

    def __post_init__(self):
        if not (self.snr >= 0.0 and math.isfinite(self.snr)):
            raise ValidationError("must be finite and >= 0", field="snr")
        if not 0.0 <= self.a_sq <= 1.0:
            raise ValidationError("must be in [0, 1]", field="a_sq")
        n = int(self.n_subcarriers)
        if n != self.n_subcarriers or n < 1:
            raise ValidationError("must be an integer >= 1", field="n_subcarriers")
        nt = n if self.n_truncate is None else self.n_truncate
        if int(nt) != nt or not 1 <= nt <= n:
            raise ValidationError("must be an integer in [1, n_subcarriers]", field="n_truncate")
        object.__setattr__(self, "snr", float(self.snr))
        object.__setattr__(self, "a_sq", float(self.a_sq))
        object.__setattr__(self, "n_subcarriers", n)
        object.__setattr__(self, "n_truncate", int(nt))

    @classmethod
    def from_variances(cls, sigma_z_sq, sigma_x_sq, sigma_n_sq, a_sq, n_subcarriers, n_truncate=None):
        """Collapse response, input and noise variances to their single SNR."""
        if sigma_n_sq <= 0.0:
            raise ValidationError("must be > 0", field="sigma_n_sq")
        if sigma_z_sq < 0.0 or sigma_x_sq < 0.0:
            raise ValidationError("variances must be >= 0")
        return cls(sigma_z_sq * sigma_x_sq / sigma_n_sq, a_sq, n_subcarriers, n_truncate)


@dataclass(frozen=True)
class McConfig:
    trials: int = 1000
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValidationError("must be an integer >= 1", field="trials")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ValidationError("must be an integer >= 1", field="workers")
        object.__setattr__(self, "master_seed", check_seed(self.master_seed))


def recursion_step(sigma_prev_sq, x_norm_sq, a_sq, snr):
    """Normalized estimation variance at the next subcarrier.

    ``(1 - a_sq) + a_sq / (1/sigma_prev_sq + snr * x_norm_sq)``, written so that
    ``sigma_prev_sq = 0`` is the limit rather than a division by zero.
    Accepts scalars or arrays.
    """
    posterior = sigma_prev_sq / (1.0 + snr * x_norm_sq * sigma_prev_sq)
    return (1.0 - a_sq) + a_sq * posterior


def information_sample(snr, mu_sq, x_sq, sigma_sq):
    """One draw of the per-subcarrier bound integrand, in bits."""
    return (np.log1p(snr * mu_sq) - np.log1p(snr * x_sq * sigma_sq)) / LN2


class PathTerms(NamedTuple):
    info: np.ndarray
    clamped: np.ndarray
    sigma_sq: np.ndarray


def _draw_path(rng: np.random.Generator, n: int):
    x_sq = 2.0 * rng.standard_exponential(n)
    mu_unit = 2.0 * rng.standard_exponential(n)
    return x_sq, mu_unit


def _simulate(p: NormalizedParams, x_sq: np.ndarray, mu_unit: np.ndarray):
    """Run the recursion down axis 0 of ``(n, k)`` draw arrays, ``k`` paths at once.

    Overwrites the inputs: ``x_sq`` becomes the information samples and
    ``mu_unit`` their clamped version.  Returns the extreme variances seen.
    """
    n, k = x_sq.shape
    snr, a_sq = p.snr, p.a_sq
    floor = 1.0 - a_sq
    s = np.ones(k)
    s_min, s_max = 1.0, 1.0
    for i in range(n):
        x = x_sq[i]
        measured = snr * x * s
        v = (np.log1p(snr * mu_unit[i] * (1.0 - s)) - np.log1p(measured)) / LN2
        s = floor + a_sq * (s / (1.0 + measured))
        x_sq[i] = v
        np.maximum(v, 0.0, out=mu_unit[i])
        s_min = min(s_min, float(s.min()))
        s_max = max(s_max, float(s.max()))
    return s_min, s_max


def sample_path_terms(p: NormalizedParams, rng: np.random.Generator) -> PathTerms:
    """Information samples (raw and clamped at zero) along one simulated path.

    ``sigma_sq[i]`` is the normalized variance in force at subcarrier ``i``.
    """
    n = p.n_subcarriers
    x_sq, mu_unit = _draw_path(rng, n)
    sigma = np.empty(n)
    s = 1.0
    for i in range(n):
        sigma[i] = s
        s = recursion_step(s, x_sq[i], p.a_sq, p.snr)
    info = (np.log1p(p.snr * mu_unit * (1.0 - sigma)) - np.log1p(p.snr * x_sq * sigma)) / LN2
    return PathTerms(info, np.maximum(info, 0.0), sigma)


def truncated_average(values, n_truncate: int):
    """Average over ``n`` indices using only the first ``n_truncate`` of them.

    Index ``n_truncate`` stands in for every index from there on, which is a
    lower bound when the sequence is non-decreasing.  Works along axis 0.
    """
    values = np.asarray(values)
    n = values.shape[0]
    head = values[:n_truncate].sum(axis=0)
    if n_truncate == n:
        return head / n
    return (head + (n - n_truncate) * values[n_truncate]) / n


def _run_chunk(task):
    p, master_seed, start, stop = task
    n, k = p.n_subcarriers, stop - start
    x_sq = np.empty((n, k))
    mu_unit = np.empty((n, k))
    for j, trial in enumerate(range(start, stop)):
        x_sq[:, j], mu_unit[:, j] = _draw_path(trial_generator(master_seed, trial, BOUND_STREAM), n)
    s_min, s_max = _simulate(p, x_sq, mu_unit)
    info, clamped = x_sq, mu_unit
    out = {"count": k, "sigma_range": (s_min, s_max)}
    for name, arr in (("info", info), ("clamped", clamped)):
        mean = arr.mean(axis=1)
        out[name] = (mean, ((arr - mean[:, None]) ** 2).sum(axis=1))
    out["trial"] = np.stack(
        [
            info.mean(axis=0),
            clamped.mean(axis=0),
            truncated_average(info, p.n_truncate),
            truncated_average(clamped, p.n_truncate),
        ]
    )
    return out


def _merge(a, b):
    # pairwise (count, mean, M2) combination; order of calls fixes the rounding
    na, (ma, qa) = a
    nb, (mb, qb) = b
    n = na + nb
    delta = mb - ma
    mean = ma + delta * (nb / n)
    q = qa + qb + delta * delta * (na * nb / n)
    return n, (mean, q)


def _se(m2, count):
    if count < 2:
        return np.full_like(np.asarray(m2, dtype=float), np.nan)
    return np.sqrt(m2 / (count - 1) / count)


def _sha(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(np.asarray(a, dtype=float)).tobytes())
    return h.hexdigest()


@dataclass(frozen=True, eq=False)
class BoundResult:
    """Monte Carlo estimates (bits/s/Hz) with standard errors.

    ``per_index_info`` and ``per_index_clamped`` are ``(n, 2)`` arrays of
    ``(mean, standard error)`` for the raw and clamped per-subcarrier terms.
    """

    params: NormalizedParams
    trials: int
    master_seed: int
    per_index_info: np.ndarray
    per_index_clamped: np.ndarray
    L1: float
    L2: float
    L1A: float
    L2A: float
    L2B: float
    L1_se: float
    L2_se: float
    L1A_se: float
    L2A_se: float
    L2B_se: float
    C_csi: float
    prefix_multiplier: float = 1.0
    sigma_range: tuple = (1.0, 1.0)
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def fraction_of_csi(self) -> float:
        return self.L2B / self.C_csi if self.C_csi > 0.0 else 0.0

    @property
    def fraction_of_csi_se(self) -> float:
        return self.L2B_se / self.C_csi if self.C_csi > 0.0 else 0.0

    def scalars(self) -> dict:
        return {
            "L1": self.L1, "L1_se": self.L1_se,
            "L2": self.L2, "L2_se": self.L2_se,
            "L1A": self.L1A, "L1A_se": self.L1A_se,
            "L2A": self.L2A, "L2A_se": self.L2A_se,
            "L2B": self.L2B, "L2B_se": self.L2B_se,
            "C_csi": self.C_csi,
            "fraction_of_csi": self.fraction_of_csi,
            "fraction_of_csi_se": self.fraction_of_csi_se,
        }

    def fingerprint(self) -> str:
        """Digest of every numeric output; equal digests mean bit-identical results."""
        return _sha(
            self.per_index_info,
            self.per_index_clamped,
            list(self.scalars().values()),
        )


def estimate_bounds(p: NormalizedParams, mc: McConfig = McConfig(), ofdm=None) -> BoundResult:
    """Average path samples over ``mc.trials`` independent paths.

    Trials are split into fixed chunks of ``TRIAL_CHUNK`` and merged in chunk
    order, so the result does not depend on ``mc.workers``.  ``ofdm`` (an
    ``OfdmConfig``) supplies the cyclic-prefix discount for ``L2B``.
    """
    tasks = [
        (p, mc.master_seed, start, min(start + TRIAL_CHUNK, mc.trials))
        for start in range(0, mc.trials, TRIAL_CHUNK)
    ]
    if mc.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(mc.workers, len(tasks))) as pool:
            chunks = list(pool.map(_run_chunk, tasks))
    else:
        chunks = [_run_chunk(t) for t in tasks]

    info = (chunks[0]["count"], chunks[0]["info"])
    clamped = (chunks[0]["count"], chunks[0]["clamped"])
    for c in chunks[1:]:
        info = _merge(info, (c["count"], c["info"]))
        clamped = _merge(clamped, (c["count"], c["clamped"]))
    trial = np.concatenate([c["trial"] for c in chunks], axis=1)
    s_min = min(c["sigma_range"][0] for c in chunks)
    s_max = max(c["sigma_range"][1] for c in chunks)

    means = trial.mean(axis=1)
    if mc.trials > 1:
        ses = trial.std(axis=1, ddof=1) / math.sqrt(mc.trials)
    else:
        ses = np.full(4, np.nan)
    mult = 1.0 if ofdm is None else ofdm.prefix_multiplier
    return BoundResult(
        params=p,
        trials=mc.trials,
        master_seed=mc.master_seed,
        per_index_info=np.column_stack([info[1][0], _se(info[1][1], mc.trials)]),
        per_index_clamped=np.column_stack([clamped[1][0], _se(clamped[1][1], mc.trials)]),
        L1=float(means[0]),
        L2=float(means[1]),
        L1A=float(means[2]),
        L2A=float(means[3]),
        L2B=float(means[1]) * mult,
        L1_se=float(ses[0]),
        L2_se=float(ses[1]),
        L1A_se=float(ses[2]),
        L2A_se=float(ses[3]),
        L2B_se=float(ses[1]) * mult,
        C_csi=perfect_csi_capacity(p.snr),
        prefix_multiplier=mult,
        sigma_range=(s_min, s_max),
    )


def perfect_csi_capacity(snr: float, method: str = "closed-form", trials: int = 10**7, seed: int = 0) -> float:
    """``E[log2(1 + snr |z|^2)]`` with ``|z|^2 ~ Exp(mean 2)``.

    The closed form is ``exp(1/(2 snr)) E1(1/(2 snr)) / ln 2``.
    """
    if not snr >= 0.0:
        raise ValidationError("must be >= 0", field="snr")
    if method == "monte-carlo":
        return perfect_csi_capacity_mc(snr, trials, seed)[0]
    if method != "closed-form":
        raise ValidationError(f"unknown method {method!r}", field="method")
    if snr == 0.0:
        return 0.0
    if math.isinf(snr):
        return math.inf
    return exp1_scaled(0.5 / snr) / LN2


def perfect_csi_capacity_mc(snr: float, trials: int = 10**7, seed: int = 0, block: int = 10**6):
    """Sample mean and standard error of the perfect-CSI capacity integrand."""
    if not snr >= 0.0:
        raise ValidationError("must be >= 0", field="snr")
    total, total_sq, done, b = 0.0, 0.0, 0, 0
    while done < trials:
        m = min(block, trials - done)
        z_sq = 2.0 * trial_generator(seed, b, CSI_STREAM).standard_exponential(m)
        v = np.log1p(snr * z_sq) / LN2
        total += float(v.sum())
        total_sq += float((v * v).sum())
        done += m
        b += 1
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    return mean, math.sqrt(var / trials)
