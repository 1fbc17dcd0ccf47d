"""Parameter derivation, bound sweeps and the oracle suite behind the command line."""
from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .blockfading import adjust_snr, derive_grid, truncation_energy
from .bounds import McConfig, NormalizedParams, estimate_bounds, perfect_csi_capacity, recursion_step
from .channel import (
    ExponentialPDP,
    FrequencyCorrelation,
    correlation_a,
    decorrelation,
    read_pdp_csv,
    response_variance,
)
from .config import ExperimentConfig
from .gaussian import (
    identity_minus_inverse_is_pds,
    inverse_minus_identity_is_pds,
    random_contraction_pds,
    random_pds,
    shrunk_determinant_below_one,
)
from .oracle import conditional_mi_with_error, simulate, track
from .streams import trial_generator

SCHEMA_VERSION = 1
ORACLE_STREAM = 7


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


# --- parameter derivation ---------------------------------------------------


def build_profile(cfg: ExperimentConfig, truncation=math.inf):
    if cfg.pdp_kind == "exponential":
        return ExponentialPDP(cfg.tau_c, truncation=truncation)
    return read_pdp_csv(cfg.pdp_table, truncation)


@dataclass(frozen=True)
class ParameterRow:
    group: str
    name: str
    value: object
    unit: str
    formula: str


@dataclass(frozen=True)
class Derived:
    """Everything the bound engine needs, plus the report rows that justify it."""

    config: ExperimentConfig
    n_subcarriers: int
    spacing: float
    trunc_energy: float
    snr_adjusted: float
    a: complex
    a_sq: float
    one_minus_a_sq: float
    sigma_z_sq: float
    prefix_multiplier: float
    c_csi: float
    ofdm: object
    rows: tuple
    warnings: tuple

    def params(self, n_subcarriers=None, snr=None) -> NormalizedParams:
        n = self.n_subcarriers if n_subcarriers is None else n_subcarriers
        nt = None if self.config.n_truncate is None else min(self.config.n_truncate, n)
        return NormalizedParams(self.snr_adjusted if snr is None else snr, self.a_sq, n, nt)


def derive_parameters(cfg: ExperimentConfig) -> Derived:
    """Derive the OFDM grid, effective SNR and correlation from the fundamentals."""
    notes = []
    ofdm = derive_grid(cfg.bandwidth, cfg.block_length, cfg.prefix_length)
    conv = cfg.spacing_convention
    if cfg.prefix_length == 0.0:
        e_trunc_report, e_trunc = 1.0, 0.0
        notes.append("prefix_length is 0: no cyclic prefix, truncation energy reported as 1 and not applied")
    else:
        full = cfg.tau_c if cfg.pdp_kind == "exponential" else build_profile(cfg)
        e_trunc = e_trunc_report = truncation_energy(full, cfg.prefix_length)
    snr_adj = adjust_snr(cfg.snr, cfg.coherence_fraction, e_trunc)
    profile = build_profile(cfg, cfg.profile_truncation)
    sigma_z_sq = response_variance(profile)
    a = correlation_a(profile, ofdm.spacing, conv)
    if cfg.a_sq is None:
        one_minus = decorrelation(profile, ofdm.spacing, conv)
        a_sq = 1.0 - one_minus
    else:
        a_sq = cfg.a_sq
        one_minus = 1.0 - a_sq
        notes.append("a_sq overridden by config; the profile only sets the phase of a")
        a = math.sqrt(a_sq) * (a / abs(a) if a != 0 else 1.0)
    c_csi = perfect_csi_capacity(snr_adj)

    theta = "2*pi*spacing" if conv.value == "cyclic" else "spacing"
    if cfg.pdp_kind == "exponential":
        a_formula = (
            f"theta={theta}; beta=theta*tau_c; q=exp(-tau_t/tau_c); "
            "1-|a|^2=(beta^2-4q*sin^2(theta*tau_t/2)/(1-q)^2)/(1+beta^2) (q=0 when tau_t=inf)"
        )
    else:
        a_formula = f"theta={theta}; |trapz(P*exp(-j*theta*tau))/trapz(P)|^2 over [0, tau_t]"
    e_formula = "exp(-prefix_length/tau_c)" if cfg.pdp_kind == "exponential" else "1 - trapz(P,[0,T_t])/trapz(P)"
    rows = [
        ParameterRow("fundamental", "pdp_kind", cfg.pdp_kind, "", "input"),
        ParameterRow("fundamental", "tau_c", cfg.tau_c if cfg.pdp_kind == "exponential" else "", "s", "input"),
        ParameterRow("fundamental", "pdp_table", cfg.pdp_table or "", "", "input"),
        ParameterRow("fundamental", "tau_t", cfg.profile_truncation, "s", "input (defaults to prefix_length)"),
        ParameterRow("fundamental", "bandwidth", cfg.bandwidth, "Hz", "input"),
        ParameterRow("fundamental", "block_length", cfg.block_length, "s", "input"),
        ParameterRow("fundamental", "prefix_length", cfg.prefix_length, "s", "input"),
        ParameterRow("fundamental", "snr", cfg.snr, "", "input"),
        ParameterRow("fundamental", "coherence_fraction", cfg.coherence_fraction, "", "input"),
        ParameterRow("fundamental", "convention", conv.value, "", "input"),
        ParameterRow("ofdm", "n_subcarriers", ofdm.n_subcarriers, "", "bandwidth*block_length"),
        ParameterRow("ofdm", "spacing", ofdm.spacing, "Hz", "1/block_length"),
        ParameterRow("ofdm", "prefix_samples", ofdm.prefix_samples, "", "bandwidth*prefix_length"),
        ParameterRow("ofdm", "trunc_energy", e_trunc_report, "", e_formula),
        ParameterRow(
            "ofdm", "snr_adjusted", snr_adj, "",
            "k=coherence_fraction*(1-trunc_energy); snr*k/(1+snr*(1-k)) (trunc_energy=0 when prefix_length=0)",
        ),
        ParameterRow("ofdm", "prefix_multiplier", ofdm.prefix_multiplier, "", "block_length/(block_length+prefix_length)"),
        ParameterRow("bound", "one_minus_a_sq", one_minus, "", a_formula if cfg.a_sq is None else "1-a_sq (override)"),
        ParameterRow("bound", "a_sq", a_sq, "", "1-one_minus_a_sq"),
        ParameterRow("bound", "a_re", a.real, "", "Re a"),
        ParameterRow("bound", "a_im", a.imag, "", "Im a"),
        ParameterRow("bound", "sigma_z_sq", sigma_z_sq, "", "energy of profile on [0, tau_t]"),
        ParameterRow("bound", "normalized_snr", snr_adj, "", "snr_adjusted"),
        ParameterRow("bound", "C_csi", c_csi, "bit/s/Hz", "exp(1/(2*snr_adjusted))*E1(1/(2*snr_adjusted))/ln 2"),
        ParameterRow("bound", "C_csi_rate", c_csi * cfg.bandwidth, "bit/s", "C_csi*bandwidth"),
    ]
    for note in notes:
        warnings.warn(note, stacklevel=2)
    return Derived(
        cfg, ofdm.n_subcarriers, ofdm.spacing, e_trunc_report, snr_adj, complex(a), a_sq, one_minus,
        sigma_z_sq, ofdm.prefix_multiplier, c_csi, ofdm, tuple(rows), tuple(notes),
    )


PARAMETER_HEADER = ["schema_version", "group", "name", "value", "unit", "formula"]


def write_parameters(derived: Derived, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "parameters.csv",
        PARAMETER_HEADER,
        [[SCHEMA_VERSION, r.group, r.name, r.value, r.unit, r.formula] for r in derived.rows],
    )
    lines = []
    group = None
    for r in derived.rows:
        if r.group != group:
            group = r.group
            lines.append(f"[{group}]")
        unit = f" {r.unit}" if r.unit else ""
        lines.append(f"  {r.name:<20} {fmt(r.value)}{unit}    # {r.formula}")
    for note in derived.warnings:
        lines.append(f"warning: {note}")
    (out / "parameters.txt").write_text("\n".join(lines) + "\n")


# --- bound sweep -------------------------------------------------------------


def default_sweep(n_max: int, points: int = 20) -> list:
    lo = min(10, n_max)
    return sorted({int(v) for v in np.round(np.geomspace(lo, n_max, points))})


@dataclass(frozen=True)
class SweepPoint:
    n_subcarriers: int
    bandwidth: float
    snr: float


def sweep_points(derived: Derived) -> list:
    cfg = derived.config
    if cfg.sweep_bandwidth:
        pts = []
        for w in cfg.sweep_bandwidth:
            grid = derive_grid(w, cfg.block_length, cfg.prefix_length)
            # fixed transmit power: per-subcarrier SNR scales inversely with bandwidth
            snr_w = cfg.snr * cfg.bandwidth / w
            e = derived.trunc_energy if cfg.prefix_length > 0.0 else 0.0
            pts.append(SweepPoint(grid.n_subcarriers, w, adjust_snr(snr_w, cfg.coherence_fraction, e)))
        return pts
    ns = list(cfg.sweep_n) or default_sweep(derived.n_subcarriers, cfg.sweep_points)
    return [SweepPoint(n, n / cfg.block_length, derived.snr_adjusted) for n in ns]


SWEEP_HEADER = [
    "schema_version", "n_subcarriers", "bandwidth", "snr_adjusted", "a_sq", "n_truncate", "trials", "seed",
    "L1", "L1_se", "L2", "L2_se", "L1A", "L1A_se", "L2A", "L2A_se", "L2B", "L2B_se",
    "C_csi", "fraction_of_csi", "fraction_of_csi_se", "L2B_rate",
]
PER_INDEX_HEADER = ["schema_version", "index", "mean", "se", "clamped_mean", "clamped_se"]


def _run_point(args):
    params, mc, ofdm = args
    start = time.perf_counter()
    result = estimate_bounds(params, mc, ofdm)
    return result, time.perf_counter() - start


def run_bound_sweep(derived: Derived, out: Path | None = None):
    """Estimate the bounds at every sweep point; returns ``[(point, result, seconds)]``."""
    cfg = derived.config
    pts = sweep_points(derived)
    tasks = []
    for pt in pts:
        mc = McConfig(cfg.trials, cfg.seed, 1 if cfg.sweep_parallel else cfg.workers)
        tasks.append((derived.params(pt.n_subcarriers, pt.snr), mc, derived.ofdm))
    if cfg.sweep_parallel and cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(tasks))) as pool:
            outcomes = list(pool.map(_run_point, tasks))
    else:
        outcomes = [_run_point(t) for t in tasks]
    runs = [(pt, r, dt) for pt, (r, dt) in zip(pts, outcomes)]
    if out is not None:
        write_sweep(runs, out)
    return runs


def write_sweep(runs, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for pt, r, _ in runs:
        p = r.params
        rows.append([
            SCHEMA_VERSION, p.n_subcarriers, pt.bandwidth, p.snr, p.a_sq, p.n_truncate, r.trials, r.master_seed,
            r.L1, r.L1_se, r.L2, r.L2_se, r.L1A, r.L1A_se, r.L2A, r.L2A_se, r.L2B, r.L2B_se,
            r.C_csi, r.fraction_of_csi, r.fraction_of_csi_se, r.L2B * pt.bandwidth,
        ])
    _write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    _, biggest, _ = max(runs, key=lambda t: t[1].params.n_subcarriers)
    info, clamped = biggest.per_index_info, biggest.per_index_clamped
    _write_csv(
        out / "per_index.csv",
        PER_INDEX_HEADER,
        [[SCHEMA_VERSION, i, info[i, 0], info[i, 1], clamped[i, 0], clamped[i, 1]] for i in range(len(info))],
    )
    # wall time is the one nondeterministic output, kept out of sweep.csv
    _write_csv(
        out / "timing.csv",
        ["n_subcarriers", "wall_time_s"],
        [[r.params.n_subcarriers, dt] for _, r, dt in runs],
    )
    (out / "plot_sweep.gp").write_text(PLOT_SCRIPT)


PLOT_SCRIPT = """\
# gnuplot script: bound as a fraction of perfect-CSI capacity, and per-index terms
set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 900,600
set output 'sweep.png'
set logscale x
set xlabel 'subcarriers N'
set ylabel 'L2B / C_csi'
plot 'sweep.csv' using 2:20:21 with yerrorlines title 'fraction of perfect-CSI capacity'
set output 'per_index.png'
set ylabel 'mean information term (bit)'
plot 'per_index.csv' using ($2+1):3 with lines title 'per-index mean'
"""


# --- oracle suite ------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""


def _unit_phase(rng) -> complex:
    return complex(np.exp(1j * rng.uniform(0.0, 2.0 * math.pi)))


def recursion_chain(x_norm_sq, a_sq, snr, scale=1.0) -> np.ndarray:
    """Normalized variances along one path; ``scale`` corrupts each step (negative control)."""
    out = np.empty(len(x_norm_sq))
    s = 1.0
    for i, x in enumerate(x_norm_sq):
        out[i] = s
        s = scale * recursion_step(s, x, a_sq, snr)
    return out


def check_tracker_equivalence(
    seed: int,
    a_sq_values=(0.0, 0.5, 1.0 - 1e-6),
    snr_values=(1e-3, 1e-2, 1.0),
    traces: int = 100,
    length: int = 1000,
    extra=(),
    scale: float = 1.0,
):
    """Kalman posterior variances against the scalar recursion, plus isotropy of the posterior.

    ``traces`` random traces are spread round-robin over the ``(a_sq, snr)``
    grid and any ``extra`` pairs.
    """
    combos = [(a, s) for a in a_sq_values for s in snr_values] + list(extra)
    worst_dev = worst_iso = 0.0
    sigma_z_sq, sigma_n_sq = 0.5, 1.0
    for t in range(max(traces, len(combos))):
        a_sq, snr = combos[t % len(combos)]
        rng = trial_generator(seed, t, ORACLE_STREAM, 0)
        fc = FrequencyCorrelation(math.sqrt(a_sq) * _unit_phase(rng), sigma_z_sq)
        sigma_x_sq = snr * sigma_n_sq / sigma_z_sq
        trace = simulate(fc, sigma_x_sq, sigma_n_sq, length, rng)
        states = track(trace, fc, sigma_n_sq)
        chain = recursion_chain(np.abs(trace.x) ** 2 / sigma_x_sq, fc.a_sq, snr, scale)
        kalman = states.cov[:, 0, 0] / sigma_z_sq
        worst_dev = max(worst_dev, float(np.max(np.abs(kalman - chain) / chain)))
        c = states.cov
        iso = np.maximum(np.abs(c[:, 0, 1]), np.abs(c[:, 0, 0] - c[:, 1, 1])) / c[:, 0, 0]
        worst_iso = max(worst_iso, float(np.max(iso)))
    return [
        CheckResult("tracker_equivalence", worst_dev, 1e-12, worst_dev <= 1e-12,
                    f"{max(traces, len(combos))} traces x {length}"),
        CheckResult("tracker_isotropy", worst_iso, 1e-12, worst_iso <= 1e-12, "posterior covariance is c*I"),
    ]


def sample_tracker_states(derived: Derived, seed: int, count: int = 24, length: int = 2000):
    """Tracker states ``(sigma_hat_sq, mu_hat)`` at log-spaced indices of one simulated trace.

    Uses ``sigma_z^2 = 0.5, sigma_n^2 = 1`` and the input variance giving the
    configured normalized SNR.  Returns ``(states, sigma_x_sq, sigma_n_sq)``.
    """
    sigma_z_sq, sigma_n_sq = 0.5, 1.0
    sigma_x_sq = derived.snr_adjusted * sigma_n_sq / sigma_z_sq
    fc = FrequencyCorrelation(derived.a if derived.a_sq > 0 else 0.0, sigma_z_sq)
    rng = trial_generator(seed, 0, ORACLE_STREAM, 1)
    length = max(length, count)
    trace = simulate(fc, sigma_x_sq, sigma_n_sq, length, rng)
    tracked = track(trace, fc, sigma_n_sq)
    idx = sorted({int(i) for i in np.round(np.geomspace(1, length, count)) - 1})
    k = 0
    while len(idx) < count:
        if k not in idx:
            idx.append(k)
        k += 1
    states = [(float(tracked.cov[i, 0, 0]), complex(tracked.mean[i])) for i in sorted(idx)]
    return states, sigma_x_sq, sigma_n_sq


def per_state_bound(sigma_hat_sq, mu_hat, sigma_x_sq, sigma_n_sq, rng, draws: int = 20000):
    """Monte Carlo bound integrand for one tracker state, averaged over the input only.

    Returns ``(mean, standard error)`` in bits.
    """
    x_sq = 2.0 * sigma_x_sq * rng.standard_exponential(draws)
    known = math.log2(1.0 + sigma_x_sq * abs(mu_hat) ** 2 / sigma_n_sq)
    v = known - np.log1p(x_sq * sigma_hat_sq / sigma_n_sq) / math.log(2.0)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(draws))


def check_mi_dominance(derived: Derived, seed: int, count: int = 24, draws: int = 20000):
    states, sx, sn = sample_tracker_states(derived, seed, count)
    worst_margin = math.inf
    worst_err = 0.0
    for j, (var, mu) in enumerate(states):
        exact, err = conditional_mi_with_error(var, mu, sx, sn)
        mean, se = per_state_bound(var, mu, sx, sn, trial_generator(seed, j, ORACLE_STREAM, 2), draws)
        worst_margin = min(worst_margin, exact - (mean - 3.0 * se))
        worst_err = max(worst_err, err)
    return [
        CheckResult("mi_dominance", worst_margin, 0.0, worst_margin >= 0.0,
                    f"{len(states)} states; min of exact - (bound - 3 SE)"),
        CheckResult("mi_quadrature", worst_err, 1e-4, worst_err < 1e-4, "max change under grid doubling (bits)"),
    ]


def check_lemmas(seed: int, instances: int = 10_000):
    rng = trial_generator(seed, 0, ORACLE_STREAM, 3)
    bad = [0, 0, 0]
    for _ in range(instances):
        d = random_contraction_pds(rng)
        bad[0] += not inverse_minus_identity_is_pds(d)
        bad[2] += not shrunk_determinant_below_one(d)
        bad[1] += not identity_minus_inverse_is_pds(random_pds(rng))
    names = ("lemma_inverse_minus_identity", "lemma_identity_minus_inverse", "lemma_shrunk_determinant")
    return [CheckResult(n, float(b), 0.0, b == 0, f"{instances} instances") for n, b in zip(names, bad)]


SCALE_TRIPLES = ((0.5, 0.0356, 1.0), (1.0, 0.0178, 1.0), (2.0, 0.0178, 2.0), (0.25, 0.0712, 1.0))


def scale_invariance_fingerprints(triples, a_sq, n_subcarriers=200, trials=256, seed=0):
    mc = McConfig(trials, seed)
    out = []
    for sz, sx, sn in triples:
        p = NormalizedParams.from_variances(sz, sx, sn, a_sq, n_subcarriers)
        out.append(estimate_bounds(p, mc).fingerprint())
    return out


def check_scale_invariance(derived: Derived, seed: int, triples=SCALE_TRIPLES):
    prints = scale_invariance_fingerprints(triples, derived.a_sq, seed=seed)
    distinct = len(set(prints)) - 1
    return [CheckResult("scale_invariance", float(distinct), 0.0, distinct == 0,
                        f"{len(triples)} variance triples with one SNR; count of extra distinct results")]


def run_oracle_suite(derived: Derived, out: Path | None = None, traces: int = 100):
    cfg = derived.config
    checks = []
    checks += check_tracker_equivalence(
        cfg.seed, traces=traces, extra=[(derived.a_sq, derived.snr_adjusted)], scale=cfg.recursion_scale
    )
    checks += check_mi_dominance(derived, cfg.seed)
    checks += check_lemmas(cfg.seed)
    checks += check_scale_invariance(derived, cfg.seed)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(
            out / "oracle_report.csv",
            ["schema_version", "check", "measured", "tolerance", "passed", "detail"],
            [[SCHEMA_VERSION, c.name, c.measured, c.tolerance, int(c.passed), c.detail] for c in checks],
        )
    return checks
