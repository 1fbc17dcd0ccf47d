"""OFDM block-fading parameterization: subcarrier grid, SNR bookkeeping, prefix penalty."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import ExponentialPDP, truncate
from .exceptions import NonIntegerGridError, ValidationError

INTEGRALITY_TOL = 1e-6


@dataclass(frozen=True)
class OfdmConfig:
    bandwidth: float
    block_length: float
    prefix_length: float
    n_subcarriers: int
    spacing: float

    @property
    def prefix_samples(self) -> int:
        return round(self.bandwidth * self.prefix_length)

    @property
    def prefix_multiplier(self) -> float:
        return cp_multiplier(self.block_length, self.prefix_length)


def _as_integer(value: float, field: str) -> int:
    n = round(value)
    if abs(value - n) > INTEGRALITY_TOL * max(1.0, abs(value)):
        raise NonIntegerGridError(f"product {value!r} is not an integer", field=field)
    return int(n)


def derive_grid(bandwidth: float, block_length: float, prefix_length: float = 0.0) -> OfdmConfig:
    """Subcarrier count ``W*T_B`` and spacing ``1/T_B`` for a block of length ``T_B``."""
    if not bandwidth > 0.0:
        raise ValidationError("must be > 0", field="bandwidth")
    if not block_length > 0.0:
        raise ValidationError("must be > 0", field="block_length")
    if not prefix_length >= 0.0:
        raise ValidationError("must be >= 0", field="prefix_length")
    n = _as_integer(bandwidth * block_length, "block_length")
    _as_integer(bandwidth * prefix_length, "prefix_length")
    if n < 1:
        raise NonIntegerGridError("block holds no subcarriers", field="block_length")
    return OfdmConfig(bandwidth, block_length, prefix_length, n, 1.0 / block_length)


def truncation_energy(tau_c, prefix_length: float) -> float:
    """Fraction of profile energy beyond the cyclic prefix.

    ``tau_c`` is either the time constant of a unit-energy exponential profile,
    giving ``exp(-T_t / tau_c)``, or any profile object, in which case the
    truncated-away fraction is computed from :func:`channel.truncate`.
    """
    if prefix_length < 0.0:
        raise ValidationError("must be >= 0", field="prefix_length")
    if isinstance(tau_c, (int, float)):
        if not tau_c > 0.0:
            raise ValidationError("must be > 0", field="tau_c")
        return math.exp(-prefix_length / tau_c)
    if prefix_length == 0.0:
        return 1.0
    if isinstance(tau_c, ExponentialPDP) and math.isinf(tau_c.truncation):
        return math.exp(-prefix_length / tau_c.tau_c)
    _, retained = truncate(tau_c, prefix_length)
    return 1.0 - retained


def adjust_snr(snr: float, coherence_fraction: float, trunc_energy: float) -> float:
    """Effective SNR once the varying and truncated energy is counted as noise."""
    if not snr >= 0.0:
        raise ValidationError("must be >= 0", field="snr")
    if not 0.0 < coherence_fraction <= 1.0:
        raise ValidationError("must be in (0, 1]", field="coherence_fraction")
    if not 0.0 <= trunc_energy < 1.0:
        raise ValidationError("must be in [0, 1)", field="trunc_energy")
    kept = coherence_fraction * (1.0 - trunc_energy)
    if kept == 1.0:
        return snr
    if math.isinf(snr):
        return kept / (1.0 - kept)
    return snr * kept / (1.0 + snr * (1.0 - kept))


def cp_multiplier(block_length: float, prefix_length: float) -> float:
    return block_length / (block_length + prefix_length)


def cp_penalty(rate: float, block_length: float, prefix_length: float) -> float:
    """Rate after discounting the cyclic prefix, which carries no information."""
    if not rate >= 0.0:
        raise ValidationError("must be >= 0", field="rate")
    if not block_length > 0.0 or not prefix_length >= 0.0:
        raise ValidationError("block must be > 0 and prefix >= 0")
    return rate * cp_multiplier(block_length, prefix_length)


@dataclass(frozen=True)
class SnrBudget:
    snr_raw: float
    coherence_fraction: float
    trunc_energy: float

    def __post_init__(self):
        adjust_snr(self.snr_raw, self.coherence_fraction, self.trunc_energy)

    @property
    def snr_adjusted(self) -> float:
        return adjust_snr(self.snr_raw, self.coherence_fraction, self.trunc_energy)
