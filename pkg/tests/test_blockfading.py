import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from underspread.blockfading import (
    SnrBudget,
    adjust_snr,
    cp_multiplier,
    cp_penalty,
    derive_grid,
    truncation_energy,
)
from underspread.channel import ExponentialPDP, TabulatedPDP, truncate
from underspread.exceptions import NonIntegerGridError, ValidationError


def test_published_grid():
    g = derive_grid(5e6, 5.30e-3, 2e-7)
    assert g.n_subcarriers == 26500
    assert g.spacing == pytest.approx(1.89e2, rel=0.005)
    assert g.prefix_samples == 1


def test_unit_grid():
    g = derive_grid(1.0, 1.0)
    assert (g.n_subcarriers, g.spacing) == (1, 1.0)


def test_non_integer_grid_names_field():
    with pytest.raises(NonIntegerGridError) as err:
        derive_grid(5e6, 1.0001e-3)
    assert err.value.field == "block_length"
    with pytest.raises(NonIntegerGridError) as err:
        derive_grid(5e6, 1e-3, 1.5e-7)
    assert err.value.field == "prefix_length"


def test_truncation_energy_examples():
    assert truncation_energy(17.2e-9, 0.0) == 1.0
    assert truncation_energy(17.2e-9, 200e-9) == pytest.approx(8.91e-6, rel=0.01)
    prof = TabulatedPDP([0.0, 1.0, 2.0, 3.0], [3.0, 2.0, 1.0, 0.5])
    _, kept = truncate(prof, 1.7)
    assert truncation_energy(prof, 1.7) == pytest.approx(1.0 - kept, rel=1e-15)
    assert truncation_energy(ExponentialPDP(1e-8), 3e-8) == pytest.approx(math.exp(-3.0), rel=1e-14)


def test_adjusted_snr_published_value():
    out = adjust_snr(0.018, 0.99, 8.91e-6)
    assert float(f"{out:.3g}") == 0.0178


def test_adjusted_snr_no_leakage_is_identity():
    assert adjust_snr(0.0123, 1.0, 0.0) == 0.0123


def test_adjusted_snr_bounded_at_high_snr():
    eta, e = 0.9, 1e-3
    k = eta * (1 - e)
    assert adjust_snr(1e9, eta, e) == pytest.approx(k / (1 - k), rel=1e-6)
    assert adjust_snr(math.inf, eta, e) == pytest.approx(k / (1 - k), rel=1e-15)


@given(st.floats(0.0, 1e3), st.floats(0.01, 1.0), st.floats(0.0, 0.99))
def test_adjusted_snr_never_exceeds_raw(snr, eta, e):
    assert 0.0 <= adjust_snr(snr, eta, e) <= snr * (1 + 1e-15)


def test_adjust_snr_validation():
    with pytest.raises(ValidationError):
        adjust_snr(0.1, 0.0, 0.0)
    with pytest.raises(ValidationError):
        adjust_snr(0.1, 0.5, 1.0)
    with pytest.raises(ValidationError):
        SnrBudget(-1.0, 0.5, 0.0)
    assert SnrBudget(0.018, 0.99, 8.91e-6).snr_adjusted == adjust_snr(0.018, 0.99, 8.91e-6)


def test_prefix_penalty():
    assert cp_penalty(1.7, 5.3e-3, 0.0) == 1.7
    assert cp_penalty(0.0, 5.3e-3, 2e-7) == 0.0
    m = cp_multiplier(5.30e-3, 2e-7)
    assert 1.0 - m == pytest.approx(3.77e-5, rel=1e-3)
    assert derive_grid(5e6, 5.30e-3, 2e-7).prefix_multiplier == m
