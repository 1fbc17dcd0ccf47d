import csv
import math

import pytest

from underspread.bounds import perfect_csi_capacity
from underspread.cli import main
from underspread.config import ConfigError, ExperimentConfig, load_config, read_config_file

TABLE1 = """\
tau_c = 1.7e-8
bandwidth = 5e6
block_length = 5.30e-3
prefix_length = 2e-7
snr = 0.018
coherence_fraction = 0.99
convention = paper-table
"""


@pytest.fixture
def table1(tmp_path):
    f = tmp_path / "t1.conf"
    f.write_text(TABLE1)
    return f


def read_params(path):
    with open(path) as fh:
        return {r["name"]: r["value"] for r in csv.DictReader(fh)}


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_config_precedence(table1):
    env = {"UB_SNR": "0.5", "UB_TRIALS": "7"}
    cfg = load_config(table1, {"trials": "9"}, environ=env)
    assert (cfg.snr, cfg.trials, cfg.bandwidth) == (0.5, 9, 5e6)
    assert load_config(None, environ={}).snr == ExperimentConfig().snr


def test_config_roundtrip(tmp_path, table1):
    cfg = load_config(table1, {"sweep_n": "1 10 100", "n_truncate": "20"}, environ={})
    f = tmp_path / "echo.conf"
    f.write_text(cfg.to_text())
    assert load_config(f, environ={}) == cfg


def test_config_errors_name_the_key(tmp_path):
    f = tmp_path / "bad.conf"
    f.write_text("snr = lots\n")
    with pytest.raises(ConfigError) as err:
        read_config_file(f)
    assert err.value.field == "snr"
    with pytest.raises(ConfigError) as err:
        load_config(None, {"colour": "1"}, environ={})
    assert err.value.field == "colour"
    with pytest.raises(ConfigError) as err:
        load_config(None, {"coherence_fraction": "1.5"}, environ={})
    assert err.value.field == "coherence_fraction"


def test_derive_report_is_self_contained(tmp_path, table1):
    out = tmp_path / "d"
    assert main(["derive", "--config", str(table1), "--out", str(out)]) == 0
    p = read_params(out / "parameters.csv")
    W, TB, Tt = float(p["bandwidth"]), float(p["block_length"]), float(p["prefix_length"])
    snr, eta, tc = float(p["snr"]), float(p["coherence_fraction"]), float(p["tau_c"])
    assert int(p["n_subcarriers"]) == round(W * TB) == 26500
    assert float(p["spacing"]) == pytest.approx(1 / TB, rel=1e-15)
    e = math.exp(-Tt / tc)
    assert float(p["trunc_energy"]) == pytest.approx(e, rel=1e-14)
    k = eta * (1 - e)
    assert float(p["snr_adjusted"]) == pytest.approx(snr * k / (1 + snr * (1 - k)), rel=1e-14)
    beta = tc / TB  # paper-table convention
    q = math.exp(-float(p["tau_t"]) / tc)
    ripple = 4 * q * math.sin(float(p["tau_t"]) / TB / 2) ** 2 / (1 - q) ** 2
    assert float(p["one_minus_a_sq"]) == pytest.approx((beta**2 - ripple) / (1 + beta**2), rel=1e-9)
    assert float(p["C_csi"]) == pytest.approx(perfect_csi_capacity(float(p["snr_adjusted"])), rel=1e-15)
    assert float(p["prefix_multiplier"]) == pytest.approx(TB / (TB + Tt), rel=1e-15)
    assert (out / "parameters.txt").exists()
    assert "convention = paper-table" in (out / "effective.conf").read_text()


def test_no_prefix_reports_unit_truncation_with_warning(tmp_path, table1, caplog):
    out = tmp_path / "d0"
    rc = main(["derive", "--config", str(table1), "--prefix-length=0", "--coherence-fraction=1", "--out", str(out)])
    assert rc == 0
    p = read_params(out / "parameters.csv")
    assert float(p["trunc_energy"]) == 1.0
    assert float(p["snr_adjusted"]) == 0.018
    assert "no cyclic prefix" in caplog.text


def test_malformed_grid_exits_1(tmp_path, table1, capsys):
    rc = main(["derive", "--config", str(table1), "--block-length=1.0001e-3", "--out", str(tmp_path)])
    assert rc == 1
    assert "block_length" in capsys.readouterr().err


def test_unknown_flag_exits_1(tmp_path, capsys):
    assert main(["derive", "--bogus=1", "--out", str(tmp_path)]) == 1
    assert "bogus" in capsys.readouterr().err


def test_environment_override(tmp_path, table1, monkeypatch):
    monkeypatch.setenv("UB_CONVENTION", "cyclic")
    out = tmp_path / "env"
    assert main(["derive", "--config", str(table1), "--out", str(out)]) == 0
    assert read_params(out / "parameters.csv")["convention"] == "cyclic"


def test_sweep_outputs_and_determinism(tmp_path, table1):
    args = ["sweep", "--config", str(table1), "--trials", "300", "--sweep-n=1 10 100 1000", "--n-truncate=200"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--workers", "2", "--out", str(tmp_path / "b")]) == 0
    for name in ("sweep.csv", "per_index.csv", "parameters.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = read_rows(tmp_path / "a" / "sweep.csv")
    assert [int(r["n_subcarriers"]) for r in rows] == [1, 10, 100, 1000]
    assert all(r["schema_version"] == "1" for r in rows)
    assert float(rows[0]["fraction_of_csi"]) == 0.0
    fr = [float(r["fraction_of_csi"]) for r in rows]
    se = [float(r["fraction_of_csi_se"]) for r in rows]
    assert all(b >= a - 3 * math.hypot(sa, sb) for a, b, sa, sb in zip(fr, fr[1:], se, se[1:]))
    assert len(read_rows(tmp_path / "a" / "per_index.csv")) == 1000
    assert (tmp_path / "a" / "plot_sweep.gp").exists()
    assert len(read_rows(tmp_path / "a" / "timing.csv")) == 4


def test_sweep_parallel_points_is_deterministic(tmp_path, table1):
    args = ["sweep", "--config", str(table1), "--trials", "100", "--sweep-n=5 50"]
    assert main(args + ["--out", str(tmp_path / "s")]) == 0
    assert main(args + ["--workers=2", "--sweep-parallel=true", "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "s" / "sweep.csv").read_bytes() == (tmp_path / "p" / "sweep.csv").read_bytes()


def test_default_sweep_is_log_spaced(tmp_path, table1):
    from underspread.experiment import default_sweep

    pts = default_sweep(26500)
    assert pts[0] == 10 and pts[-1] == 26500 and len(pts) == 20
    assert default_sweep(3) == [3]


def test_bandwidth_sweep(tmp_path, table1):
    out = tmp_path / "bw"
    args = ["sweep", "--config", str(table1), "--trials=50", "--block-length=1e-4", "--sweep-bandwidth=5e6 1e7"]
    assert main(args + ["--out", str(out)]) == 0
    rows = read_rows(out / "sweep.csv")
    assert [int(r["n_subcarriers"]) for r in rows] == [500, 1000]
    # per-subcarrier SNR falls as the same power spreads over more bandwidth
    assert float(rows[0]["snr_adjusted"]) > float(rows[1]["snr_adjusted"])


@pytest.mark.slow
def test_oracle_suite_passes_and_reports(tmp_path, table1):
    out = tmp_path / "o"
    assert main(["oracle", "--config", str(table1), "--traces", "18", "--out", str(out)]) == 0
    rows = read_rows(out / "oracle_report.csv")
    names = {r["check"] for r in rows}
    assert {"tracker_equivalence", "mi_dominance", "mi_quadrature", "scale_invariance"} <= names
    assert all(r["passed"] == "1" for r in rows)


def test_oracle_negative_control_exits_2(tmp_path, table1, capsys, monkeypatch):
    import underspread.experiment as ex

    # the corrupted recursion must be caught by the tracker check alone
    monkeypatch.setattr(ex, "check_mi_dominance", lambda *a, **k: [])
    monkeypatch.setattr(ex, "check_lemmas", lambda *a, **k: [])
    out = tmp_path / "neg"
    assert main(["oracle", "--config", str(table1), "--traces", "9", "--corrupt-recursion", "--out", str(out)]) == 2
    assert "tracker_equivalence" in capsys.readouterr().err


def test_degenerate_channel_suite_passes(tmp_path, table1, monkeypatch):
    import underspread.experiment as ex

    monkeypatch.setattr(ex, "check_lemmas", lambda *a, **k: [])
    out = tmp_path / "deg"
    assert main(["oracle", "--config", str(table1), "--a-sq=0", "--traces", "9", "--out", str(out)]) == 0
