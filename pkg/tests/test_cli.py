from __future__ import annotations

import math

import pytest

from refinery import cli
from refinery.evolution import KrylovConvergenceError
from refinery.experiments import (
    ConfigError,
    ExperimentConfig,
    gadget_check,
    parse_config,
    parse_shift,
    run_busch,
)
from refinery.records import RunRecord, Table


def write(tmp_path, text, name="cfg.txt"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_config_fills_defaults():
    cfg = parse_config("# comment\n[busch]\nK = 2, 3\nt_sweep = 1, 2.5\nmu = gap\n").validate()
    assert cfg.params == {"K": (2, 3), "n_low": 2, "n_high": 10, "g": 1.0}
    assert cfg.T_sweep == (1.0, 2.5)
    assert parse_shift(cfg.mu, "busch").mode == "auto_gap"


@pytest.mark.parametrize(
    "text",
    [
        "K = 2\n",
        "[nope]\n",
        "[busch]\nK = x\n",
        "[busch]\ncolour = red\n",
        "[busch]\n[busch]\n",
        "[busch]\nn_high = -3\n",
        "[hubbard_cluster]\ncluster = 6\n",
        "[woods_saxon]\nnuclide = U238\n",
        "[busch]\nt_sweep = -1\n",
        "[busch]\nmu = sideways\n",
    ],
)
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text).validate()


def test_shift_parsing():
    assert parse_shift("offset:12.5", "hubbard_cluster").value == 12.5
    assert parse_shift("-3", "woods_saxon").value == -3.0
    assert parse_shift("auto", "woods_saxon").value == 0.0


def test_table_roundtrip_keeps_types():
    t = Table(["label", "x", "n", "ok"])
    t.add("5", 0.1 + 0.2, 3, True)
    back = Table.from_csv(t.to_csv(), t.types)
    assert back.rows == t.rows
    assert t.to_csv().endswith("\n") and "\r" not in t.to_csv()


def test_busch_record_roundtrip_and_reproducible(tmp_path):
    cfg = lambda: ExperimentConfig("busch", {"K": (2,)}, T_sweep=(0.5, 3.0), steps=64)  # noqa: E731
    rec = run_busch(cfg())
    paths = rec.write(tmp_path / "a.csv")
    back = RunRecord.read(tmp_path / "a.csv")
    assert back.parameters == rec.parameters
    assert back.tables["main"].rows == rec.tables["main"].rows
    assert back.tables["main"].columns[1] == "T_1/hbar_omega"
    run_busch(cfg()).write(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert [p.name for p in paths] == ["a.csv", "a.csv.record"]
    assert all(0 <= x <= 1 + 1e-9 for x in rec.tables["main"].column("overlap"))
    assert rec.parameters["K=2.E0_low"] == pytest.approx(1.3782, abs=5e-4)


def test_cli_busch_writes_outputs(tmp_path, capsys):
    out = tmp_path / "busch.csv"
    cfg = write(tmp_path, "[busch]\nK = 2\nsteps = 32\n")
    assert cli.main(["busch", "--config", str(cfg), "--out", str(out), "--t-sweep", "1,2", "--workers", "2"]) == 0
    assert out.exists() and (tmp_path / "busch.csv.record").exists()
    rows = RunRecord.read(out).tables["main"].rows
    assert [r[1] for r in rows] == [1.0, 2.0]
    assert "overlap" in capsys.readouterr().out


def test_cli_gadget_exit_codes(tmp_path, capsys):
    assert cli.main(["gadget_check", "--out", str(tmp_path / "g.csv")]) == 0
    assert "PASS" in capsys.readouterr().out
    bad = write(tmp_path, "[gadget_check]\nangle = 0.5\n")
    assert cli.main(["gadget_check", "--config", str(bad), "--out", str(tmp_path / "g.csv")]) == 4
    assert "first mismatch" in capsys.readouterr().out


def test_gadget_default_passes():
    report = gadget_check(math.pi / 4)
    assert report.passed and report.unitary_deviation < 1e-10


def test_cli_config_error(tmp_path, capsys):
    cfg = write(tmp_path, "[busch]\nK = 2\n")
    assert cli.main(["woods_saxon", "--config", str(cfg)]) == 2
    assert cli.main(["busch", "--config", str(tmp_path / "missing.txt")]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_capacity_error(tmp_path, capsys):
    cfg = write(tmp_path, "[busch]\nK = 6\nn_high = 20\n")
    assert cli.main(["busch", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 3
    assert "dimension" in capsys.readouterr().err


def test_cli_fermi_degeneracy_is_config_error(tmp_path):
    cfg = write(tmp_path, "[woods_saxon]\nnuclide = Si28\n")
    assert cli.main(["woods_saxon", "--config", str(cfg), "--out", str(tmp_path / "x.csv"), "--t-sweep", "0"]) == 2


def test_cli_numerical_failure(tmp_path, monkeypatch):
    def boom(cfg):
        raise KrylovConvergenceError("forced")

    monkeypatch.setitem(cli.RUNNERS, "busch", boom)
    assert cli.main(["busch", "--out", str(tmp_path / "x.csv")]) == 4
