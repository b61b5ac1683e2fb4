import csv
import io

import pytest

from hvnsim.cli import main
from hvnsim.config import SWEEPS, ConfigError, apply_overrides, build, flatten, parse_lines, parse_sweep, scenario
from hvnsim.drrm import SchemeKind
from hvnsim.engine import RunConfig
from hvnsim.experiments import STAT_COLUMNS

TINY = ["--set", "duration=1", "--set", "highway.vehicleCount=8", "--replicates", "1"]


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_emits_header_and_one_row(capsys):
    code, out, err = cli(capsys, "run", *TINY)
    assert code == 0
    table = rows(out)
    assert table[0] == ["scheme"] + STAT_COLUMNS
    assert len(table) == 2 and table[1][0] == "qos"
    assert "vho mean" in err


def test_missing_config_file(capsys, tmp_path):
    code, _, err = cli(capsys, "run", "--config", str(tmp_path / "nope.cfg"))
    assert code == 2
    assert "cannot read config" in err


def test_unknown_key(capsys):
    code, _, err = cli(capsys, "run", "--set", "radio.adhoc.bogus=1")
    assert code == 2 and "unknown config key" in err


def test_bad_value(capsys):
    assert cli(capsys, "run", "--set", "duration=soon")[0] == 2


def test_periodic_flag_mapping(capsys, tmp_path):
    out = tmp_path / "p.csv"
    code, _, _ = cli(capsys, "run", *TINY, "--scheme", "periodic", "--period", "4", "--out", str(out))
    assert code == 0
    assert rows(out.read_text())[1][0] == "periodic:4"


def test_period_without_periodic_scheme(capsys):
    assert cli(capsys, "run", *TINY, "--scheme", "qos", "--period", "4")[0] == 0
    assert cli(capsys, "run", *TINY, "--period", "4")[0] == 2


def test_precedence_flags_over_file_over_defaults(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("# comment\nduration = 7\nseed=5\nqos.rFactor=0.5  # trailing\n")
    cfg = build(str(f), ["duration=9"])
    assert cfg.duration == 9.0
    assert cfg.seed == 5
    assert cfg.qos.r_factor == 0.5
    assert cfg.highway.vehicle_count == scenario().highway.vehicle_count
    assert build(str(f), [], paper_scale=True).highway.vehicle_count == 150


def test_seed_flag_and_env(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("HVNSIM_SEED", "11")
    a, b, c = (tmp_path / n for n in ("a", "b", "c"))
    cli(capsys, "run", *TINY, "--trace", str(a), "--out", str(tmp_path / "x.csv"))
    cli(capsys, "run", *TINY, "--seed", "11", "--trace", str(b), "--out", str(tmp_path / "y.csv"))
    cli(capsys, "run", *TINY, "--seed", "12", "--trace", str(c), "--out", str(tmp_path / "z.csv"))
    assert a.read_text() == b.read_text() != c.read_text()
    monkeypatch.setenv("HVNSIM_SEED", "eleven")
    assert cli(capsys, "run", *TINY)[0] == 2


def test_csv_is_byte_identical_across_runs(capsys):
    _, first, _ = cli(capsys, "sweep", *TINY, "qos.rFactor=0.1,0.5")
    _, second, _ = cli(capsys, "sweep", *TINY, "qos.rFactor=0.1,0.5")
    assert first == second


def test_parallel_sweep_keeps_order(capsys):
    _, serial, _ = cli(capsys, "sweep", *TINY, "--replicates", "2", "qos.rFactor=0.1,0.25,0.5")
    _, parallel, _ = cli(capsys, "sweep", *TINY, "--replicates", "2", "--workers", "2", "qos.rFactor=0.1,0.25,0.5")
    assert serial == parallel


def test_one_axis_sweep(capsys):
    _, out, _ = cli(capsys, "sweep", *TINY, "fig4a")
    table = rows(out)
    assert table[0][:2] == ["scheme", "qos.rFactor"]
    assert [r[1] for r in table[1:]] == ["0.1", "0.25", "0.5"]


def test_two_axis_sweep(capsys):
    _, out, _ = cli(capsys, "sweep", *TINY, "qos.rFactor=0.1,0.25,0.5", "qos.rTolerance=0.2,0.5,0.8")
    table = rows(out)
    assert len(table) == 1 + 9
    assert [tuple(r[1:3]) for r in table[1:4]] == [("0.1", "0.2"), ("0.1", "0.5"), ("0.1", "0.8")]


def test_scheme_preset(capsys):
    _, out, _ = cli(capsys, "sweep", *TINY, "fig6")
    table = rows(out)
    assert table[0][0] == "scheme"
    assert [r[0] for r in table[1:]] == ["qos"] + [f"periodic:{p}" for p in (2, 4, 6, 8, 10)] + ["nobfa", "nolte"]
    nolte = dict(zip(table[0], table[-1]))
    assert float(nolte["vho_max"]) == 0.0 and float(nolte["goodput_lte"]) == 0.0


def test_compare_table_and_exit_code(capsys):
    code, out, err = cli(capsys, "compare", *TINY)
    table = rows(out)
    assert [r[0] for r in table[1:]] == ["qos", "periodic:4", "nobfa", "nolte"]
    assert {"goodput_adhoc", "goodput_lte"} <= set(table[0])
    lines = [l for l in err.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert lines
    assert code == (0 if all(l.startswith("PASS") for l in lines) else 4)
    assert any("nolte_zero_vho" in l and l.startswith("PASS") for l in lines)


def test_bad_sweep_spec():
    with pytest.raises(ConfigError):
        parse_sweep(["qos.rFactor"])
    with pytest.raises(ConfigError):
        parse_sweep(["qos.rFactor=0.1", "qos.rFactor=0.2"])
    with pytest.raises(ConfigError):
        parse_sweep(["nope.key=1"])


def test_every_leaf_is_settable():
    cfg = RunConfig()
    flat = flatten(cfg)
    assert "radio.adhoc.queueCapacity" in flat and "scheme" in flat
    assert apply_overrides(RunConfig(), flat) == cfg


def test_snake_case_keys_and_schemes():
    cfg = apply_overrides(RunConfig(), [("radio.adhoc.queue_capacity", "8"), ("scheme", "periodic:6")])
    assert cfg.radio.adhoc.queue_capacity == 8
    assert cfg.scheme == SchemeKind("periodic", 6.0)


def test_section_key_rejected():
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), {"radio.adhoc": "1"})
    with pytest.raises(ConfigError):
        parse_lines("no equals sign here")


def test_presets_resolve():
    for name in SWEEPS:
        assert parse_sweep([name])
