import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lookahead.cli import main
from lookahead.config import PRESETS, emit_config, parse_config, preset
from lookahead.engine import HorizonSpec
from lookahead.errors import ConfigurationError
from lookahead.grid import AxisSpec
from lookahead.harness import MetricsTable, Strategy, run_campaign
from lookahead.io import METRICS_HEADER, RunManifest, emit_curves_csv, emit_metrics_csv
from lookahead.models import ModelKind


def test_gap_preset_matches_table():
    cfg = preset("gap")
    assert cfg.model.kind is ModelKind.GAP_ACCEPTANCE
    assert cfg.parameter_axes == (AxisSpec("T_cr", 5, 10, 20), AxisSpec("sigma", 1, 5, 20))
    assert cfg.design_axis == AxisSpec("gap", 4, 12, 25)
    assert cfg.true_params == (7.0, 2.004)
    assert cfg.trials == 150


def test_other_presets():
    v = preset("visual")
    assert v.true_params == (0.6312, 2.3643) and v.trials == 200
    assert v.design_axis == AxisSpec("intensity", 0, 3, 50)
    m = preset("memory")
    assert m.model.word_count == 15 and m.trials == 80
    assert m.true_params == (0.7103, 0.0833)
    assert m.design_axis == AxisSpec("lag", 0, 50, 50)


def test_rejects_count_one():
    text = PRESETS["gap"].replace("count = 25", "count = 1")
    with pytest.raises(ConfigurationError, match="design"):
        parse_config(text)


def test_rejects_myopic_with_horizon():
    text = PRESETS["gap"].replace("horizon = 1", "horizon = 3")
    with pytest.raises(ConfigurationError, match="myopic"):
        parse_config(text)


@pytest.mark.parametrize("edit,field", [
    (("trials = 150\n", ""), "trials"),
    (("seed = 2021", "seed = 2021\nbogus = 1"), "bogus"),
    (("true = 7.0", "true = seven"), "true"),
    (("model = gap_acceptance", "model = gap_acceptance\nword_count = 15"), "word_count"),
    (("[design]", "[extra]\nx = 1\n[design]"), "extra"),
    (("strategy = myopic", "strategy = greedy"), "strategy"),
])
def test_errors_name_the_field(edit, field):
    with pytest.raises(ConfigurationError, match=field):
        parse_config(PRESETS["gap"].replace(*edit))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_round_trip(name):
    cfg = preset(name)
    assert parse_config(emit_config(cfg)) == cfg


@settings(max_examples=50, deadline=None)
@given(
    lo=st.floats(-5, 5), span=st.floats(0.01, 10), count=st.integers(2, 9),
    strategy=st.sampled_from(list(Strategy)), T=st.integers(1, 3),
    gamma=st.floats(0.01, 1.0), seed=st.integers(0, 2 ** 64 - 1),
    diag=st.booleans(), reps=st.integers(1, 1000),
)
def test_round_trip_property(lo, span, count, strategy, T, gamma, seed, diag, reps):
    if strategy is Strategy.MYOPIC:
        T = 1
    cfg = replace(preset("memory"), design_axis=AxisSpec("lag", lo + 10, lo + 10 + span, count),
                  strategy=strategy, horizon=HorizonSpec(T, gamma), seed=seed,
                  diagnostics_enabled=diag, replications=reps, diagnostics_replications=reps)
    assert parse_config(emit_config(cfg)) == cfg


def _table(diag):
    t = MetricsTable(("a", "b"), np.array([0.0, 1.0]), 1.0,
                     mse=np.array([[1.0, 2.0], [0.5, 0.25], [1 / 3, 0.1]]),
                     info_gain=np.array([0.1, 0.2, 0.3]))
    if diag:
        t.ud_mean = t.rd_mean = t.width_immediate = t.width_next = np.zeros(3)
        t.mean_immediate = t.mean_next = np.zeros((3, 2))
    return t


def test_metrics_csv(tmp_path):
    p = emit_metrics_csv(_table(False), tmp_path / "m.csv")
    lines = p.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0] == ",".join(METRICS_HEADER)
    assert lines[3] == "3,0.333333333333,0.1,0.3,,,,"
    p2 = emit_metrics_csv(_table(True), tmp_path / "d.csv")
    assert p2.read_text().splitlines()[1].split(",")[4:] == ["0"] * 4
    assert emit_metrics_csv(_table(False), tmp_path / "m2.csv").read_bytes() == p.read_bytes()


def test_curves_csv(tmp_path):
    p = emit_curves_csv(_table(True), [1, 3], tmp_path / "c.csv")
    assert len(p.read_text().splitlines()) == 1 + 2 * 2


def test_csv_deterministic_across_runs(tmp_path):
    cfg = replace(preset("gap"), replications=3, trials=8, diagnostics_enabled=True,
                  diagnostics_replications=2)
    a = emit_metrics_csv(run_campaign(cfg), tmp_path / "a.csv").read_bytes()
    b = emit_metrics_csv(run_campaign(cfg), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_manifest_round_trip():
    m = RunManifest("run", PRESETS["gap"], "0.1.0", 5, "2026-01-01T00:00:00+00:00",
                    ["x.csv"], {"k": "v"})
    assert RunManifest.from_json(m.to_json()) == m


# -- CLI ----------------------------------------------------------------------

def test_cli_presets_then_run(tmp_path, capsys):
    assert main(["presets", "--out", str(tmp_path / "p")]) == 0
    out = tmp_path / "run"
    rc = main(["run", str(tmp_path / "p" / "gap.ini"), "--replications", "10", "--trials", "15",
               "--out", str(out)])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert str(out / "metrics.csv") in manifest["outputs"]
    assert str(out / "manifest.json") in manifest["outputs"]
    assert parse_config(manifest["config"]).replications == 10
    assert len((out / "metrics.csv").read_text().splitlines()) == 16


def test_cli_compare_and_decompose(tmp_path):
    assert main(["presets", "--out", str(tmp_path)]) == 0
    cfg = str(tmp_path / "gap.ini")
    assert main(["compare", cfg, "--replications", "2", "--trials", "6",
                 "--out", str(tmp_path / "c")]) == 0
    for s in Strategy:
        assert (tmp_path / "c" / f"metrics_{s.value}.csv").exists()
    assert main(["decompose", cfg, "--replications", "2", "--trials", "6", "--at", "1,5",
                 "--out", str(tmp_path / "d")]) == 0
    curves = (tmp_path / "d" / "curves.csv").read_text().splitlines()
    assert len(curves) == 1 + 2 * 25
    rows = (tmp_path / "d" / "metrics.csv").read_text().splitlines()[1:]
    assert all(r.split(",")[4] != "" for r in rows)


def test_cli_oracle(capsys):
    assert main(["oracle", "--instances", "12"]) == 0
    out = capsys.readouterr().out
    worst = float(out.rsplit(":", 1)[1])
    assert worst <= 1e-10


def test_cli_errors(tmp_path):
    assert main(["frobnicate"]) == 1
    assert main([]) == 1
    bad = tmp_path / "bad.ini"
    bad.write_text(PRESETS["gap"].replace("count = 25", "count = 1"))
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
    assert main(["decompose", str(bad.with_name("x.ini"))]) == 2
