# tests/test_cli.py

import json
import time
from decimal import Decimal
from pathlib import Path

import pandas as pd
import pytest

import gcssim
from gcssim.analytics import check_bounds, skews
from gcssim.config import NS, PS
from gcssim.engine import run
from gcssim.errors import ConfigError, NotFound, UnknownScenario
from gcssim.io import (
    apply_overrides, check_report_schema, load_config, parse_override, read_trace, report_document, write_run,
)
from gcssim.main import explain, main, param_rows, sweep
from gcssim.params import skew_bounds, SystemParams
from gcssim.scenarios import builtin_scenario, list_scenarios
from gcssim.utils import format_time, localize, parse_time


def write_config(tmp_path, text: str):
    path = tmp_path / "run.toml"
    path.write_text(text, encoding="utf-8")
    return path


def run_dir(tmp_path, scenario):
    trace = run(scenario)
    report = skews(trace)
    out = write_run(trace, report, check_bounds(report, trace.bounds, trace.small_start), tmp_path / scenario.name)
    return trace, report, out


class TestTimes:

    @pytest.mark.parametrize("text, fs", [
        ("10ps", 10_000), ("0.5 ps", 500), ("1000ns", 10 ** 9), ("3fs", 3), ("-40ps", -40_000), ("1e3ps", 10 ** 6),
    ])
    def test_parse_time(self, text, fs):
        assert parse_time(text) == fs

    @pytest.mark.parametrize("text", ["10", "ps", "0.5fs", "10 parsecs"])
    def test_bad_time(self, text):
        with pytest.raises(ConfigError):
            parse_time(text)

    def test_number_without_unit(self):
        with pytest.raises(ConfigError):
            parse_time(10, key="params.kappa")

    def test_format_time(self):
        assert format_time(50 * NS) == "50 ns"
        assert format_time(20 * PS) == "20 ps"


class TestConfig:

    def test_parse_override(self):
        assert parse_override("mu=2e-5") == (["mu"], 2e-5)
        assert parse_override("scenario.m_policy=resolve-0") == (["scenario", "m_policy"], "resolve-0")
        assert parse_override("duration=5ns") == (["duration"], "5ns")

    def test_bare_keys_find_their_section(self):
        doc = apply_overrides({}, ["mu=2e-5", "seed=7", "size=5"])
        assert doc == {"params": {"mu": 2e-5}, "scenario": {"seed": 7}, "topology": {"size": 5}}

    def test_unknown_override(self):
        with pytest.raises(ConfigError):
            apply_overrides({}, ["nonsense=1"])
        with pytest.raises(ConfigError):
            apply_overrides({}, ["mu"])

    def test_builtin_with_overrides(self):
        scenario, output = load_config(None, ["duration=5ns", "mu=1/5000"], "gradient")
        assert scenario.name == "gradient"
        assert scenario.duration == 5 * NS
        assert scenario.params.mu == SystemParams(mu="1/5000").mu
        assert output.formats == ("csv", "json", "plotly")

    def test_unknown_scenario(self):
        with pytest.raises(UnknownScenario):
            load_config(None, (), "sideways")

    def test_toml_file(self, tmp_path):
        path = write_config(tmp_path, """
[params]
kappa = "10ps"
delta0 = "4ps"

[topology]
kind = "ring"
size = 5

[scenario]
name = "ring5"
duration = "3ns"
initial_phases = ["0ps", "2ps", "4ps", "2ps", "0ps"]
m_policy = "resolve-0"

[output]
formats = ["csv", "json"]
""")
        scenario, output = load_config(path)
        assert scenario.name == "ring5"
        assert scenario.topology.kind == "ring"
        assert scenario.initial_phases == (0, 2000, 4000, 2000, 0)
        assert scenario.m_policy == "resolve-0"
        assert output.formats == ("csv", "json")

    def test_unknown_key_reports_line(self, tmp_path):
        path = write_config(tmp_path, '[params]\nkappa = "10ps"\nkapa = "10ps"\n')
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        assert exc.value.key == "params.kapa"
        assert exc.value.line == 3

    def test_missing_unit(self, tmp_path):
        path = write_config(tmp_path, "[params]\nkappa = 10\n")
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        assert exc.value.key == "params.kappa"

    def test_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv("GCSSIM_SEED", "99")
        scenario, _ = load_config(None, (), "ahead")
        assert scenario.seed == 99


class TestRunDirectory:

    def test_files_and_schema(self, tmp_path):
        _, _, out = run_dir(tmp_path, builtin_scenario("synchronized").evolve(duration=2 * NS))
        for name in ("clocks.csv", "edge_skews.csv", "samples.csv", "trace.json", "report.json",
                     "skews.plotly.json", "edge_skews.plotly.json"):
            assert (out / name).exists(), f"missing {name}"
        doc = json.loads((out / "report.json").read_text(encoding="utf-8"))
        check_report_schema(doc)
        assert doc["verdict"]["status"] == "PASS"

        clocks = pd.read_csv(out / "clocks.csv", dtype=str)
        assert list(clocks.columns) == ["time_fs", "node", "L_phase", "md"]
        assert all(len(x.split(".")[1]) == 12 for x in clocks["L_phase"])

    @pytest.mark.parametrize("section, key, value", [
        ("verdict", "status", None),
        ("verdict", "status", "MAYBE"),
        ("report", "max_local_ps", "twenty"),
        ("report", "duration_fs", -3.5),
    ])
    def test_schema_rejects_bad_documents(self, section, key, value):
        r = skews(run(builtin_scenario("synchronized").evolve(duration=1 * NS)))
        doc = report_document(r, check_bounds(r, skew_bounds(SystemParams(), 3), True))
        check_report_schema(doc)
        if value is None:
            del doc[section][key]
        else:
            doc[section][key] = value
        with pytest.raises(ValueError, match=key if value is not None else "required"):
            check_report_schema(doc)

    def test_round_trip_gives_the_same_report(self, tmp_path):
        trace, report, out = run_dir(tmp_path, builtin_scenario("gradient").evolve(duration=5 * NS))
        loaded = read_trace(out)
        assert skews(loaded).to_dict() == report.to_dict()
        assert loaded.metadata["digest"] == trace.digest()

    def test_missing_run_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_trace(tmp_path / "nothing")


class TestExplain:

    def test_synchronized_node(self, tmp_path):
        _, _, out = run_dir(tmp_path, builtin_scenario("synchronized").evolve(duration=2 * NS))
        lines, summary, has_m = explain(read_trace(out), 2 * NS, 1)
        assert summary == "region: SC (s=0), md=0"
        assert not has_m
        assert sorted(value for key, value in lines if key == "word") == ["0: 1100", "2: 1100"]

    def test_word_inside_separator_window(self, tmp_path):
        scenario = builtin_scenario("synchronized").evolve(
            name="window", duration=2 * NS, delta0_policy="fixed", initial_phases=(0, 5700, 0, 0))
        _, _, out = run_dir(tmp_path, scenario)
        lines, summary, has_m = explain(read_trace(out), 1 * NS, 0)
        assert has_m
        assert ("word", "1: 11M0") in lines
        assert summary == "region: neither, md=0"

    def test_missing_time_or_node(self, tmp_path):
        _, _, out = run_dir(tmp_path, builtin_scenario("synchronized").evolve(duration=1 * NS))
        trace = read_trace(out)
        with pytest.raises(NotFound):
            explain(trace, 1 * NS + 1, 0)
        with pytest.raises(NotFound):
            explain(trace, 1 * NS, 9)


class TestSweep:

    def test_invalid_rows_are_kept_in_order(self):
        base = builtin_scenario("synchronized").evolve(duration=1 * NS)
        frame = sweep(base, "delta0", ["4ps", "4.7ps", "6ps"], threads=2)
        assert list(frame["delta0"]) == ["4ps", "4.7ps", "6ps"]
        assert list(frame["status"]) == ["PASS", "INVALID", "INVALID"]
        assert "kappa" in frame["reason"].iloc[2]

    def test_thread_count_does_not_change_traces(self):
        base = builtin_scenario("ahead").evolve(duration=3 * NS)
        one = sweep(base, "mu", ["1e-4", "2e-4"], threads=1)
        many = sweep(base, "mu", ["1e-4", "2e-4"], threads=4)
        assert list(one["digest"]) == list(many["digest"])

    def test_tdc_variation_maps_to_delta0(self):
        base = builtin_scenario("synchronized").evolve(duration=1 * NS)
        frame = sweep(base, "tdc_variation", ["0.01", "0.2"])
        assert list(frame["status"]) == ["PASS", "INVALID"]

    def test_width_axis(self):
        frame = sweep(builtin_scenario("synchronized"), "W", ["2", "4", "8"])
        assert list(frame["tree_local_ps"]) == [Decimal(5), Decimal(15), Decimal(35)]
        assert list(frame["gcs_local_ps"]) == [Decimal(20), Decimal(20), Decimal(30)]
        assert list(frame["tree_local_wide_ps"]) == [Decimal(10), Decimal(30), Decimal(70)]

    def test_unknown_axis(self):
        with pytest.raises(ConfigError):
            sweep(builtin_scenario("synchronized"), "kappa", ["10ps"])


class TestCommands:

    def test_run_pass(self, tmp_path):
        out = tmp_path / "sync"
        assert main(["--quiet", "run", "--scenario", "synchronized", "--set", "duration=2ns", "--out", str(out)]) == 0
        assert (out / "report.json").exists()

    def test_constraint_violation_exits_1(self, tmp_path):
        code = main(["run", "--scenario", "ahead", "--set", "mu=2e-5", "--out", str(tmp_path / "x")])
        assert code == 1
        assert not (tmp_path / "x").exists()

    def test_bound_failure_exits_2(self, tmp_path):
        out = tmp_path / "pinned"
        assert main(["run", "--scenario", "pinned-pair", "--set", "duration=300ns", "--out", str(out)]) == 2

    def test_invariant_violation_writes_partial_trace(self, tmp_path):
        path = write_config(tmp_path, """
[scenario]
base = "ahead"
duration = "10ns"
strict_delays = false
delays = [[1, 0, "0ps", "40ps"]]
""")
        out = tmp_path / "partial"
        assert main(["run", "--config", str(path), "--out", str(out)]) == 2
        meta = json.loads((out / "trace.json").read_text(encoding="utf-8"))
        assert meta["completed"] is False
        assert meta["monitor"][0]["invariant"] == "fast-mode"

    def test_explain_command(self, tmp_path):
        out = tmp_path / "sync"
        main(["run", "--scenario", "synchronized", "--set", "duration=2ns", "--out", str(out)])
        plot = tmp_path / "estimates.json"
        assert main(["explain", str(out), "--time", "2ns", "--node", "1", "--plot", str(plot)]) == 0
        assert plot.exists()
        assert main(["explain", str(out), "--time", "2.05ns", "--node", "1"]) == 1
        assert main(["explain", str(tmp_path / "none"), "--time", "2ns", "--node", "1"]) == 1

    def test_sweep_command(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(["sweep", "--scenario", "synchronized", "--set", "duration=1ns",
                     "--axis", "delta0", "--values", "4ps,6ps", "--out", str(out)])
        assert code == 0
        frame = pd.read_csv(out / "sweep.csv")
        assert list(frame["status"]) == ["PASS", "INVALID"]
        assert (out / "sweep.plotly.json").exists()

    def test_sweep_needs_values(self, tmp_path):
        assert main(["sweep", "--scenario", "synchronized", "--axis", "mu", "--out", str(tmp_path)]) == 1

    def test_scenarios_and_params(self):
        assert main(["scenarios"]) == 0
        assert main(["--lang", "ua", "check-params", "--scenario", "gradient"]) == 0
        assert main(["check-params", "--scenario", "gradient", "--set", "mu=2e-5"]) == 1

    def test_param_rows(self):
        rows = dict(param_rows(builtin_scenario("gradient")))
        assert rows["diameter"] == "3"
        assert rows["local_bound"] == "20 ps"
        assert rows["small_start"] == "False"


class TestLocalization:

    def test_languages_share_keys(self):
        lang_dir = Path(gcssim.__file__).parent / "lang"
        en = json.loads((lang_dir / "en.json").read_text(encoding="utf-8"))
        ua = json.loads((lang_dir / "ua.json").read_text(encoding="utf-8"))
        assert set(en) == set(ua)

    @pytest.mark.parametrize("lang", ["en", "ua"])
    def test_report_keys(self, lang):
        for key in ("report.title", "report.max_local", "verdict.pass", "verdict.fail", "explain.m_note"):
            assert localize(key, lang) != key, f"Missing translation for {key} in {lang}"

    def test_fallback(self):
        assert localize("report.title", "fr") == localize("report.title", "en")
        assert localize("no.such.key") == "no.such.key"


def test_module_exports():
    for name in ("run", "skews", "check_bounds", "verify_implementation", "skew_bounds",
                 "run_fairbanks", "tree_vs_gcs", "localize"):
        assert hasattr(gcssim, name), f"gcssim misses {name}"


def test_builtin_library():
    names = [name for name, _, _ in list_scenarios()]
    assert names[:4] == ["ahead", "behind", "gradient", "synchronized"]
    assert {"pinned-pair", "fairbanks-large-local", "fairbanks-swap"} <= set(names)


class TestPerformance:
    """Wall-clock budgets"""

    def test_bounds_are_instant(self):
        start = time.time()
        for d in range(1, 1000):
            skew_bounds(SystemParams(), d)
        assert time.time() - start < 1.0

    def test_scenario_run_time(self):
        start = time.time()
        run(builtin_scenario("synchronized"))
        elapsed = time.time() - start
        assert elapsed < 10.0, f"1000 ns run took {elapsed:.2f}s, should be < 10s"

    def test_tree_sweep_time(self):
        from gcssim.tree import tree_vs_gcs

        start = time.time()
        tree_vs_gcs()
        assert time.time() - start < 10.0
