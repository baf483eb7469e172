import json

import pytest

from roughmarket import (
    ExperimentConfig,
    GeneratorSpec,
    emit_plot_data,
    generate,
    run_experiment,
    write_path,
    write_report,
)
from roughmarket.cli import main
from roughmarket.errors import CaseFailure, ConfigError, UnknownSeries
from roughmarket.experiments import report_canonical_bytes


class TestConfig:
    def test_empty_seed_set_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(kind="oracle-suite", seeds=())

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(kind="mystery", seeds=(1,))

    def test_from_json_unknown_field(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json('{"kind": "oracle-suite", "seeds": [1], "x": 2}')

    def test_from_json_bad_json(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("{nope")


class TestSuites:
    def test_oracle_suite_all_pass(self):
        rep = run_experiment(ExperimentConfig(kind="oracle-suite", seeds=tuple(range(25))))
        assert rep.summary == {"n_cases": 25, "n_failed": 0}

    def test_doob_suite_all_pass(self):
        rep = run_experiment(ExperimentConfig(kind="doob-suite", seeds=tuple(range(25))))
        assert rep.failed == 0

    def test_prop1_suite_all_pass(self):
        rep = run_experiment(ExperimentConfig(kind="prop1-check", seeds=tuple(range(8))))
        assert rep.failed == 0

    def test_prop3_suite(self):
        cfg = ExperimentConfig(
            kind="prop3-check",
            seeds=(0, 1),
            params={"eps": [1.0], "delta": [1.0], "N": [16, 64], "j_max": 10},
            generator={"kind": "exp-fractional", "hurst": 0.5, "sigma": 0.5, "n_samples": 65},
        )
        rep = run_experiment(cfg)
        assert rep.failed == 0
        assert len(rep.cases) == 4
        assert "margin" in rep.series

    def test_upper_prob_table(self):
        rep = run_experiment(
            ExperimentConfig(kind="upper-prob-table", seeds=(0,), params={"eps": [-1.0, 0.5, 1.0]})
        )
        assert rep.failed == 0
        by_eps = {c["eps"]: c for c in rep.cases}
        assert by_eps[-1.0]["value"] == 1.0
        assert by_eps[1.0]["expected"] == pytest.approx(1.0 / 1.5)

    def test_growth_profile_series(self):
        cfg = ExperimentConfig(
            kind="growth-profile",
            seeds=tuple(range(5)),
            params={"p": [1.5, 3.0], "N": [16, 64, 256]},
            generator={"kind": "exp-fractional", "hurst": 0.5, "sigma": 0.5, "n_samples": 257},
        )
        rep = run_experiment(cfg)
        assert rep.failed == 0
        assert set(rep.series) == {"p=1.5", "p=3"}
        col = [y for _x, y in rep.series["p=1.5"]]
        assert col == sorted(col)

    def test_borrow_audit(self):
        rep = run_experiment(ExperimentConfig(kind="borrow-audit", seeds=tuple(range(6))))
        assert rep.failed == 0

    def test_raise_on_failure(self, monkeypatch):
        import roughmarket.experiments as ex

        monkeypatch.setattr(
            ex, "_case_oracle", lambda s, p: {"case": f"oracle-{s}", "pass": False}
        )
        with pytest.raises(CaseFailure):
            run_experiment(
                ExperimentConfig(kind="oracle-suite", seeds=(1,)), raise_on_failure=True
            )


class TestReportDeterminism:
    def test_byte_identical_reports(self):
        cfg = ExperimentConfig(kind="doob-suite", seeds=tuple(range(10)))
        a = report_canonical_bytes(run_experiment(cfg))
        b = report_canonical_bytes(run_experiment(cfg, jobs=4))
        assert a == b

    def test_write_report_layout(self, tmp_path):
        cfg = ExperimentConfig(kind="upper-prob-table", seeds=(0,))
        rep = run_experiment(cfg)
        where = write_report(rep, tmp_path / "out")
        assert where.name == "report.json"
        payload = json.loads(where.read_text())
        assert payload["summary"]["n_failed"] == 0
        assert "wall_time_s" not in payload  # volatile fields live in meta.json
        meta = json.loads((tmp_path / "out" / "meta.json").read_text())
        assert "wall_time_s" in meta
        assert (tmp_path / "out" / "cases.csv").exists()

    def test_emit_plot_unknown_series(self):
        rep = run_experiment(ExperimentConfig(kind="upper-prob-table", seeds=(0,)))
        csv_text = emit_plot_data(rep, "upper_prob")
        assert csv_text.startswith("x,y\n")
        with pytest.raises(UnknownSeries):
            emit_plot_data(rep, "nope")


@pytest.fixture
def sample_csv(tmp_path):
    path = generate(GeneratorSpec(kind="exp-fractional", n_samples=129, hurst=0.5, sigma=0.5, seed=3))
    f = tmp_path / "path.csv"
    write_path(path, f)
    return f


class TestCli:
    def test_variation(self, sample_csv, capsys):
        assert main(["variation", "--path", str(sample_csv), "--p", "1,2", "--psi"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("p,value\n")
        assert "psi," in out

    def test_crossings_grid(self, sample_csv, capsys):
        assert main(["crossings", "--path", str(sample_csv), "--step", "0.25"]) == 0
        assert capsys.readouterr().out.startswith("k,up,down\n")

    def test_crossings_band(self, sample_csv, capsys):
        assert main(["crossings", "--path", str(sample_csv), "--a", "0.5", "--b", "1.0"]) == 0
        assert capsys.readouterr().out.startswith("a,b,up,down\n")

    def test_crossings_missing_args(self, sample_csv):
        assert main(["crossings", "--path", str(sample_csv)]) == 2

    def test_qvar(self, sample_csv, capsys):
        assert main(["qvar", "--path", str(sample_csv), "--deltas", "1,0.5,0.1"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "delta,value"
        vals = [float(ln.split(",")[1]) for ln in lines[1:]]
        assert vals == sorted(vals, reverse=True)

    def test_doob_json(self, sample_csv, capsys):
        assert main(["doob", "--path", str(sample_csv), "--a", "0.5", "--b", "1.0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["pass"] is True
        assert payload["ST"] >= payload["bound_rhs"]

    def test_prop3_json(self, sample_csv, capsys):
        rc = main(
            ["prop3", "--path", str(sample_csv), "--eps", "1", "--delta", "1", "--N", "32"]
        )
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["pass"] is True

    def test_upper_prob(self, sample_csv, capsys):
        assert main(["upper-prob", "--path", str(sample_csv)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert 0.0 < payload["upper_prob"] <= 1.0

    def test_borrow_check_violator_exit_code(self, sample_csv, capsys):
        rc = main(["borrow-check", "--path", str(sample_csv), "--strategy", "short"])
        assert rc == 1
        payload = json.loads(capsys.readouterr().out)
        assert payload["ok"] is False
        assert payload["continuation_min_capital"] < 0.0

    def test_unbounded(self, sample_csv, capsys):
        assert main(["unbounded", "--path", str(sample_csv), "--m-max", "4"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["S0"] == 1.0 - 2.0**-4

    def test_generate_and_roundtrip(self, tmp_path, capsys):
        spec = tmp_path / "gen.json"
        spec.write_text('{"kind": "linear-drift", "n_samples": 5, "eps": 1.0}')
        out = tmp_path / "path.csv"
        assert main(["generate", "--spec", str(spec), "--out", str(out)]) == 0
        assert main(["upper-prob", "--path", str(out)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["upper_prob"] == pytest.approx(0.5, abs=1e-12)

    def test_run_and_emit_plot(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"kind": "upper-prob-table", "seeds": [0]}))
        out_dir = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out_dir)]) == 0
        capsys.readouterr()
        rc = main(
            ["emit-plot", "--report", str(out_dir / "report.json"), "--series", "upper_prob"]
        )
        assert rc == 0
        assert capsys.readouterr().out.startswith("x,y\n")

    def test_run_bad_config_exit(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"kind": "upper-prob-table", "seeds": []}))
        assert main(["run", "--config", str(cfg)]) == 2
