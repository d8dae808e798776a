import json
import subprocess
import sys

import pytest

from bandlab.cli import main

GAUSS = {"kind": "isotropic_gaussian", "K": 1, "params": {"sigma": [1.0]}}


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestBound:
    def test_theorem2(self, capsys):
        code, out, _ = run(["bound", "--K", "1", "--B", "1", "--sigma", "1", "--H", "1", "--n", "2"],
                           capsys)
        assert code == 0
        assert float(out) == pytest.approx(4 / 3, rel=1e-14)
        assert out.startswith("1.333333")

    def test_other_kinds(self, capsys):
        _, out, _ = run(["bound", "--kind", "hypercube", "--K", "2", "--B", "1", "--U", "1",
                         "--n", "0"], capsys)
        assert float(out) == pytest.approx(4.0)
        _, out, _ = run(["bound", "--kind", "diagonal", "--K", "2", "--Bk", "1", "1",
                         "--sigmak", "1", "1", "--n", "0", "--json"], capsys)
        rep = json.loads(out)
        assert rep["kind"] == "diagonal" and rep["bound"] == pytest.approx(8.0)

    def test_missing_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["bound", "--K", "1", "--n", "2"])
        assert exc.value.code == 2

    def test_invalid_value_is_runtime_error(self, capsys):
        code, _, err = run(["bound", "--K", "1", "--B", "-1", "--sigma", "1", "--n", "2"], capsys)
        assert code == 1
        assert json.loads(err)["error"] == "InputError"


class TestCoverage:
    def test_two_cell_example(self, capsys):
        code, out, _ = run(["coverage", "--points", "-1", "1", "--U", "3.141592653589793",
                            "--B", "1"], capsys)
        assert code == 0
        assert json.loads(out) == {"total_cells": 2, "occupied_cells": 2, "fraction": 1.0}


class TestPipeline:
    def test_synth_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert main(["synth", "--K", "1", "--B", "1", "--J", "1", "--seed", "1",
                         "--out", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_sample_fit_risk(self, tmp_path, capsys):
        t, d, m = (tmp_path / n for n in ("t.json", "d.json", "m.json"))
        assert main(["synth", "--K", "1", "--B", "0.5", "--J", "8", "--out", str(t)]) == 0
        assert main(["sample", "--target", str(t), "--N", "16", "--seed", "3", "--out", str(d)]) == 0
        assert main(["fit", "--data", str(d), "--learner", "poly", "--out", str(m)]) == 0
        code, out, _ = run(["risk", "--model", str(m), "--target", str(t), "--data", str(d),
                            "--M", "2000"], capsys)
        assert code == 0
        res = json.loads(out)
        assert res["expected"]["mean"] < 1e-6 and res["empirical"] < 1e-12
        assert main(["fit", "--data", str(d), "--learner", "sinc", "--band", "8",
                     "--out", str(m)]) == 0
        assert json.loads(m.read_text())["kind"] == "sinc"

    def test_fit_input_scale_policy(self, tmp_path, capsys):
        t, d, m = (tmp_path / n for n in ("t.json", "d.json", "m.json"))
        main(["synth", "--K", "1", "--B", "0.5", "--out", str(t)])
        main(["sample", "--target", str(t), "--N", "8", "--out", str(d)])
        assert main(["fit", "--data", str(d), "--input-scale", "distribution", "--out", str(m)]) == 0
        assert json.loads(m.read_text())["input_scale"] == 1.0
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--data", str(d), "--input-scale", "wide"])
        assert exc.value.code == 2

    def test_missing_file_is_runtime_error(self, tmp_path, capsys):
        code, _, err = run(["sample", "--target", str(tmp_path / "none.json"), "--N", "3"], capsys)
        assert code == 1
        assert json.loads(err)["error"] == "FileNotFoundError"

    def test_sinc_without_band_is_usage_error(self, tmp_path, capsys):
        t, d = tmp_path / "t.json", tmp_path / "d.json"
        main(["synth", "--K", "1", "--B", "0.5", "--out", str(t)])
        main(["sample", "--target", str(t), "--N", "4", "--out", str(d)])
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--data", str(d), "--learner", "sinc"])
        assert exc.value.code == 2


class TestExperiments:
    @pytest.fixture
    def config(self, tmp_path):
        cfg = {"target": {"synth": "strict", "K": 1, "B": 0.5}, "distribution": GAUSS,
               "N_list": [4, 8], "trials": 3, "eval_points": 500, "seed": 0, "out": "res.csv"}
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg))
        return p

    def test_sweep_writes_relative_to_config(self, config, capsys):
        code, out, _ = run(["sweep", "--config", str(config)], capsys)
        assert code == 0
        csv = (config.parent / "res.csv").read_text().splitlines()
        assert len(csv) == 7
        assert (config.parent / "res.summary.json").exists()
        assert json.loads(out)["csv"].endswith("res.csv")

    def test_seed_override_and_threads(self, config, tmp_path, capsys):
        outs = []
        for k in ("1", "3"):
            p = tmp_path / f"o{k}.csv"
            assert main(["sweep", "--config", str(config), "--out", str(p), "--seed", "9",
                         "--threads", k]) == 0
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]
        main(["sweep", "--config", str(config), "--out", str(tmp_path / "s0.csv")])
        assert (tmp_path / "s0.csv").read_bytes() != outs[0]

    def test_bad_config_is_runtime_error(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"target": {"synth": "strict", "K": 1, "B": 0.5},
                                 "distribution": GAUSS, "N_list": [8, 4]}))
        code, _, err = run(["sweep", "--config", str(p)], capsys)
        assert code == 1 and "ascending" in json.loads(err)["message"]

    def test_equiv_missing_learner_b(self, config, capsys):
        code, _, _ = run(["equiv", "--config", str(config)], capsys)
        assert code == 1


def test_module_entry_point_exit_codes():
    ok = subprocess.run([sys.executable, "-m", "bandlab", "bound", "--K", "1", "--B", "1",
                         "--sigma", "1", "--n", "0"], capture_output=True, text=True)
    assert ok.returncode == 0 and float(ok.stdout) == 2.0
    usage = subprocess.run([sys.executable, "-m", "bandlab", "nonsense"], capture_output=True)
    assert usage.returncode == 2
    runtime = subprocess.run([sys.executable, "-m", "bandlab", "bound", "--K", "0", "--B", "1",
                              "--sigma", "1", "--n", "0"], capture_output=True, text=True)
    assert runtime.returncode == 1 and "error" in json.loads(runtime.stderr)
