import json

import numpy as np
import pytest

from dcgof.cli import EXIT_BOOTSTRAP, EXIT_FIT, EXIT_OK, EXIT_PARSE, ParseError, load_series, main
from dcgof.model import ModelSpec, Theta, simulate, simulate_x_ar1
from dcgof.rng import substream


def write_series_csv(path, T=160, seed=0, theta=None):
    spec = ModelSpec(link="probit", q=1, n_regressors=1)
    theta = theta or Theta(pi0=0.2, delta=(0.6,), beta=(1.0,))
    rng = substream(seed, "clidata")
    x = simulate_x_ar1(0.8, T, rng).reshape(-1, 1)
    data = simulate(spec, theta, T, x=x, rng=rng)
    with open(path, "w") as fh:
        fh.write("y,x1\n")
        for yi, xi in zip(data.y, data.x[:, 0]):
            fh.write(f"{yi},{xi:.17g}\n")
    return data


class TestLoadSeries:
    def test_three_row_example(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("y,x1\n0,0.1\n1,-0.2\n1,0.3\n")
        series = load_series(str(path), support_size=1)
        assert series.T == 3 and series.n_regressors == 1
        assert list(series.y) == [0, 1, 1]

    def test_out_of_range_outcome_names_row(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("y,x1\n2,0.1\n")
        with pytest.raises(ParseError, match="row 1"):
            load_series(str(path), support_size=1)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            load_series(str(path))

    def test_non_integer_outcome_names_location(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("y,x1\n0,0.1\n0.5,0.2\n")
        with pytest.raises(ParseError, match="row 2, column y"):
            load_series(str(path))

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("y,x1\n0,0.1\n1\n")
        with pytest.raises(ParseError, match="row 2"):
            load_series(str(path))

    def test_bad_regressor_names_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("y,x1\n0,abc\n")
        with pytest.raises(ParseError, match="column x1"):
            load_series(str(path))


class TestCmdTest:
    def test_smoke_and_reruns_identical(self, tmp_path):
        data_path = tmp_path / "data.csv"
        write_series_csv(data_path, seed=1)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        args = ["test", "--input", str(data_path), "--ylags", "1", "--B", "29",
                "--seed", "5", "--stats", "CvM0,KS0,BPD_1"]
        assert main(args + ["--out", str(out1)]) == EXIT_OK
        assert main(args + ["--out", str(out2), "--threads", "3"]) == EXIT_OK
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
        payload = json.loads((out1 / "report.json").read_text())
        for entry in payload["report"]["statistics"]:
            assert 0.0 < entry["p_value"] <= 1.0
        assert (out1 / "report.txt").exists()

    def test_fit_failure_exit_code(self, tmp_path):
        path = tmp_path / "ones.csv"
        rows = "\n".join(f"1,{v:.3f}" for v in np.linspace(-1, 1, 60))
        path.write_text("y,x1\n" + rows + "\n")
        code = main(["test", "--input", str(path), "--B", "19", "--out", str(tmp_path / "o")])
        assert code == EXIT_FIT

    def test_power_against_interaction_dgp(self, tmp_path):
        # data with interaction dynamics and chi-square errors, tested
        # against a static probit null: BPD_2 must reject
        from dcgof.boot import scenario_registry
        from dcgof.model import simulate as sim
        sc = {s.id: s for s in scenario_registry()}[11]
        x = simulate_x_ar1(0.8, 300, substream(1, "p11x"))
        data = sim(sc.dgp_spec, sc.dgp_theta, 300, x=x.reshape(-1, 1),
                   rng=substream(1, "p11y"))
        path = tmp_path / "alt.csv"
        with open(path, "w") as fh:
            fh.write("y,x1\n")
            for yi, xi in zip(data.y, data.x[:, 0]):
                fh.write(f"{yi},{xi:.17g}\n")
        out = tmp_path / "o"
        code = main(["test", "--input", str(path), "--B", "99", "--seed", "1",
                     "--stats", "BPD_2", "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads((out / "report.json").read_text())
        assert payload["report"]["statistics"][0]["p_value"] <= 0.05

    def test_unreliable_bootstrap_exit_code(self, tmp_path):
        path = tmp_path / "tiny.csv"
        y = [1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1, 1]
        path.write_text("y\n" + "\n".join(str(v) for v in y) + "\n")
        code = main(["test", "--input", str(path), "--B", "19", "--seed", "3",
                     "--stats", "CvM0", "--out", str(tmp_path / "o")])
        assert code == EXIT_BOOTSTRAP


class TestCmdFit:
    def test_writes_fit_json(self, tmp_path):
        data_path = tmp_path / "data.csv"
        write_series_csv(data_path, seed=2)
        out = tmp_path / "fitout"
        code = main(["fit", "--input", str(data_path), "--ylags", "1", "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads((out / "fit.json").read_text())
        assert payload["fit"]["converged"] is True
        assert payload["model"]["q"] == 1

    def test_model_file(self, tmp_path):
        data_path = tmp_path / "data.csv"
        write_series_csv(data_path, seed=3)
        model_path = tmp_path / "model.json"
        model_path.write_text(ModelSpec(link="probit", q=1, n_regressors=1).dumps())
        out = tmp_path / "o"
        code = main(["fit", "--input", str(data_path), "--model-file", str(model_path),
                     "--out", str(out)])
        assert code == EXIT_OK


class TestCmdMc:
    def test_smoke_and_thread_invariance(self, tmp_path):
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        args = ["mc", "--scenarios", "1", "--T", "60", "--R", "50", "--seed", "3",
                "--stats", "CvM0,KS0,BPD_1"]
        assert main(args + ["--out", str(out1), "--threads", "1"]) == EXIT_OK
        assert main(args + ["--out", str(out2), "--threads", "2"]) == EXIT_OK
        assert (out1 / "rejections.csv").read_bytes() == (out2 / "rejections.csv").read_bytes()
        assert (out1 / "rejections.json").read_bytes() == (out2 / "rejections.json").read_bytes()
        payload = json.loads((out1 / "rejections.json").read_text())
        rates = payload["tables"][0]["rates"]
        for level_cells in rates.values():
            for value in level_cells.values():
                assert 0.0 <= value <= 100.0

    def test_unknown_scenario_is_parse_error(self, tmp_path):
        code = main(["mc", "--scenarios", "12", "--T", "60", "--R", "50",
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_PARSE

    def test_missing_required_flags(self, tmp_path):
        code = main(["mc", "--out", str(tmp_path / "o")])
        assert code == EXIT_PARSE


class TestConfigFile:
    def test_flags_override_config(self, tmp_path):
        data_path = tmp_path / "data.csv"
        write_series_csv(data_path, seed=4)
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps({
            "input": str(data_path), "ylags": 1, "B": 29, "seed": 1,
            "stats": "CvM0,KS0", "out": str(tmp_path / "from_conf"),
        }))
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["test", "--config", str(conf), "--out", str(out_a)]) == EXIT_OK
        assert main(["test", "--config", str(conf), "--out", str(out_b), "--seed", "1"]) == EXIT_OK
        assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()

    def test_bad_level_rejected(self, tmp_path):
        data_path = tmp_path / "data.csv"
        write_series_csv(data_path, seed=5)
        code = main(["test", "--input", str(data_path), "--levels", "1.5",
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_PARSE
