import json

import numpy as np
import pytest

from neutral_obsctrl import (
    ConstantKernel,
    NeutralSystem,
    SampledKernel,
    dump_system,
    dumps_report,
    load_fixture,
    load_system,
    system_from_dict,
    system_to_dict,
)
from neutral_obsctrl.cli import RunConfig, main, run
from neutral_obsctrl.io import SystemFormatError


@pytest.fixture
def fixture_path(tmp_path):
    def make(name):
        path = tmp_path / f"{name}.json"
        dump_system(load_fixture(name), path)
        return str(path)
    return make


class TestSystemFiles:
    @pytest.mark.parametrize("name", ["example1", "example1_scalar", "example2", "scalar_a3"])
    def test_round_trip(self, name, tmp_path):
        sys = load_fixture(name)
        path = tmp_path / "s.json"
        dump_system(sys, path)
        assert load_system(path) == sys

    def test_kernels_round_trip(self):
        sys = NeutralSystem(np.eye(2), np.ones((2, 1)), np.ones((1, 2)),
                            SampledKernel(np.arange(12.0).reshape(3, 2, 2)), ConstantKernel(np.eye(2)), D1=np.eye(2))
        assert system_from_dict(json.loads(json.dumps(system_to_dict(sys)))) == sys

    def test_fixture_contents(self):
        e2 = load_fixture("example2")
        np.testing.assert_array_equal(e2.A_minus1, [[0, 0], [0, 1]])
        np.testing.assert_array_equal(e2.D1, [[0, 0], [1, 0]])
        assert load_fixture("example1").n == 2

    @pytest.mark.parametrize("doc", [
        [],
        {"n": 2, "m": 1, "p": 1},
        {"n": 1, "m": 1, "p": 1, "A_minus1": [[1.0]], "B": [[1.0], [2.0]], "C": [[1.0]]},
        {"n": 1, "m": 1, "p": 1, "A_minus1": [["x"]], "B": [[1.0]], "C": [[1.0]]},
        {"n": 1, "m": 1, "p": 1, "A_minus1": [[1.0]], "B": [[1.0]], "C": [[1.0]], "A2": {"wavy": 1}},
        {"n": 1, "m": 1, "p": 1, "A_minus1": [[1.0]], "B": [[1.0]], "C": [[1.0]],
         "A3": {"sampled": {"N": 4, "values": [[[1.0]]] * 3}}},
        {"n": 1, "m": 1, "p": 1, "A_minus1": [[1.0]], "B": [[1.0]], "C": [[1.0]],
         "A3": {"sampled": {"N": 1, "values": [[[1.0]]] * 2}}},
    ])
    def test_malformed(self, doc):
        with pytest.raises(SystemFormatError):
            system_from_dict(doc)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        with pytest.raises(SystemFormatError):
            load_system(path)


class TestReports:
    def test_schema_first_and_17_digits(self):
        text = dumps_report({"x": 0.1, "n": np.int64(3), "a": np.array([1.0 / 3])})
        assert text.index('"schema"') < text.index('"x"')
        assert "0.10000000000000001" in text
        assert json.loads(text)["a"] == [1.0 / 3]

    def test_non_finite(self):
        assert json.loads(dumps_report({"x": float("inf")}))["x"] == "inf"


class TestRun:
    def test_example1_delayed(self, fixture_path):
        code, text = run(RunConfig("check-observability", fixture_path("example1"), output_kind="delayed"))
        doc = json.loads(text)
        assert code == 0 and doc["holds"] == "YesOnRegion" and doc["minimal_time"] == 1
        assert doc["schema"] == "neutral-obsctrl/1" and doc["region"] and doc["tolerances"]

    def test_example2_current(self, fixture_path):
        code, text = run(RunConfig("check-observability", fixture_path("example2"), output_kind="current"))
        doc = json.loads(text)
        assert code == 1 and doc["failures"][0]["condition"] == "det_guard"

    def test_inconclusive_exit(self, tmp_path):
        sys = NeutralSystem(np.zeros((2, 2)), np.eye(2), np.array([[1.0, 0.0]]),
                            A3=ConstantKernel([[0.0, 1.0], [0.0, 0.0]]))
        path = tmp_path / "s.json"
        dump_system(sys, path)
        code, _ = run(RunConfig("check-approx-observability", str(path)))
        assert code == 2

    def test_spectrum(self, fixture_path):
        code, text = run(RunConfig("spectrum", fixture_path("example1_scalar"), region=(-1, 1, -20, 20)))
        doc = json.loads(text)
        assert code == 0 and doc["winding_total"] == 8
        assert sum(r["multiplicity"] for r in doc["roots"]) == 8

    def test_gramian(self, fixture_path):
        code, text = run(RunConfig("gramian", fixture_path("example2"), T=1.5, N=(16, 32)))
        doc = json.loads(text)
        assert code == 0 and [e["N"] for e in doc["estimates"]] == [16, 32]

    def test_duality_check(self, fixture_path):
        code, text = run(RunConfig("duality-check", fixture_path("example1"), T=2.0, N=(64,), trials=2, seed=4))
        doc = json.loads(text)
        assert code == 0 and len(doc["trial_seeds"]) == 2 and doc["max_residual"] < 1e-2

    def test_deterministic(self, fixture_path):
        cfg = RunConfig("duality-check", fixture_path("example2"), T=2.0, N=(64,), trials=2, seed=9)
        assert run(cfg)[1] == run(cfg)[1]

    @pytest.mark.parametrize("cfg", [
        RunConfig("gramian", "x", T=1.0, N=(4,)),
        RunConfig("simulate", "x", T=-1.0),
        RunConfig("explode", "x"),
    ])
    def test_invalid_config(self, cfg, fixture_path):
        cfg.system_path = fixture_path("example1")
        code, text = run(cfg)
        assert code == 3 and "error" in json.loads(text)

    def test_missing_file(self):
        code, text = run(RunConfig("spectrum", "/nonexistent/system.json"))
        assert code == 3 and json.loads(text)["error"]["type"] == "FileNotFoundError"

    def test_numeric_error_is_structured(self, fixture_path):
        code, text = run(RunConfig("simulate", fixture_path("example1"), T=0.1, N=(16,)))
        assert code == 3 and json.loads(text)["error"]["type"] == "OffGrid"


class TestMain:
    def test_negative_region(self, fixture_path, capsys):
        code = main(["spectrum", "--system", fixture_path("example1_scalar"), "--region", "-1,1,-20,20"])
        assert code == 0 and json.loads(capsys.readouterr().out)["winding_total"] == 8

    def test_out_file(self, fixture_path, tmp_path):
        out = tmp_path / "r.json"
        code = main(["check-controllability", "--system", fixture_path("example1"), "--out", str(out)])
        assert code == 0 and json.loads(out.read_text())["holds"] == "YesOnRegion"

    def test_simulate_csv(self, fixture_path, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code = main(["simulate", "--system", fixture_path("example1"), "--T", "1", "--N", "16", "--init", "1,2",
                     "--out", str(out)])
        lines = out.read_text().splitlines()
        assert code == 0 and lines[0].startswith("t,z1,z2")
        assert len(lines) == 1 + 33
        assert json.loads(capsys.readouterr().out)["csv"] == str(out)

    def test_simulate_stdout(self, fixture_path, capsys):
        assert main(["simulate", "--system", fixture_path("example1_scalar"), "--T", "0.5", "--N", "8"]) == 0
        assert capsys.readouterr().out.startswith("t,z1")

    def test_usage_error(self, capsys):
        assert main(["spectrum"]) == 3
        assert main(["bogus", "--system", "x"]) == 3

    def test_help(self, capsys):
        assert main(["--help"]) == 0
