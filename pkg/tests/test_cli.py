import csv
import json
import time
from importlib import resources
from pathlib import Path

import pytest

from qsflow.cli import SCHEMAS, ConfigError, load_scenario, main, validate_scenario

SCENARIOS = resources.files("qsflow").joinpath("data", "scenarios")


def write(tmp_path, obj, name="scen.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_every_kind_has_shipped_scenario():
    shipped = {json.loads(p.read_text())["kind"] for p in SCENARIOS.iterdir() if p.name.endswith(".json")}
    assert shipped == set(SCHEMAS)


def test_minimal_validate_generator(tmp_path, capsys):
    p = write(tmp_path, {"kind": "validate-generator", "output_path": str(tmp_path / "out")})
    assert main(["run", str(p)]) == 0
    rows = read_csv(tmp_path / "out" / "validate-generator.csv")
    assert rows and all(r["pass"] == "true" for r in rows)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["kind"] == "validate-generator"
    assert {"numpy", "scipy", "qsflow", "python"} <= set(manifest["versions"])
    assert manifest["wall_time_s"] >= 0 and "params" in manifest and "seed" in manifest
    assert not [f for f in (tmp_path / "out").iterdir() if f.name.startswith(".")]


def test_unknown_field_named(tmp_path, capsys):
    p = write(tmp_path, {"kind": "classify-qF", "params": {"multipicity": 2}})
    assert main(["validate", str(p)]) == 2
    assert "params.multipicity" in capsys.readouterr().err
    with pytest.raises(ConfigError) as err:
        validate_scenario({"kind": "perturb", "colour": 1})
    assert err.value.path == "colour"


@pytest.mark.parametrize("raw,path", [
    ({"kind": "cocycle-eval", "params": {"T": "x"}}, "params.T"),
    ({"kind": "toyfock-convergence", "params": {"Ns": [64, "a"]}}, "params.Ns[1]"),
    ({"kind": "toyfock-convergence", "params": {"mode": "both"}}, "params.mode"),
    ({"kind": "validate-generator", "params": {"h": [[1, 0], [0]]}}, "params.h"),
    ({"kind": "mc-randomized-action", "params": {"c1": [[1, 2, 3]]}}, "params.c1[0]"),
    ({"kind": "mc-randomized-action", "params": {"paths": 10}}, "params.paths"),
    ({"kind": "nope"}, "kind"),
    ({"params": {}}, "kind"),
    ({"kind": "perturb", "seed": 1.5}, "seed"),
    ({"kind": "presentation-analyze", "params": {}}, "params"),
])
def test_config_errors_carry_path(raw, path):
    with pytest.raises(ConfigError) as err:
        validate_scenario(raw)
    assert err.value.path == path


def test_complex_and_matrix_conversion():
    sc = validate_scenario({"kind": "validate-generator",
                            "params": {"h": [[1, [0, 1]], [[0, -1], 2]], "t": [[0, 1], [0, 0]]}})
    assert sc.params["h"][0, 1] == 1j and sc.params["h"][1, 0] == -1j


def test_shipped_weyl_demo(tmp_path):
    sc = load_scenario(SCENARIOS.joinpath("weyl-demo.json"))
    assert main(["run", str(SCENARIOS.joinpath("weyl-demo.json")), "-o", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "weyl-demo.csv")
    assert len(rows) == sc.params["samples"]
    assert all(float(r["residual"]) < 1e-10 for r in rows)


def test_byte_identical_outputs(tmp_path):
    src = str(SCENARIOS.joinpath("cocycle-eval.json"))
    assert main(["run", src, "-o", str(tmp_path / "a")]) == 0
    assert main(["run", src, "-o", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "cocycle-eval.csv").read_bytes()
    assert a == (tmp_path / "b" / "cocycle-eval.csv").read_bytes()


def test_csv_seventeen_digits(tmp_path):
    src = str(SCENARIOS.joinpath("toyfock-convergence.json"))
    assert main(["run", src, "-o", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "toyfock-convergence.csv")
    v = rows[0]["exact_value_re"]
    assert float(v) == float("%.17g" % float(v)) and len(v.replace("-", "").replace(".", "")) >= 16


def test_list_builtins(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out.splitlines()
    names = [line.split()[0] for line in out]
    assert {"rotation-algebra", "cuntz-N", "free-sphere"} <= set(names)
    models = [n for n in names if not n.endswith(".json")]
    assert models == sorted(models)


def test_computation_error_has_module_context(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("QSFLOW_MAX_DIM", "64")
    p = write(tmp_path, {"kind": "toyfock-convergence", "params": {"Ns": [8], "route": "state"},
                         "output_path": str(tmp_path / "o")})
    assert main(["run", str(p)]) == 1
    err = capsys.readouterr().err
    assert "toyfock" in err and "CapExceeded" in err


def test_presentation_from_source_file(tmp_path):
    (tmp_path / "p.qsp").write_text("gen a unitary;\ngen b;\nrel a b - b a a;\n")
    p = write(tmp_path, {"kind": "presentation-analyze", "params": {"source": "p.qsp"},
                         "output_path": str(tmp_path / "o")})
    assert main(["run", str(p)]) == 0
    rows = {r["generator"]: r["balanced"] for r in read_csv(tmp_path / "o" / "presentation-analyze.csv")}
    assert rows == {"a": "false", "b": "true"}


def test_missing_file(capsys):
    assert main(["run", "/nonexistent/x.json"]) == 2


@pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.iterdir() if p.name.endswith(".json")))
def test_shipped_scenarios_run_quickly(tmp_path, name):
    t0 = time.perf_counter()
    assert main(["run", str(SCENARIOS.joinpath(name)), "-o", str(tmp_path)]) == 0
    assert time.perf_counter() - t0 < 60
    kind = json.loads(SCENARIOS.joinpath(name).read_text())["kind"]
    assert Path(tmp_path / f"{kind}.csv").exists()


def test_shipped_scenario_by_name(tmp_path, capsys):
    assert main(["run", "weyl-demo", "-o", str(tmp_path)]) == 0
    assert (tmp_path / "weyl-demo.csv").exists()
    assert main(["validate", "classify-qF.json"]) == 0
    assert "ok: classify-qF" in capsys.readouterr().out
