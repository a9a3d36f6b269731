import json

import numpy as np
import pytest

from caratheodory import serialize as ser
from caratheodory.cli import main
from caratheodory.herglotz import HerglotzMeasure, random_measure
from caratheodory.kernels import RationalFunction, SampleSet, constant, point_mass_counterexample

TWO_PI = 2 * np.pi
mobius = RationalFunction([[[1]], [[1]]], [1, -1])
ring = 0.7 * np.exp(2j * np.pi * np.arange(8) / 8)


@pytest.fixture
def files(tmp_path):
    def put(name, obj):
        p = tmp_path / name
        p.write_text(obj if isinstance(obj, str) else ser.dumps(obj), encoding="utf-8")
        return str(p)
    return put


def run(argv, tmp_path):
    report = tmp_path / "report.json"
    code = main(argv + ["--report", str(report)])
    return code, json.loads(report.read_text())


def test_check_kernel_constant_passes(files, tmp_path):
    code, rep = run(["check-kernel", files("one.json", ser.function_to_json(constant(1.0)))], tmp_path)
    assert code == 0 and rep["outcome"] == "PASS" and rep["metrics"]["n_negative"] == 0


def test_check_kernel_counterexample_fails(files, tmp_path):
    spec = files("ce.json", ser.function_to_json(point_mass_counterexample()))
    code, rep = run(["check-kernel", spec, "--random", "5", "--seed", "3"], tmp_path)
    assert code == 1 and rep["metrics"]["n_negative"] == 1
    assert rep["witness"]["vector"] is not None


def test_check_kernel_with_samples_file(files, tmp_path):
    spec = files("m.json", ser.function_to_json(mobius))
    samples = files("s.json", {"points": [[0.3, 0.1], [-0.5, 0.0]], "include_origin": True})
    code, rep = run(["check-kernel", spec, "--samples", samples], tmp_path)
    assert code == 0 and rep["metrics"]["n_sets"] == 1


def test_malformed_json_is_error(files, tmp_path):
    code, rep = run(["check-kernel", files("bad.json", '{"kind": ')], tmp_path)
    assert code == 2 and rep["outcome"] == "ERROR" and "line 1" in rep["message"]


def test_missing_file_is_error(tmp_path):
    code, rep = run(["check-kernel", str(tmp_path / "nope.json")], tmp_path)
    assert code == 2


def test_realize_mobius(files, tmp_path):
    samples = files("s.json", ser.samples_to_json(SampleSet.from_points(ring).with_values(mobius)))
    fn = files("m.json", ser.function_to_json(mobius))
    out = tmp_path / "real.json"
    code, rep = run(["realize", samples, "--function", fn, "--out", str(out)], tmp_path)
    assert code == 0
    assert rep["metrics"]["holdout_max_relative_error"] <= 1e-6
    assert rep["artifacts"] == [str(out)]
    R = ser.realization_from_json(json.loads(out.read_text()))
    assert R(0.5)[0, 0] == pytest.approx(3.0)


def test_realize_with_holdout_file(files, tmp_path):
    samples = files("s.json", ser.samples_to_json(SampleSet.from_points(ring).with_values(mobius)))
    hold = files("h.json", ser.samples_to_json(SampleSet([0.1j, -0.45]).with_values(mobius)))
    code, rep = run(["realize", samples, "--holdout", hold], tmp_path)
    assert code == 0 and rep["metrics"]["holdout_max_relative_error"] < 1e-10


def test_realize_counterexample_fails(files, tmp_path):
    S = SampleSet.from_points(ring[:3]).with_values(point_mass_counterexample())
    code, rep = run(["realize", files("s.json", ser.samples_to_json(S))], tmp_path)
    assert code == 1 and rep["metrics"]["n_negative"] == 1


def test_realize_without_origin_is_error(files, tmp_path):
    S = SampleSet.from_points(ring, include_origin=False).with_values(mobius)
    code, rep = run(["realize", files("s.json", ser.samples_to_json(S))], tmp_path)
    assert code == 2 and "origin" in rep["message"]


def test_herglotz_eval_prints_three(files, tmp_path, capsys):
    mu = HerglotzMeasure.from_cells([0.0, TWO_PI], [0.0], [(0.0, 1.0)])
    code = main(["herglotz", "eval", files("mu.json", ser.measure_to_json(mu)), "--z", "0.5"])
    assert code == 0
    assert "= 3" in capsys.readouterr().out


def test_herglotz_roundtrip_two_atoms(files, tmp_path):
    mu = random_measure(np.random.default_rng(5), 2, n_atoms=2, n_cells=32)
    code, rep = run(["herglotz", "roundtrip", files("mu.json", ser.measure_to_json(mu))], tmp_path)
    assert code == 0 and rep["metrics"]["max_moment_deviation"] <= 1e-3
    assert len(rep["metrics"]["moments"]) == 9


def test_herglotz_recover_minus_one_fails(files, tmp_path):
    code, rep = run(["herglotz", "recover", files("m1.json", ser.function_to_json(constant(-1.0)))], tmp_path)
    assert code == 1
    assert set(rep["witness"]) >= {"radius", "angle"}


def test_herglotz_recover_writes_measure(files, tmp_path):
    out = tmp_path / "mu.json"
    code, rep = run(["herglotz", "recover", files("m.json", ser.function_to_json(mobius)),
                     "--radii", "0.9,0.99,0.999,0.9999", "--grid", "8", "--out", str(out)], tmp_path)
    assert code == 0 and rep["metrics"]["atoms"] == 1
    mu = ser.measure_from_json(json.loads(out.read_text()))
    assert mu.atom_mass[0, 0, 0].real == pytest.approx(1.0, abs=1e-2)


def test_selftest_core_passes(tmp_path):
    code, rep = run(["selftest", "--suite", "core", "--seed", "0"], tmp_path)
    assert code == 0 and rep["metrics"]["passed"] == rep["metrics"]["total"]


def test_selftest_unknown_suite_exit_two():
    with pytest.raises(SystemExit) as e:
        main(["selftest", "--suite", "nope"])
    assert e.value.code == 2


def test_reports_are_deterministic(files, tmp_path):
    spec = files("ce.json", ser.function_to_json(point_mass_counterexample()))
    a = run(["check-kernel", spec, "--seed", "7"], tmp_path)
    b = run(["check-kernel", spec, "--seed", "7"], tmp_path)
    assert a == b
    c = run(["check-kernel", spec, "--seed", "8"], tmp_path)
    assert c[1]["inputs_digest"] != a[1]["inputs_digest"]


def test_json_flag_prints_report_only(files, capsys, monkeypatch):
    monkeypatch.setenv("CARATHEODORY_NUM_THREADS", "1")
    mu = HerglotzMeasure.from_cells([0.0, TWO_PI], [0.0], [(0.0, 1.0)])
    assert main(["herglotz", "eval", files("mu.json", ser.measure_to_json(mu)), "--z", "0.5", "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["metrics"]["values"][0]["value"] == [[[3.0, 0.0]]]
