import csv
import io
import json

import numpy as np
import pytest

from expp import cli, cm_sets


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def instance(tmp_path):
    def write(obj, name="inst.json"):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)
    return write


def test_solve_bundled_instance(capsys):
    code, out, _ = run(capsys, "solve", "mimo_small.json")
    report = json.loads(out)
    assert code == 0
    assert report["id"] == "mimo_small"
    assert report["rounded"] == [1.0, -1.0]
    assert report["f_rounded"] == pytest.approx(1.13)
    assert report["rounded_feasible"] and report["converged"]
    assert {"hull_point", "f_hull", "feas_residual", "exact_flag", "stage_trace", "wall_time",
            "seed"} <= set(report)


def test_solve_mismatched_dims_exit_2(capsys, instance):
    path = instance({"schema": 1, "objective": {"kind": "Quadratic", "H": [[1, 0]], "y": [1]},
                     "set": {"family": "Binary", "n": 3}})
    code, out, err = run(capsys, "solve", path)
    assert code == 2 and out == "" and "error" in err


@pytest.mark.parametrize("text", ["{not json", '{"schema": 1}', '{"schema": 1, "objective": {"kind": "Constant"}, "set": {"family": "Blob", "n": 1}}'])
def test_solve_malformed_exit_2(capsys, tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert run(capsys, "solve", str(path))[0] == 2


def test_solve_missing_file_exit_2(capsys, tmp_path):
    assert run(capsys, "solve", str(tmp_path / "nope.json"))[0] == 2


def test_solve_reports_are_reproducible(capsys, tmp_path, instance):
    rng = np.random.default_rng(0)
    H = rng.normal(size=(5, 5))
    path = instance({"schema": 1, "id": "r", "objective": {"kind": "Quadratic", "H": H.tolist(),
                     "y": (H @ np.sign(rng.normal(size=5))).tolist()},
                     "set": {"family": "Binary", "n": 5}})
    reports = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert run(capsys, "solve", path, "--seed", "3", "--starts", "2", "--out", str(out))[0] == 0
        rep = json.loads(out.read_text())
        rep.pop("wall_time")
        reports.append(json.dumps(rep, sort_keys=True))
    assert reports[0] == reports[1]


def test_solve_starts_returns_minimum(capsys, instance):
    rng = np.random.default_rng(1)
    H = rng.normal(size=(6, 6))
    obj = {"schema": 1, "objective": {"kind": "Quadratic", "H": H.tolist(),
           "y": rng.normal(size=6).tolist()}, "set": {"family": "Binary", "n": 6}}
    path = instance(obj)
    _, out, _ = run(capsys, "solve", path, "--starts", "8")
    best = json.loads(out)["f_rounded"]
    singles = [json.loads(run(capsys, "solve", path, "--seed", str(s))[1])["f_rounded"]
               for s in range(8)]
    assert best == min(singles)


def test_solve_flags_and_config(capsys, instance, tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"gamma": 2.0, "max_iters_per_stage": 200}))
    code, out, _ = run(capsys, "solve", "mimo_small.json", "--config", str(conf), "--lambda0", "0.5",
                       "--lambda-max", "4", "--tol", "1e-7")
    trace = json.loads(out)["stage_trace"]
    assert code == 0
    assert trace[0]["lambda"] == 0.5 and trace[1]["lambda"] == 1.0
    assert run(capsys, "solve", "mimo_small.json", "--gamma", "0.5")[0] == 2


def test_solve_nonconvergence_exit_3(capsys, instance):
    path = instance({"schema": 1, "objective": {"kind": "Quadratic", "H": [[1, 0], [0, 1]],
                     "y": [0.3, -0.2]}, "set": {"family": "Binary", "n": 2}})
    # a single stage at a tiny weight stops at the interior minimizer
    code, out, _ = run(capsys, "solve", path, "--lambda0", "1e-3", "--lambda-max", "1e-3")
    assert code == 3
    assert not json.loads(out)["converged"]


def test_project_examples(capsys):
    code, out, _ = run(capsys, "project", '{"family": "Binary", "n": 2}', "[2, -3]")
    res = json.loads(out)
    assert code == 0 and res["projected"] == [1.0, -1.0]
    assert res["input_violation"] == 2.0 and res["output_violation"] == 0.0

    _, out, _ = run(capsys, "project", '{"family": "SemiOrthogonal", "n": 2, "r": 2}', "[[2, 0], [0, 2]]")
    np.testing.assert_allclose(json.loads(out)["projected"], np.eye(2), atol=1e-12)


def test_project_mpsk_matches_grid(capsys):
    from expp.checks import grid_distance_mpsk

    z = 0.9 - 0.8j
    _, out, _ = run(capsys, "project", '{"family": "MPSK", "m": 8, "n": 1}', f"[[{z.real}, {z.imag}]]")
    p = complex(*json.loads(out)["projected"][0])
    dg, h = grid_distance_mpsk(np.array([z]), 8)
    assert 0 <= dg[0] - abs(p - z) <= h


def test_project_bad_input_exit_2(capsys):
    assert run(capsys, "project", '{"family": "Binary", "n": 2}', "[1, 2, 3]")[0] == 2
    assert run(capsys, "project", '{"family": "Nope", "n": 2}', "[1, 2]")[0] == 2


def test_check_counterexample(capsys):
    code, out, _ = run(capsys, "check", "counterexample", "--trials", "500")
    assert code == 0 and "FAIL" not in out


def test_check_penalization_informational(capsys):
    code, out, _ = run(capsys, "check", "penalization", "--trials", "20")
    assert code == 0
    assert "info" in out


def test_check_error_bounds_small(capsys):
    code, out, _ = run(capsys, "check", "error-bounds", "--trials", "30", "--seed", "4")
    assert code == 0 and "FAIL" not in out


def test_landscape_shifts(capsys, instance):
    # f = (x - 0.5)^2 = x^2 - x + 0.25
    path = instance({"schema": 1, "objective": {"kind": "QuadForm", "A": [[1.0]], "b": [-1.0]},
                     "set": {"family": "Binary", "n": 1}})
    code, out, _ = run(capsys, "landscape", path, "--lambdas", "0,1,5", "--points", "201")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["coord1", "lambda", "F"]
    data = np.array(rows[1:], dtype=float)
    for x in (-1.0, 1.0):
        base = data[(data[:, 0] == x) & (data[:, 1] == 0), 2][0]
        for lam in (1.0, 5.0):
            val = data[(data[:, 0] == x) & (data[:, 1] == lam), 2][0]
            assert val - base == pytest.approx(-lam)
    # the lambda = 5 curve is midpoint-concave on grid triples
    F = data[data[:, 1] == 5, 2]
    assert np.all(F[1:-1] >= 0.5 * (F[:-2] + F[2:]) - 1e-12)


def test_landscape_2d_header(capsys):
    code, out, _ = run(capsys, "landscape", "mimo_small.json", "--axes", "0,1", "--points", "3",
                       "--lambdas", "1")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["coord1", "coord2", "lambda", "F"] and len(rows) == 10


def test_landscape_outside_hull_exit_2(capsys):
    assert run(capsys, "landscape", "mimo_small.json", "--range=-2,1")[0] == 2
    assert run(capsys, "landscape", "mimo_small.json", "--axes", "5")[0] == 2


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", '{"family": "PartialPermutation", "n": 3, "r": 2}')
    res = json.loads(out)
    assert code == 0 and res["size"] == 6
    spec = cm_sets.partial_permutation(3, 2)
    assert all(cm_sets.contains(spec, np.array(m)) for m in res["members"])
    assert run(capsys, "enumerate", '{"family": "UnitSphere", "n": 3}')[0] == 2
    assert run(capsys, "enumerate", '{"family": "Binary", "n": 12}', "--max-points", "10")[0] == 2


def test_out_flag_writes_file(capsys, tmp_path):
    out = tmp_path / "members.json"
    assert run(capsys, "enumerate", '{"family": "Binary", "n": 2}', "--out", str(out))[0] == 0
    assert json.loads(out.read_text())["size"] == 4
