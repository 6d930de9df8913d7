import json

import numpy as np
import pytest

from rittlab.cli import main
from rittlab.linalg import dump_matrix, load_matrix, matrix_from_json


@pytest.fixture
def mats(tmp_path):
    paths = {}
    for name, T in {"jordan": [[1.0, 1.0], [0.0, 1.0]], "half": np.diag([0.5, 0.2]),
                    "proj": np.diag([1.0, 0.0]), "second": np.diag([0.3, -0.1])}.items():
        paths[name] = tmp_path / f"{name}.json"
        dump_matrix(np.asarray(T, dtype=complex), paths[name])
    return paths


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def test_classify_jordan(capsys, mats):
    code, rep, _ = _run(capsys, "classify", "--matrix", mats["jordan"])
    assert code == 0 and rep["results"]["is_rittE"] is False
    assert rep["versions"]["rittlab"] and "wall_clock" in rep


def test_calc_zero_function(capsys, mats):
    code, rep, _ = _run(capsys, "calc", "--matrix", mats["half"], "--function", "zero")
    assert code == 0
    assert np.array_equal(matrix_from_json(rep["results"]["value"]), np.zeros((2, 2)))


def test_calc_projection(capsys, mats):
    code, rep, _ = _run(capsys, "calc", "--matrix", mats["proj"], "--function", "frac_vanish",
                        "--params", '{"s": 0.5}')
    assert code == 0
    assert np.allclose(matrix_from_json(rep["results"]["value"]), np.diag([0.0, 1.0]), atol=1e-8)


def test_calc_jordan_domain_error(capsys, mats):
    code, _, err = _run(capsys, "calc", "--matrix", mats["jordan"], "--function", "frac_vanish")
    assert code == 1 and "PreconditionSpectrum" in err


def test_missing_matrix(capsys, tmp_path):
    code, _, err = _run(capsys, "classify", "--matrix", tmp_path / "nope.json")
    assert code == 2 and json.loads(err)["error"] == "ConfigInvalid"


def test_required_flag(capsys):
    code, _, err = _run(capsys, "dilate")
    assert code == 2 and "matrix" in json.loads(err)["fields"]


@pytest.mark.parametrize("r,s", [(0.6, 0.3), (0.0, 0.5), (0.3, 1.0)])
def test_bad_radii(capsys, mats, r, s):
    code, _, err = _run(capsys, "classify", "--matrix", mats["half"], "--r", r, "--s", s)
    assert code == 2 and "r,s" in json.loads(err)["fields"]


def test_config_file_and_out(capsys, mats, tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"xi": "1,-1", "r": 0.25, "s": 0.5, "matrix": str(mats["half"])}))
    out = tmp_path / "reports" / "rep.json"
    code, printed, _ = _run(capsys, "classify", "--config", conf, "--s", 0.55, "--out", out)
    assert code == 0 and printed is None
    rep = json.loads(out.read_text())
    assert rep["config"]["r"] == 0.25 and rep["config"]["s"] == 0.55
    assert rep["config"]["xi"] == [[1.0, 0.0], [-1.0, 0.0]]


def test_bad_config_file(capsys, tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text("[1, 2]")
    code, _, _ = _run(capsys, "suite", "--config", conf)
    assert code == 2


def test_dilate(capsys, mats):
    code, rep, _ = _run(capsys, "dilate", "--matrix", mats["half"], "--depth", 40, "--nmax", 4)
    assert code == 0 and rep["checks"]["within_tail_bound"] and rep["checks"]["isometry"]


def test_dilate_joint(capsys, mats):
    code, rep, _ = _run(capsys, "dilate-joint", "--matrix", mats["half"], "--matrix2", mats["second"],
                        "--depth", 30, "--nmax", 3)
    assert code == 0 and rep["ok"]


def test_calc_pair(capsys, mats):
    code, rep, _ = _run(capsys, "calc-pair", "--matrix", mats["half"], "--matrix2", mats["second"],
                        "--function", "zero")
    assert code == 0


def test_gen_corpus(capsys, tmp_path):
    code, rep, _ = _run(capsys, "gen-corpus", "--size", 2, "--dir", tmp_path / "c")
    assert code == 0
    man = json.loads((tmp_path / "c" / "corpus.json").read_text())
    first = man["ritt_true"][0]["file"]
    assert load_matrix(tmp_path / "c" / first).shape[0] >= 2


def test_suite_single(capsys):
    code, rep, err = _run(capsys, "suite", "--only", "6")
    assert code == 0 and rep["checks"] == {"criterion_6": True}
    assert "criterion  6 PASS" in err
