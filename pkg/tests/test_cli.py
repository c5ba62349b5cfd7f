import json

import pytest

from quadseq.cli import main
from quadseq.mesh import Mesh


def test_study_scalar_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "report"
    code = main(["study", "scalar", "--eps", "1", "--mesh", "rect",
                 "--n", "4,8", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "energy" in printed and "n=8" in printed
    for ext in ("csv", "md", "json"):
        assert (tmp_path / f"report.{ext}").exists()
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["problem"] == "scalar"


def test_study_deterministic_artifacts(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        code = main(["study", "scalar", "--eps", "1", "--mesh", "random",
                     "--seed", "7", "--n", "4,8", "--out", str(out)])
        assert code == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_study_brinkman(tmp_path):
    out = tmp_path / "flow"
    code = main(["study", "brinkman", "--nu", "1", "--alpha", "0",
                 "--mesh", "trap", "--n", "4,8", "--out", str(out),
                 "--format", "csv"])
    assert code == 0
    header = (tmp_path / "flow.csv").read_text().splitlines()[0]
    assert header.startswith("n,velocity_ah,pressure_l2")


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as exc:
        main(["study", "scalar", "--n", "1,2"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["study", "scalar", "--mesh", "hex"])
    assert exc.value.code == 2
    assert main(["study", "brinkman", "--nu", "0", "--alpha", "0", "--n", "4"]) == 2
    assert main(["mesh", "--mesh", "random", "--delta", "0.9", "--n", "4",
                 "--out", "/tmp/never.json"]) == 2


def test_verify_element_small(capsys):
    code = main(["verify", "element", "--samples", "20", "--seed", "1"])
    assert code == 0
    assert "overall: pass" in capsys.readouterr().out


def test_verify_element_family_alias(capsys):
    code = main(["verify", "element", "--samples", "16", "--family", "rect"])
    assert code == 0
    assert "family=rectangular" in capsys.readouterr().out


def test_verify_sequence(capsys):
    code = main(["verify", "sequence", "--mesh", "rect", "--n", "2"])
    assert code == 0
    out = capsys.readouterr().out
    assert "scalar 3, vector 6, pressure 3" in out


def test_verify_sequence_random(capsys):
    code = main(["verify", "sequence", "--mesh", "random", "--n", "4", "--seed", "9"])
    assert code == 0


def test_mesh_export_roundtrip(tmp_path, capsys):
    path = tmp_path / "m.json"
    code = main(["mesh", "--mesh", "rect", "--n", "2", "--out", str(path),
                 "--roundtrip-check"])
    assert code == 0
    out = capsys.readouterr().out
    assert "9 vertices" in out
    assert "round-trip hash ok" in out
    mesh = Mesh.load(path)
    assert mesh.n_vertices == 9


def test_trapezoid_delta_zero_export_matches_rectangular(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["mesh", "--mesh", "trap", "--delta", "0", "--n", "3", "--out", str(a)]) == 0
    assert main(["mesh", "--mesh", "rect", "--n", "3", "--out", str(b)]) == 0
    va = json.loads(a.read_text())["vertices"]
    vb = json.loads(b.read_text())["vertices"]
    assert va == vb
