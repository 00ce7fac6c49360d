"""
End-to-end tests of the command line entry point.
"""

import csv
import io
import json

import pytest

from DimerCFF import build_parser, main


def run(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    return info.value.code


def test_det_command(capsys):
    assert run(["det", '{"cols": 2, "rows": 2}']) == 0
    (row,) = csv.DictReader(io.StringIO(capsys.readouterr().out))
    assert int(row["vertices"]) == 4
    assert float(row["abs_det"]) == pytest.approx(2.0)


def test_edge_probs_command(capsys):
    assert run(["edge-probs", '{"cols": 2, "rows": 2}']) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 4
    assert all(float(r["probability"]) == pytest.approx(0.5) for r in rows)


def test_enumerate_command(capsys):
    assert run(["enumerate", '{"cols": 2, "rows": 3}', "--list"]) == 0
    lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert lines[-1] == {"count": 3}
    assert len(lines) == 4


def test_graph_from_file(tmp_path, capsys):
    path = tmp_path / "cyl.yaml"
    path.write_text("topology: cylinder\nk: 2\ntau: 1.0\nstyle: ND\n")
    assert run(["enumerate", str(path)]) == 0
    assert json.loads(capsys.readouterr().out.splitlines()[-1]) == {"count": 9}


def test_gap_study_command(tmp_path, capsys):
    assert run(["gap-study", "--k", "2", "3", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("gap: PASS")
    assert (tmp_path / "gap.csv").exists()
    assert (tmp_path / "gap_summary.json").exists()


def test_kenyon_verify_command(tmp_path, capsys):
    spec = {"id": "r", "cols": 4, "rows": 4, "tuples": [[[[0, 0], [1, 0]], [[2, 2], [2, 3]]]]}
    assert run(["kenyon-verify", json.dumps(spec), "--out", str(tmp_path)]) == 0
    assert "kenyon: PASS" in capsys.readouterr().out


def test_cff_law_command(tmp_path):
    law = {"c0": [0.0], "Q": [[2.0]], "moments": [[0], [2]]}
    assert run(["cff-law", json.dumps(law), "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "cff-law_summary.json").read_text())
    assert summary["pass"] is True


def test_cff_law_needs_a_mapping(tmp_path):
    assert run(["cff-law", "[1]", "--out", str(tmp_path)]) == 1


def test_continuum_u2_command(capsys):
    assert run(["continuum-u2", "[[0.1, 0.1], [0.4, 0.2]]", "--style", "DD"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 2
    assert float(rows[0]["u2"]) == pytest.approx(float(rows[1]["u2"]))


def test_malformed_graph_fails():
    assert run(["det", "{not json"]) == 1


def test_unbuildable_graph_fails():
    assert run(["det", '{"topology": "planar_multiholed", "cols": 4, "rows": 4}']) == 1


def test_invalid_log_level_exits():
    assert run(["--log-level", "LOUD", "det", '{"cols": 2, "rows": 2}']) == 2


def test_parser_defaults():
    args = build_parser().parse_args(["gap-study"])
    assert args.k == [2, 3, 4]
    assert args.style == "both"
    args = build_parser().parse_args(["u2-convergence", "--k", "8", "16"])
    assert args.k == [8, 16]
    assert args.style == "ND"
