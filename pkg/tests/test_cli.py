import json

import pytest

from cmc1_forge import cli
from cmc1_forge.recipes import dihedral_recipe


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr()


def test_list_table(capsys):
    code, out = run(["list"], capsys)
    assert code == 0
    assert "dihedral" in out.out and "tetrahedral" in out.out and "torus" in out.out


def test_list_json(capsys):
    code, out = run(["list", "--json"], capsys)
    rows = json.loads(out.out)
    assert code == 0
    byrow = {d["row"]: d for d in rows}
    assert byrow["dihedral"]["copies_total"] == 12
    assert byrow["tetrahedral"]["copies_total"] == 24


def test_build_writes_mesh_and_report(tmp_path, capsys):
    code, out = run(["build", "--recipe", "dihedral", "--n", "3", "--m", "1", "--t", "0.02", "--mesh", "8",
                     "--out", str(tmp_path), "--json"], capsys)
    assert code == 0
    rep = json.loads(out.out)[0]
    assert rep["copies"] == 12 and rep["ok"]
    doc = json.loads(open(rep["report_file"]).read())
    assert doc["copies"] == len(doc["copy_words"]) == 12 and doc["provenance"]["t"] == 0.02
    assert open(rep["mesh_file"]).readline().startswith("# recipe")


def test_build_report_is_deterministic(tmp_path, capsys):
    docs = []
    for sub in ("a", "b"):
        run(["build", "--recipe", "dihedral", "--t", "0.01", "--mesh", "8", "--out", str(tmp_path / sub)], capsys)
        (f,) = (tmp_path / sub).glob("*.json")
        docs.append(f.read_text().replace(str(tmp_path / sub), "<out>"))
    assert docs[0] == docs[1]


def test_build_at_zero_fails(tmp_path, capsys):
    code, out = run(["build", "--recipe", "dihedral", "--t", "0", "--out", str(tmp_path)], capsys)
    assert code == cli.EXIT_NUMERIC
    assert "degenerate surface at t=0" in out.err


def test_corrupted_recipe_fails_hypotheses(tmp_path, capsys):
    doc = json.loads(dihedral_recipe(3, 1).to_json())
    doc["end_order"] = -3
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out = run(["build", "--recipe-file", str(path), "--t", "0.01", "--out", str(tmp_path)], capsys)
    assert code == cli.EXIT_CERTIFICATE
    assert "[hypotheses]" in out.err


def test_missing_recipe_file(tmp_path, capsys):
    code, _ = run(["kill", "--recipe-file", str(tmp_path / "nope.json"), "--t", "0.01"], capsys)
    assert code == cli.EXIT_IO


def test_recipe_file_round_trip(tmp_path, capsys):
    path = tmp_path / "d.json"
    path.write_text(dihedral_recipe(3, 1).to_json())
    code, out = run(["kill", "--recipe-file", str(path), "--t", "0.01", "--json"], capsys)
    assert code == 0
    assert json.loads(out.out)[0]["converged"]


def test_irreducibility_command(capsys):
    code, out = run(["irreducibility", "--recipe", "tetrahedral", "--m", "1"], capsys)
    assert code == 0 and "nonzero_integral=True" in out.out


def test_config_precedence(tmp_path):
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps({"mesh": 10, "t": 0.03, "tol": {"gauss": 1e-5}}))
    args = cli.build_parser().parse_args(["build", "--config", str(cfg_path), "--t", "0.01"])
    cfg = cli.make_config(args)
    assert cfg.mesh == 10 and cfg.t == 0.01
    assert cfg.tol["gauss"] == 1e-5 and cfg.tol["kill"] == cli.DEFAULT_TOLS["kill"]


def test_t_sweep_parsing():
    cfg = cli.RunConfig(t_sweep="0.01:0.03:3")
    assert cfg.t_values() == pytest.approx([0.01, 0.02, 0.03])


def test_small_mesh_rejected(capsys):
    code, out = run(["build", "--recipe", "dihedral", "--t", "0.01", "--mesh", "4"], capsys)
    assert code == cli.EXIT_NUMERIC
