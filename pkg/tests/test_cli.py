import csv
import json
import logging

import numpy as np
import pytest

from cellhom import cli
from cellhom.config import SCHEMA, config_hash, load_config, paper_config, parse_config
from cellhom.errors import ConfigError

NU_HEADER = ["1e-06", "0.0001", "0.1", "0.2", "0.3", "0.4", "0.49"]


def write(path, data):
    path.write_text(json.dumps(data, indent=1))
    return str(path)


@pytest.fixture
def paper(tmp_path):
    return write(tmp_path / "paper.json", paper_config(16))


@pytest.fixture
def homogeneous(tmp_path):
    cfg = {"schema": SCHEMA, "geometry": {"l1": 1.0, "l2": 1.0},
           "material": {"model": "direct_KG", "K": 0.7, "G": 0.4}, "mesh": {"n": 4}}
    return write(tmp_path / "homog.json", cfg)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_homogenize_homogeneous(homogeneous, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["homogenize", homogeneous, "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    np.testing.assert_allclose(res["result"]["D"], [[0.25, 0.25, 0], [0.25, 0.25, 0], [0, 0, 0]], atol=1e-12)
    assert res["schema"] == "cellhom-result/1"
    assert res["config_hash"] == config_hash(json.loads(open(homogeneous).read()))
    assert "C*" in capsys.readouterr().err


def test_homogenize_paper_fields(paper, tmp_path):
    out = tmp_path / "r.json"
    assert cli.main(["homogenize", paper, "--out", str(out), "--geomrepr", "--vtk", str(tmp_path / "f")]) == 0
    res = json.loads(out.read_text())["result"]
    assert {"B_star", "C_star", "D", "diagnostics", "mesh"} <= set(res)
    assert res["B_star"][0][0] == pytest.approx(0.98, abs=0.02)
    for k in (1, 2, 3):
        text = (tmp_path / f"f_e{k}.vtk").read_text()
        assert text.startswith("# vtk DataFile Version 3.0")
        assert "TENSORS stress" in text and "VECTORS displacement" in text


def test_homogenize_reproducible(paper, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli.main(["homogenize", paper, "--out", str(a)])
    cli.main(["homogenize", paper, "--out", str(b)])
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    da.pop("timestamp"), db.pop("timestamp")
    assert da == db
    strip = lambda t: "\n".join(l for l in t.splitlines() if '"timestamp"' not in l)
    assert strip(a.read_text()) == strip(b.read_text())


def test_config_echo_roundtrip(paper, tmp_path):
    out = tmp_path / "r.json"
    cli.main(["homogenize", paper, "--out", str(out)])
    echo = json.loads(out.read_text())["config"]
    assert parse_config(echo).echo() == echo == json.loads(open(paper).read())


def test_sweep_table_csvs(paper, tmp_path):
    prefix = str(tmp_path / "t")
    assert cli.main(["sweep", paper, "--nu-list", ",".join(NU_HEADER), "--out", prefix]) == 0
    t1, t2 = read_csv(prefix + "_table1.csv"), read_csv(prefix + "_table2.csv")
    assert t1[0] == ["entry", *NU_HEADER] and len(t1[0]) == 8
    assert [r[0] for r in t1[1:]] == ["B1", "B4", "B2", "B6"]
    assert t2[0][-1] == "spread" and [r[0] for r in t2[1:]] == [f"D{k}" for k in range(1, 7)]


def test_sweep_single_nu(paper, tmp_path):
    prefix = str(tmp_path / "s")
    cli.main(["sweep", paper, "--nu-list", "0.3", "--out", prefix])
    assert all(float(r[-1]) == 0 for r in read_csv(prefix + "_table2.csv")[1:])


def test_sweep_grid(homogeneous, tmp_path):
    prefix = str(tmp_path / "g")
    cli.main(["sweep", homogeneous, "--kg-grid", "0.3,1,3", "--out", prefix])
    rows = read_csv(prefix + "_grid.csv")
    data = [r for r in rows[1:] if r[0] != "spread"]
    assert len(data) == 9


def test_mesh_info(paper, tmp_path, capsys):
    vtk = tmp_path / "m.vtk"
    assert cli.main(["mesh-info", paper, "--vtk", str(vtk)]) == 0
    out = capsys.readouterr().out
    assert "min_angle" in out
    assert "CELLS" in vtk.read_text()


def test_verify_quick(tmp_path):
    out = tmp_path / "v.json"
    assert cli.main(["verify", "--level", "quick", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["status"] == "pass"


def test_paper_example_warns(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert cli.main(["paper-example", "--n", "8", "--out", str(tmp_path / "pe")]) in (0, 1)
    assert "below the recommended resolution" in caplog.text
    assert read_csv(str(tmp_path / "pe") + "_table2.csv")[0][0] == "entry"


def test_missing_radius(tmp_path, capsys):
    cfg = paper_config(16)
    del cfg["geometry"]["holes"][0]["radius"]
    path = write(tmp_path / "bad.json", cfg)
    with pytest.raises(ConfigError, match=r"holes\[0\]\.radius"):
        load_config(path)
    assert cli.main(["homogenize", path]) == 2
    assert "radius" in capsys.readouterr().err


def test_invalid_json_position(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "schema": "cellhom-run/1",\n  "geometry": {,\n}')
    with pytest.raises(ConfigError, match=r"broken\.json:3:\d+"):
        load_config(p)


@pytest.mark.parametrize("mutate, field", [
    (lambda c: c.update(extra=1), "unknown key"),
    (lambda c: c["material"].update(nu=0.5), "material"),
    (lambda c: c.update(bc_mode="neumann"), "bc_mode"),
    (lambda c: c["geometry"]["holes"][0].update(radius=0.6), "geometry"),
    (lambda c: c["geometry"]["holes"][0].update(type="star"), "type"),
    (lambda c: c["mesh"].update(n=0), "mesh.n"),
])
def test_config_errors(mutate, field):
    cfg = paper_config(16)
    mutate(cfg)
    with pytest.raises(ConfigError, match=field):
        parse_config(cfg)


def test_region_materials():
    cfg = paper_config(16)
    cfg["geometry"]["regions"] = [{"tag": "ring", "shape": {"type": "circle", "center": [1, 0.5], "radius": 0.35}}]
    cfg["material"]["regions"] = {"ring": {"model": "direct_KG", "K": 2.0, "G": 1.0}}
    rc = parse_config(cfg)
    assert rc.material.regions["ring"].K == 2.0
    cfg["material"]["regions"] = {"core": {"model": "direct_KG", "K": 2.0, "G": 1.0}}
    with pytest.raises(ConfigError, match="core"):
        parse_config(cfg)


def test_missing_file(tmp_path):
    assert cli.main(["homogenize", str(tmp_path / "nope.json")]) == 2
