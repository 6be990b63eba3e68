import json
import math

import numpy as np
import pytest

from polar_iga import cli
from polar_iga.geometry import load_patch, make_circular_sector, make_l_shape, map_point


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_run_pacman_auto(tmp_path, capsys):
    cfg = _write(tmp_path, {"problem": "pacman", "degree": 2, "grading": "auto", "levels": [5, 9, 17],
                            "output_dir": "out", "emit": {"mesh_csv": True, "solution_samples": True}})
    assert cli.main(["run", str(cfg)]) == 0
    out = tmp_path / "out"
    doc = json.loads((out / "report.json").read_text())
    assert doc["mu"] == pytest.approx(0.27)
    assert len(doc["levels"]) == 3
    assert (out / "report.csv").read_text().startswith("# problem=pacman degree=2,2 mu=0.27")
    assert (out / "mesh.csv").read_text().startswith("j1,j2,")
    assert (out / "solution_samples.csv").read_text().startswith("z1,z2,x,y,u_h,u_exact")
    assert (out / "plot_convergence.py").exists()
    assert "least-squares slopes" in capsys.readouterr().out


def test_run_rejects_bad_grading(tmp_path, capsys):
    cfg = _write(tmp_path, {"problem": "pacman", "degree": 2, "grading": 1.5})
    assert cli.main(["run", str(cfg)]) == cli.EXIT_CONFIG
    assert "(0, 1]" in capsys.readouterr().err


@pytest.mark.parametrize(
    "doc",
    [
        {"problem": "disk", "degree": 2},
        {"problem": "pacman", "degree": 0},
        {"problem": "pacman", "degree": 2, "levels": []},
        {"problem": "pacman", "degree": 2, "levels": [9, 5]},
        {"problem": "pacman", "degree": 2, "grading": "steep"},
        {"problem": "pacman", "degree": 2, "emit": {"pictures": True}},
        {"problem": "pacman", "degree": 2, "colour": "red"},
        {"degree": 2},
    ],
)
def test_invalid_configs(tmp_path, doc):
    assert cli.main(["run", str(_write(tmp_path, doc))]) == cli.EXIT_CONFIG


def test_unparsable_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert cli.main(["run", str(p)]) == cli.EXIT_CONFIG
    assert cli.main(["run", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG


def test_run_toml_lshape_uniform(tmp_path, capsys):
    p = tmp_path / "c.toml"
    p.write_text('problem = "lshape"\ndegree = 1\ngrading = "uniform"\nlevels = [5, 9, 17, 33]\noutput_dir = "o"\n')
    assert cli.main(["run", str(p)]) == 0
    slope = json.loads((tmp_path / "o" / "report.json").read_text())["slopes"]["h1"]
    assert abs(slope - 1 / 3) < 0.1
    assert "H1" in capsys.readouterr().out


def test_run_is_deterministic(tmp_path):
    texts = []
    for k in range(2):
        cfg = _write(tmp_path, {"problem": "lshape", "degree": 2, "grading": "auto", "levels": [3, 5, 9],
                                "output_dir": f"o{k}"}, f"c{k}.json")
        assert cli.main(["run", str(cfg)]) == 0
        texts.append((tmp_path / f"o{k}" / "report.csv").read_bytes())
    assert texts[0] == texts[1]


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    from polar_iga.solver import SolverError

    def boom(*a, **k):
        raise SolverError("factorization failed")

    monkeypatch.setattr(cli, "convergence_study", boom)
    cfg = _write(tmp_path, {"problem": "pacman", "degree": 2})
    assert cli.main(["run", str(cfg)]) == cli.EXIT_NUMERIC


def test_export_geometry(tmp_path, rng):
    p = tmp_path / "pac.json"
    assert cli.main(["export-geometry", "pacman", str(p)]) == 0
    doc = json.loads(p.read_text())
    assert doc["corner_angle"] == pytest.approx(5 * math.pi / 3)
    again = load_patch(p)
    ref = make_circular_sector(5 * math.pi / 3)
    for z in rng.random((100, 2)):
        assert np.abs(map_point(again, z) - map_point(ref, z)).max() <= 1e-14
    q = tmp_path / "l.json"
    assert cli.main(["export-geometry", "lshape", str(q)]) == 0
    cps = np.array(json.loads(q.read_text())["control_points"]).reshape(2, 5, 2)
    np.testing.assert_array_equal(cps[1], make_l_shape().control_points[1])


def test_export_geometry_errors(tmp_path):
    assert cli.main(["export-geometry", "disk", str(tmp_path / "x.json")]) == cli.EXIT_CONFIG
    assert cli.main(["export-geometry", "pacman", str(tmp_path / "no" / "dir" / "x.json")]) != 0


def test_mesh_info(tmp_path, capsys):
    cfg = _write(tmp_path, {"problem": "pacman", "degree": 2, "grading": 0.5, "levels": [5, 9]})
    assert cli.main(["mesh-info", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "mu=0.5" in out and "theta1" in out
    assert len(out.strip().splitlines()) == 4


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        cli.main([])
