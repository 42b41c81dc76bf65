import json
import math

import pytest

from polyspec.cli import JobConfig, main
from polyspec.errors import InvalidInput


@pytest.fixture
def files(tmp_path):
    def write(name, verts):
        p = tmp_path / name
        p.write_text(json.dumps({"vertices": verts}))
        return str(p)

    return {
        "square": write("square.json", [[0, 0], [1, 0], [1, 1], [0, 1]]),
        "bowtie": write("bowtie.json", [[0, 0], [1, 1], [1, 0], [0, 1]]),
        "big": write("big.json", [[-1, -1], [1, -1], [1, 1], [-1, 1]]),
        "quad": write("quad.json", [[0, 0], [1.2, 0.1], [1.1, 1.0], [-0.1, 0.9]]),
        "dir": tmp_path,
    }


def test_defaults():
    cfg = JobConfig("spectrum")
    assert (cfg.bc, cfg.k, cfg.kappa, cfg.refine, cfg.format) == ("dirichlet", 10, 0.0, 3, "csv")


def test_config_validation():
    with pytest.raises(InvalidInput):
        JobConfig("spectrum", k=0).validate()


def test_spectrum_square(files, capsys):
    out = files["dir"] / "s.csv"
    assert main(["spectrum", "--polygon", files["square"], "--k", "4", "--refine", "4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "index,eigenvalue,residual"
    lam1 = float(lines[1].split(",")[1])
    assert abs(lam1 / (2 * math.pi**2) - 1) < 0.01


def test_spectrum_json(files, capsys):
    assert main(["spectrum", "--polygon", files["square"], "--k", "3", "--refine", "1", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["eigenvalues"]) == 3 and doc["mesh"]["dofs"] > 3


def test_bowtie_exit_2(files, capsys):
    assert main(["spectrum", "--polygon", files["bowtie"]]) == 2
    assert "SelfIntersecting" in capsys.readouterr().err


def test_outside_disc_exit_2(files, capsys):
    assert main(["spectrum", "--polygon", files["big"], "--kappa", "-1"]) == 2
    assert "OutsideDomain" in capsys.readouterr().err


def test_missing_file_exit_2(files, capsys):
    assert main(["spectrum", "--polygon", str(files["dir"] / "nope.json")]) == 2


def test_kappa_sweep_out_of_range(files, capsys):
    out = files["dir"] / "k.csv"
    assert main(["sweep", "--polygon", files["big"], "--kappa-range", "-0.6", "0", "--out", str(out)]) == 2
    assert "KappaOutOfRange" in capsys.readouterr().err


def test_width_sweep_outputs_byte_identical(files):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = files["dir"] / name
        args = ["sweep", "--rect-width", "0.8", "1.2", "--samples", "41", "--k", "4", "--refine", "1", "--out", str(out)]
        assert main(args) == 0
        outs.append((out.read_bytes(), out.with_suffix(".gaps.json").read_bytes()))
    assert outs[0] == outs[1]
    rep = json.loads(outs[0][1])
    assert rep["parameter"] == "s"
    assert abs(rep["min_gap"]["param"] - 1.0) < 1e-12


def test_target_sweep(files):
    out = files["dir"] / "t.csv"
    assert main(["sweep", "--polygon", files["square"], "--target", files["quad"], "--samples", "3",
                 "--k", "3", "--refine", "1", "--out", str(out)]) == 0
    assert out.read_text().startswith("param,branch_0")


def test_sweep_needs_one_mode(files):
    assert main(["sweep", "--polygon", files["square"], "--out", str(files["dir"] / "x.csv")]) == 2


def test_delete_vertex(files, capsys):
    assert main(["delete-vertex", "--polygon", files["square"]]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["min_orientation"] > 0


def test_mesh_export(files, capsys):
    assert main(["mesh", "--polygon", files["square"], "--refine", "0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"index_offset", "points", "triangles", "boundary"}


def test_probe(files, capsys):
    assert main(["probe", "--count", "2", "--k", "4", "--refine", "0"]) == 0
    assert json.loads(capsys.readouterr().out)["count"] == 2


def test_locate_rect(files, capsys):
    assert main(["locate", "--rect-width", "0.8", "1.2", "--j", "2", "--bracket", "0", "1",
                 "--tol", "1e-4", "--refine", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["param*"] - 0.5) < 1e-3


def test_validate_unknown(capsys):
    assert main(["validate", "unknown"]) == 2


def test_validate_scaling(capsys):
    assert main(["validate", "scaling"]) == 0
    assert "[PASS] 4 scaling laws" in capsys.readouterr().out
