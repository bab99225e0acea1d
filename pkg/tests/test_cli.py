import numpy as np

from manifold1bit import load_gmra
from manifold1bit.cli import main

CFG = """
ambient_dim = 10
manifold = circle
intrinsic_dim = 1
n_train = 1500
n_test = 8
j_max = 4
levels = 3
schemes = sd1
p = 4
lambdas = 8
ensemble = gaussian
seed = 7
mu = 0.05
"""


def test_usage_error_exit_code():
    assert main(["no-such-command"]) == 1
    assert main(["build-gmra"]) == 1  # missing required flags
    assert main([]) == 1


def test_build_and_validate_gmra(tmp_path, capsys):
    out = str(tmp_path / "c.gmra")
    rc = main(["build-gmra", "--manifold", "circle", "--n", "1500", "--N", "6",
               "--d", "1", "--jmax", "4", "--seed", "3", "--out", out])
    assert rc == 0
    g = load_gmra(out)
    assert g.num_levels == 5
    rc = main(["validate-gmra", "--gmra", out, "--manifold", "circle",
               "--n", "400", "--seed", "4", "--frame-seed", "3"])
    assert rc == 0
    text = capsys.readouterr().out
    assert "tube" in text and "99%" in text
    # fresh samples of the same embedded circle refine with depth
    rows = [l for l in text.splitlines() if l.strip() and l.strip()[0].isdigit()]
    errs = [float(line.split()[6]) for line in rows]
    assert errs[-1] < errs[0]


def test_build_gmra_runtime_failure(tmp_path):
    rc = main(["build-gmra", "--manifold", "circle", "--n", "4", "--N", "6",
               "--d", "1", "--jmax", "4", "--seed", "3",
               "--out", str(tmp_path / "x.gmra")])
    assert rc == 2  # too few points


def test_build_gmra_from_npy_input(tmp_path):
    pts = np.random.default_rng(0).normal(size=(600, 5))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)  # unit sphere S^4
    src = str(tmp_path / "pts.npy")
    np.save(src, pts)
    out = str(tmp_path / "g.gmra")
    rc = main(["build-gmra", "--input", src, "--d", "2", "--jmax", "3",
               "--seed", "1", "--mu", "0.05", "--out", out])
    assert rc == 0
    g = load_gmra(out)
    assert np.linalg.norm(g.level(0).centers[0]) <= 0.95


def test_run_subcommand(tmp_path, capsys):
    cfg_path = str(tmp_path / "cfg.txt")
    open(cfg_path, "w").write(CFG)
    out = str(tmp_path / "res.csv")
    rc = main(["run", "--config", cfg_path, "--out", out])
    assert rc == 0
    lines = open(out, encoding="utf-8").read().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("scheme,")


def test_run_missing_config_is_runtime_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.txt"),
                 "--out", str(tmp_path / "o.csv")]) == 2


def test_width_subcommand(capsys):
    rc = main(["width", "--manifold", "sphere", "--d", "2", "--n", "5000",
               "--N", "8", "--seed", "5", "--mu", "0", "--draws", "64"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "width estimate" in out and "rad(S)" in out
