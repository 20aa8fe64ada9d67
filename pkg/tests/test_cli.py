import math
import subprocess
import sys

import numpy as np
import pytest

from gmschauder import cli
from gmschauder.io import read_numeric, read_paths
from gmschauder.process import make_wiener
from gmschauder.basis import psi00
from gmschauder.verify import Check, parseval_grid


def run(*argv):
    return cli.main(list(argv))


def test_sample_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run("sample", "--process", "wiener", "--depth", "8", "--paths", "3", "--seed", "7", "--output", str(out)) == 0
    assert a.read_bytes() == b.read_bytes()
    paths = read_paths(a)
    assert paths.values.shape == (3, 257)
    assert np.all(paths.values[:, 0] == 0.0)
    assert paths.seed == 7 and paths.level == 8


def test_sample_header_and_routes(tmp_path):
    out = tmp_path / "ou.csv"
    assert run("sample", "--process", "ou:1.0", "--depth", "4", "--paths", "2", "-o", str(out)) == 0
    text = out.read_text()
    assert "# process: ou:1.0\n" in text and "# tool: gmschauder" in text
    ref = tmp_path / "ref.csv"
    assert run("sample", "--process", "ou:1.0", "--depth", "4", "--paths", "2", "--route", "refine", "-o", str(ref)) == 0
    np.testing.assert_allclose(read_paths(ref).values, read_paths(out).values, atol=1e-12)


def test_seed_from_environment(tmp_path, monkeypatch):
    env, flag = tmp_path / "env.csv", tmp_path / "flag.csv"
    monkeypatch.setenv(cli.SEED_ENV, "42")
    assert run("sample", "--depth", "3", "-o", str(env)) == 0
    monkeypatch.delenv(cli.SEED_ENV)
    assert run("sample", "--depth", "3", "--seed", "42", "-o", str(flag)) == 0
    assert env.read_bytes() == flag.read_bytes()
    monkeypatch.setenv(cli.SEED_ENV, "not-a-number")
    assert run("sample", "--depth", "3", "-o", str(env)) == 2


@pytest.mark.parametrize("process", ["wiener", "ou:2.0", "custom"])
def test_verify_passes(process, tmp_path, capsys):
    if process == "custom":
        grid = np.linspace(0, 1, 201)
        np.savetxt(tmp_path / "f.txt", np.column_stack([grid, grid - 0.5]))
        np.savetxt(tmp_path / "g.txt", np.column_stack([grid, 1 + grid]))
        process = f"custom:{tmp_path / 'f.txt'},{tmp_path / 'g.txt'}"
    assert run("verify", "--process", process, "--depth", "5") == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "gram-orthonormality" in out


def test_verify_failure_exit(monkeypatch, capsys):
    bad = [Check("ok", True, 0.0, 1.0), Check("broken", False, 1.0, 1e-8, "worst node (2, 1)")]
    monkeypatch.setattr(cli, "run_suite", lambda *a, **k: bad)
    assert run("verify") == 1
    assert "broken" in capsys.readouterr().err


def test_degenerate_exit(tmp_path):
    grid = np.array([0.0, 0.5, 0.5000001, 1.0])
    np.savetxt(tmp_path / "f.txt", np.column_stack([grid, [1.0, 1.0, 0.0, 0.0]]))
    np.savetxt(tmp_path / "g.txt", np.column_stack([grid, np.ones(4)]))
    process = f"custom:{tmp_path / 'f.txt'},{tmp_path / 'g.txt'}"
    assert run("verify", "--process", process, "--depth", "4") == 3


def test_config_errors(tmp_path):
    assert run("sample", "--depth", "31") == 2
    assert run("sample", "--paths", "0") == 2
    assert run("sample", "--process", "ou:x") == 2
    assert run("sample", "--process", "custom:/nonexistent/f,/nonexistent/g") == 2
    assert run("tree-dump", "--split", "1.5") == 2
    assert run("fpt-demo", "--barrier", "-1") == 2
    assert run("fpt-demo", "--coarse", "20", "--depth", "8") == 2
    assert run("covtable", "--min-depth", "9", "--depth", "4") == 2
    with pytest.raises(SystemExit) as info:
        run("sample", "--depth", "abc")
    assert info.value.code == 2


def test_tree_and_basis_dump(tmp_path):
    out = tmp_path / "tree.csv"
    assert run("tree-dump", "--depth", "3", "-o", str(out)) == 0
    _, cols, data = read_numeric(out)
    assert cols == ["n", "k", "l", "m", "r"] and data.shape == (7, 5)
    assert list(data[4]) == [3.0, 1.0, 0.25, 0.375, 0.5]
    basis, curves = tmp_path / "basis.csv", tmp_path / "curves.csv"
    assert run("basis-dump", "--depth", "3", "-o", str(basis), "--curves", str(curves), "--points", "9") == 0
    _, cols, data = read_numeric(basis)
    assert cols == ["n", "k", "l", "m", "r", "L", "R"]
    np.testing.assert_allclose(data[:, 5], 2 ** ((data[:, 0] - 1) / 2))
    header, cols, data = read_numeric(curves)
    assert cols == ["n", "k", "t", "psi"] and data.shape == (8 * 9, 4)
    root = data[data[:, 0] == 0]
    np.testing.assert_allclose(root[:, 3], root[:, 2])


def test_covtable(tmp_path):
    out = tmp_path / "cov.csv"
    assert run("covtable", "--depth", "10", "--min-depth", "0", "-o", str(out)) == 0
    _, cols, data = read_numeric(out)
    assert cols == ["N", "sup_error", "mean_error", "decreasing"]
    sup = data[:, 1]
    assert np.all(np.diff(sup[2:]) < 0) and np.all(data[3:, 3] == 1)
    assert np.all(np.abs(np.log2(sup[2:-1] / sup[3:]) - 1) <= 0.2)
    t = parseval_grid(129)
    w = make_wiener()
    n0 = np.max(np.abs(np.outer(psi00(w, t), psi00(w, t)) - np.minimum.outer(t, t)))
    assert sup[0] == pytest.approx(n0, rel=1e-14)


def test_fpt_demo(tmp_path):
    out = tmp_path / "fpt.csv"
    assert run("fpt-demo", "--paths", "500", "--depth", "8", "--barrier", "100", "-o", str(out)) == 0
    header, cols, data = read_numeric(out)
    assert header["crossings"] == "0" and float(header["refined_fraction"]) == 0.0
    assert cols == ["t_lo", "t_hi", "crossings"] and data[:, 2].sum() == 0
    assert run("fpt-demo", "--paths", "500", "--depth", "8", "--band", "inf", "-o", str(out)) == 0
    header, _, data = read_numeric(out)
    assert float(header["band"]) == math.inf
    assert data[:, 2].sum() == int(header["crossings"]) > 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gmschauder", "tree-dump", "--depth", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[-1] == "1,0,0,0.5,1"
