import json

import numpy as np
import pytest

from srharmonic import cli
from srharmonic import io as sio
from srharmonic.domain import GridDomain


def summary(path):
    return json.loads((path / "summary.json").read_text())


def go(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.run([argv[0], "--output-dir", str(out), *argv[1:]])
    return code, summary(out), out


def test_algebra_check(tmp_path):
    code, s, out = go(tmp_path, "algebra-check", "--algebra", "heisenberg:2")
    assert code == 0 and s["status"] == "ok"
    assert s["results"]["jacobi_defect"] == 0 and s["results"]["associativity_defect"] < 1e-12
    assert (out / "algebra.json").exists()
    assert set(s["versions"]) >= {"srharmonic", "numpy", "scipy", "python", "kernel_backend"}


def test_mc_residual(tmp_path):
    code, s, out = go(tmp_path, "mc-residual", "--map", "corpus:mc_mixed", "--grids", "16", "32")
    assert code == 0 and len(s["results"]["orders"]) == 1
    assert 1.5 < s["results"]["orders"][0] < 2.5
    assert (out / "mc_residual.csv").read_text().startswith("n,h,residual_l2")


def test_energy(tmp_path):
    code, s, out = go(tmp_path, "energy", "--map", "corpus:grad_interval_geodesic")
    r = s["results"]
    assert code == 0 and r["horizontal"] and abs(r["energy"] - 0.5) < 1e-4
    assert r["gradient_check"]["extrapolated_defect"] < 1e-5
    assert (out / "energy_density.csv").exists()


@pytest.mark.parametrize("form,verdict", [("zero", "singular"), ("injective", "regular"), ("loop", "singular")])
def test_classify(tmp_path, form, verdict):
    code, s, out = go(tmp_path, "classify", "--form", form)
    assert code == 0 and s["results"]["verdict"] == verdict
    assert (out / "sigma_tail.csv").exists()
    assert (out / "abnormal_eta.csv").exists() == (verdict == "singular")


def test_classify_form_csv(tmp_path):
    dom = GridDomain.torus((8, 8))
    alpha = np.zeros((8, 8, 2, 3))
    alpha[..., 0, 0] = alpha[..., 1, 1] = 1.0
    sio.write_form_csv(tmp_path / "a.csv", dom, alpha)
    (tmp_path / "dom.json").write_text(json.dumps({"kind": "torus", "shape": [8, 8]}))
    code, s, _ = go(tmp_path, "classify", "--form", str(tmp_path / "a.csv"), "--domain", str(tmp_path / "dom.json"))
    assert code == 0 and s["results"]["verdict"] == "regular"


def test_certify(tmp_path):
    code, s, out = go(tmp_path, "certify", "--map", "corpus:linear_x")
    assert code == 0 and s["results"]["normal"]["residual_norm"] < 1e-10
    assert (out / "normal_lambda.csv").exists() and (out / "abnormal_eta.csv").exists()


def test_geodesic(tmp_path):
    code, s, out = go(tmp_path, "geodesic", "--lam0", "1", "0", "6.283185307179586")
    r = s["results"]
    assert code == 0 and r["abs_zeta_end"] < 1e-8
    assert abs(r["abs_w_end"] - 1 / (4 * np.pi)) < 1e-8
    assert r["hamiltonian_drift"] < 1e-10 and r["closed_form_gap"] < 1e-8
    t, g, lam = sio.read_trajectory_csv(out / "trajectory.csv")
    assert len(t) == 1001


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_geodesic_backends(tmp_path, backend):
    from srharmonic.kernels import BACKENDS
    if backend not in BACKENDS:
        pytest.skip("compiled kernels not built")
    code, s, _ = go(tmp_path, "geodesic", "--lam0", "1", "0", "2", "--backend", backend, "--steps", "100")
    assert code == 0 and s["results"]["closed_form_gap"] < 1e-6


def test_heisenberg_residual(tmp_path):
    code, s, out = go(tmp_path, "heisenberg-residual", "--map", "corpus:sin_probe")
    assert code == 0 and not s["results"]["normal_harmonic"]
    assert s["results"]["Y_zero"]["pde_residual_max"] >= 1
    for name in ("map.csv", "Y.csv", "theta_pullback_norm.csv"):
        assert (out / name).exists()


def test_bracket_check(tmp_path):
    code, s, _ = go(tmp_path, "bracket-check", "--algebra", "abelian:3:2", "--q", "1")
    assert code == 0 and s["results"]["verdict"] == "counterexample"
    code, s, _ = go(tmp_path, "bracket-check", "--algebra", "heisenberg:1", "--trials", "50")
    assert s["results"]["verdict"] == "no counterexample"


def test_map_csv_input(tmp_path):
    dom = GridDomain.box((9, 9))
    x, _ = dom.coordinates
    sio.write_map_csv(tmp_path / "m.csv", dom, np.stack([x, 0 * x, 0 * x], axis=-1))
    (tmp_path / "dom.json").write_text(json.dumps({"kind": "box", "shape": [9, 9]}))
    code, s, _ = go(tmp_path, "certify", "--map", str(tmp_path / "m.csv"), "--domain", str(tmp_path / "dom.json"))
    assert code == 0 and s["results"]["normal"]["residual_norm"] < 1e-10


class TestConfig:
    def test_config_and_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"algebra": "heisenberg:1", "lam0": [1, 0, 0], "steps": 20}))
        code, s, _ = go(tmp_path, "geodesic", "--config", str(cfg), "--steps", "40")
        assert code == 0 and s["inputs"]["steps"] == 40 and s["results"]["steps"] == 40

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
        assert cli.run(["algebra-check"]) == 0
        assert summary(tmp_path / "env")["status"] == "ok"

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
        assert cli.run(["algebra-check", "--output-dir", str(tmp_path / "flag")]) == 0
        assert (tmp_path / "flag" / "summary.json").exists() and not (tmp_path / "env").exists()


class TestExitCodes:
    def test_bad_json(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{\n"algebra": heisenberg\n}')
        code, s, _ = go(tmp_path, "algebra-check", "--config", str(cfg))
        assert code == cli.EXIT_INPUT and s["status"] == "input_error"
        assert "bad.json:2:" in capsys.readouterr().err

    @pytest.mark.parametrize("argv", [
        ["geodesic"],
        ["geodesic", "--lam0", "1", "2"],
        ["certify", "--map", "corpus:missing"],
        ["classify", "--form", "zero", "--algebra", "heisenberg:2"],
        ["algebra-check", "--algebra", "lie:3"],
        ["geodesic", "--lam0", "1", "0", "0", "--T", "-1"],
    ])
    def test_input_errors(self, tmp_path, argv):
        code, s, _ = go(tmp_path, *argv)
        assert code == cli.EXIT_INPUT and s["error"]

    def test_numerical_failure(self, tmp_path):
        code, s, _ = go(tmp_path, "geodesic", "--lam0", "1e200", "1e200", "1e200", "--steps", "10")
        assert code == cli.EXIT_NUMERICAL and s["status"] == "numerical_failure"
        assert s["diagnostic"]["kind"] == "normal"


def test_deterministic(tmp_path):
    argv = ["classify", "--form", "loop", "--n", "12"]
    runs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert cli.run(argv + ["--output-dir", str(out)]) == 0
        s = summary(out)
        s.pop("timestamp")
        runs.append((s, (out / "sigma_tail.csv").read_text()))
    assert runs[0] == runs[1]
