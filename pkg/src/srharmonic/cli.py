"""Command-line front end.

Each run reads an optional JSON config (``--config``); command-line flags
override its fields. Artifacts and ``summary.json`` go to the output
directory: ``--output-dir``, else ``$SRHARMONIC_OUTPUT_DIR``, else the
config's ``output_dir``, else ``runs/<command>``.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import corpus
from . import io as sio
from .algebra import (
    LeftInvariantStructure,
    group_inverse,
    group_multiply,
    heisenberg_index,
    jacobi_defect,
)
from .domain import GridDomain, l2_norm
from .errors import InputError, NumericalError, SRHarmonicError
from .forms import darboux_derivative, energy_density, horizontality_residual, maurer_cartan_residual, restrict
from .geodesics import closed_form_gap, heisenberg_state_to_complex, shoot_normal
from .heisenberg import HeisenbergMap, harmonic_residual, recover_Y, theta_pullback
from .variational import (
    SINGULAR_TOL,
    abnormal_certificate,
    classify_regularity,
    energy_gradient_check,
    normal_certificate,
    strong_bracket_check,
)

OUTPUT_ENV = "SRHARMONIC_OUTPUT_DIR"
EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3

DEFAULTS = {
    "algebra": "heisenberg:1",
    "seed": 0,
    "trials": 1000,
    "tol_rel": SINGULAR_TOL,
    "tail": 8,
    "method": "auto",
    "steps": 1000,
    "T": 1.0,
    "backend": None,
}


def _version() -> str:
    from importlib.metadata import PackageNotFoundError, version
    try:
        return version("srharmonic")
    except PackageNotFoundError:
        return "unknown"


def _versions() -> dict:
    from .kernels import BACKEND
    return {"srharmonic": _version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "kernel_backend": BACKEND}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Path):
        return str(x)
    return x


# input resolution -------------------------------------------------------

def _structure(cfg) -> LeftInvariantStructure:
    spec = cfg.get("algebra")
    if isinstance(spec, dict):
        return sio.structure_from_dict(spec, "config.algebra")
    spec = str(spec)
    if spec.endswith(".json"):
        return sio.read_structure(spec)
    return sio.structure_from_dict({"preset": spec}, "config.algebra")


def _domain(cfg) -> GridDomain:
    spec = cfg.get("domain")
    if spec is None:
        raise InputError("config: a domain is required when the map is not a corpus entry")
    if isinstance(spec, dict):
        return sio.domain_from_dict(spec, "config.domain")
    return sio.read_domain(spec)


def _map(cfg):
    """``(domain, structure, f, corpus entry or None)`` from ``cfg['map']``."""
    spec = cfg.get("map")
    if spec is None:
        raise InputError("config: missing 'map' (a CSV path or corpus:NAME)")
    spec = str(spec)
    if spec.startswith("corpus:"):
        entry = corpus.build(spec.split(":", 1)[1], cfg.get("n"))
        return entry.domain, entry.structure, entry.f, entry
    dom, st = _domain(cfg), _structure(cfg)
    return dom, st, sio.read_map_csv(spec, dom, st.dim), None


def _restricted_alpha(dom, st, f):
    a = darboux_derivative(dom, st.algebra, f)
    return a, restrict(dom, a)


# commands ---------------------------------------------------------------

def cmd_algebra_check(cfg, out: Path) -> dict:
    st = _structure(cfg)
    alg = st.algebra
    c = alg.structure_constants
    res = {"dim": alg.dim, "labels": list(alg.labels), "jacobi_defect": jacobi_defect(alg),
           "antisymmetry_defect": float(np.max(np.abs(c + np.swapaxes(c, 0, 1)), initial=0.0)),
           "step_two": alg.is_step_two(), "rank": st.rank, "corank": st.corank}
    if alg.is_step_two():
        rng = np.random.default_rng(cfg["seed"])
        x, y, z = rng.standard_normal((3, cfg["trials"], alg.dim))
        lhs = group_multiply(alg, group_multiply(alg, x, y), z)
        rhs = group_multiply(alg, x, group_multiply(alg, y, z))
        res["associativity_defect"] = float(np.max(np.abs(lhs - rhs)))
        res["inverse_defect"] = float(np.max(np.abs(group_multiply(alg, x, group_inverse(alg, x)))))
    sio.write_structure(out / "algebra.json", st)
    return res


def cmd_mc_residual(cfg, out: Path) -> dict:
    spec = str(cfg.get("map", ""))
    grids = [int(n) for n in cfg.get("grids", [16, 32, 64])]
    rows = []
    if spec.startswith("corpus:"):
        name = spec.split(":", 1)[1]
        for n in grids:
            entry = corpus.build(name, n)
            a = darboux_derivative(entry.domain, entry.structure.algebra, entry.f)
            r = l2_norm(entry.domain, maurer_cartan_residual(entry.domain, entry.structure.algebra, a),
                        entry.domain.interior_mask)
            rows.append((n, float(max(entry.domain.spacing)), r))
    else:
        dom, st, f, _ = _map(cfg)
        a = darboux_derivative(dom, st.algebra, f)
        rows.append((dom.shape[0], float(max(dom.spacing)),
                     l2_norm(dom, maurer_cartan_residual(dom, st.algebra, a), dom.interior_mask)))
    orders = []
    for (_, h0, r0), (_, h1, r1) in zip(rows, rows[1:]):
        orders.append(float(np.log(r0 / r1) / np.log(h0 / h1)) if r0 > 0 and r1 > 0 else None)
    with open(out / "mc_residual.csv", "w") as fh:
        fh.write("n,h,residual_l2\n")
        for n, h, r in rows:
            fh.write(f"{n},{h!r},{r!r}\n")
    return {"grids": [r[0] for r in rows], "residual_l2": [r[2] for r in rows], "orders": orders}


def _horizontality_tol(cfg, dom) -> float:
    # discrete derivatives leave an O(h^2) contact residual on exactly horizontal maps
    if cfg.get("horizontality_tol") is not None:
        return float(cfg["horizontality_tol"])
    return 10 * max(dom.spacing) ** 2


def cmd_energy(cfg, out: Path) -> dict:
    dom, st, f, entry = _map(cfg)
    _, aD = _restricted_alpha(dom, st, f)
    horiz = float(np.max(np.abs(horizontality_residual(dom, st, aD)[dom.interior_mask]), initial=0.0))
    dens = energy_density(st, aD)
    res = {"energy": float(np.sum(dens * dom.weights)), "horizontality_residual": horiz,
           "horizontal": horiz <= _horizontality_tol(cfg, dom)}
    sio.write_scalar_csv(out / "energy_density.csv", dom, dens)
    F = None
    if cfg.get("variation"):
        F = sio.read_map_csv(cfg["variation"], dom, st.dim)
    elif entry is not None:
        F = entry.F
    if F is not None:
        res["gradient_check"] = energy_gradient_check(dom, st, f, F, cfg.get("s_list", (1e-2, 5e-3))).summary()
    return res


def _form_for_classify(cfg):
    spec = str(cfg.get("form", "injective"))
    if spec in ("zero", "injective", "loop"):
        dom = _domain(cfg) if cfg.get("domain") else GridDomain.torus((int(cfg.get("n") or 16),) * 2)
        st = _structure(cfg)
        if heisenberg_index(st) != 1:
            raise InputError(f"form {spec!r} is an h_1-valued form; use algebra heisenberg:1")
        return dom, st, corpus.regularity_form(spec, dom)
    if spec.startswith("map:"):
        cfg = dict(cfg, map=spec[4:])
        dom, st, f, _ = _map(cfg)
        return dom, st, _restricted_alpha(dom, st, f)[1]
    dom, st = _domain(cfg), _structure(cfg)
    return dom, st, sio.read_form_csv(spec, dom, dom.rank_k, st.dim)


def cmd_classify(cfg, out: Path) -> dict:
    dom, st, aD = _form_for_classify(cfg)
    reg = classify_regularity(dom, st, aD, tol_rel=float(cfg["tol_rel"]), tail=int(cfg["tail"]),
                              method=cfg["method"])
    res = reg.summary()
    res["grid"] = list(dom.shape)
    if reg.certificate is not None:
        res["abnormal_certificate"] = reg.certificate.summary()
        sio.write_form_csv(out / "abnormal_eta.csv", dom, reg.certificate.field)
    with open(out / "sigma_tail.csv", "w") as fh:
        fh.write("rank_from_bottom,sigma\n")
        for j, s in enumerate(reg.tail[::-1]):
            fh.write(f"{j},{float(s)!r}\n")
    return res


def _certificate_summary(cert, reg, dom, cfg):
    out = cert.summary()
    out.update({"sigma_min": reg.sigma_min if reg else None, "verdict": reg.verdict if reg else None,
                "thresholds": {"tol_rel": float(cfg["tol_rel"])}, "grid": list(dom.shape)})
    return out


def cmd_certify(cfg, out: Path) -> dict:
    dom, st, f, _ = _map(cfg)
    _, aD = _restricted_alpha(dom, st, f)
    res = {"horizontality_residual":
           float(np.max(np.abs(horizontality_residual(dom, st, aD)[dom.interior_mask]), initial=0.0))}
    reg = None
    if cfg.get("classify", True) and st.corank > 0:
        reg = classify_regularity(dom, st, aD, tol_rel=float(cfg["tol_rel"]), tail=int(cfg["tail"]),
                                  method=cfg["method"])
        res["regularity"] = reg.summary()
    normal = normal_certificate(dom, st, aD)
    sio.write_form_csv(out / "normal_lambda.csv", dom, normal.field)
    res["normal"] = _certificate_summary(normal, reg, dom, cfg)
    if st.corank > 0:
        ab = reg.certificate if reg is not None and reg.certificate is not None else \
            abnormal_certificate(dom, st, aD, method=cfg["method"])
        sio.write_form_csv(out / "abnormal_eta.csv", dom, ab.field)
        res["abnormal"] = _certificate_summary(ab, reg, dom, cfg)
    return res


def cmd_geodesic(cfg, out: Path) -> dict:
    st = _structure(cfg)
    d = st.dim
    if cfg.get("lam0") is None:
        raise InputError("config: geodesic needs lam0")
    lam0 = np.asarray(cfg["lam0"], dtype=float)
    g0 = np.asarray(cfg.get("g0") or np.zeros(d), dtype=float)
    if lam0.shape != (d,) or g0.shape != (d,):
        raise InputError(f"config: lam0 and g0 need {d} entries")
    traj = shoot_normal(st, g0, lam0, float(cfg["T"]), int(cfg["steps"]), backend=cfg.get("backend"))
    sio.write_trajectory_csv(out / "trajectory.csv", traj, st.algebra.labels)
    res = {"endpoint": traj.g[-1], "lam_end": traj.lam[-1]}
    res.update(traj.report)
    n = heisenberg_index(st)
    if n is not None:
        zeta, w, _, _ = heisenberg_state_to_complex(n, traj.g[-1], traj.lam[-1])
        res["abs_zeta_end"] = float(np.linalg.norm(zeta))
        res["abs_w_end"] = float(abs(w))
        res["closed_form_gap"] = closed_form_gap(n, traj)
    return res


def cmd_heisenberg_residual(cfg, out: Path) -> dict:
    dom, st, f, _ = _map(cfg)
    if heisenberg_index(st) is None:
        raise InputError("heisenberg-residual needs a Heisenberg target (algebra heisenberg:N)")
    hmap = HeisenbergMap.from_map_field(f)
    _, aD = _restricted_alpha(dom, st, f)
    cert = normal_certificate(dom, st, aD)
    Y, report = recover_Y(dom, st, cert, hmap)
    zero = harmonic_residual(dom, hmap, None).norms()
    sio.write_heisenberg_csv(out / "map.csv", dom, hmap)
    sio.write_form_csv(out / "Y.csv", dom, Y[..., None])
    sio.write_scalar_csv(out / "theta_pullback_norm.csv", dom,
                         np.linalg.norm(restrict(dom, theta_pullback(dom, hmap)), axis=-1))
    tol = float(cfg.get("residual_tol", 1e-8))
    return {"certificate": cert.summary(), "recovered_Y": report, "Y_zero": zero,
            "normal_harmonic": bool(cert.residual_norm <= tol)}


def cmd_bracket_check(cfg, out: Path) -> dict:
    st = _structure(cfg)
    q = int(cfg.get("q", st.rank))
    return strong_bracket_check(st, q, int(cfg["trials"]), int(cfg["seed"])).summary()


COMMANDS = {
    "algebra-check": (cmd_algebra_check, "Jacobi, antisymmetry and group-law checks"),
    "mc-residual": (cmd_mc_residual, "Maurer-Cartan residual grid-refinement study"),
    "energy": (cmd_energy, "energy of a map and optional gradient check"),
    "classify": (cmd_classify, "regular/singular verdict with the singular-value tail"),
    "certify": (cmd_certify, "normal and abnormal certificates"),
    "geodesic": (cmd_geodesic, "normal geodesic shooting with closed-form comparison"),
    "heisenberg-residual": (cmd_heisenberg_residual, "complex harmonic-map residual report"),
    "bracket-check": (cmd_bracket_check, "randomized strong bracket generation test"),
}


# plumbing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srharmonic", description="Sub-Riemannian harmonic map toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="JSON run config; flags override its fields")
        s.add_argument("--output-dir")
        s.add_argument("--algebra", help="preset (heisenberg:N, abelian:D, so3) or algebra JSON path")
        s.add_argument("--domain", help="domain JSON path")
        s.add_argument("--map", help="map-field CSV path or corpus:NAME")
        s.add_argument("--n", type=int, help="grid nodes per axis for corpus maps")
        s.add_argument("--seed", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--tol-rel", type=float, dest="tol_rel")
        s.add_argument("--tail", type=int)
        s.add_argument("--method", choices=["auto", "dense", "iterative"])
        if name == "mc-residual":
            s.add_argument("--grids", type=int, nargs="+")
        if name == "energy":
            s.add_argument("--variation", help="variation field CSV")
        if name == "classify":
            s.add_argument("--form", help="zero, injective, loop, map:<source> or a form CSV")
        if name == "geodesic":
            s.add_argument("--lam0", type=float, nargs="+")
            s.add_argument("--g0", type=float, nargs="+")
            s.add_argument("--T", type=float)
            s.add_argument("--steps", type=int)
            s.add_argument("--backend", choices=["compiled", "python"])
        if name == "bracket-check":
            s.add_argument("--q", type=int)
    return p


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(sio.load_json(args.config))
    for key, val in vars(args).items():
        if key in ("config", "command", "output_dir") or val is None:
            continue
        cfg[key] = val
    for key in ("tol_rel", "T"):
        if float(cfg[key]) <= 0:
            raise InputError(f"config: {key} must be positive")
    for key in ("trials", "steps", "tail"):
        if int(cfg[key]) <= 0:
            raise InputError(f"config: {key} must be positive")
    return cfg


def output_dir(args, cfg) -> Path:
    path = args.output_dir or os.environ.get(OUTPUT_ENV) or cfg.get("output_dir") or f"runs/{args.command}"
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # the timestamp is the only field allowed to differ between identical runs
    summary = {"command": args.command, "versions": _versions(),
               "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    out = None
    try:
        cfg = resolve_config(args)
        out = output_dir(args, cfg)
        summary["inputs"] = {k: v for k, v in cfg.items() if k != "output_dir"}
        summary["seed"] = cfg["seed"]
        summary["results"] = COMMANDS[args.command][0](cfg, out)
        summary["status"] = "ok"
        code = EXIT_OK
    except InputError as exc:
        summary.update(status="input_error", error=str(exc))
        print(f"srharmonic: input error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    except NumericalError as exc:
        summary.update(status="numerical_failure", error=str(exc), diagnostic=exc.report)
        print(f"srharmonic: numerical failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERICAL
    except SRHarmonicError as exc:
        summary.update(status="error", error=str(exc))
        print(f"srharmonic: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    if out is None:
        try:
            out = output_dir(args, {})
        except OSError:
            return code
    sio.write_json(out / "summary.json", _jsonable(summary))
    if code == EXIT_OK:
        print(json.dumps(_jsonable(summary["results"]), sort_keys=True, indent=2))
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
