"""Command-line driver: ``elastocavity {kernels,solve,derivative-check,reconstruct,stability}``.

Every command reads one JSON configuration, writes its artifacts plus a
``manifest.json`` holding the resolved configuration, and exits with

* 0 on success,
* 2 for configuration errors,
* 3 for solver failures,
* 4 when an iteration stagnates or a pass criterion is not met.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import spectral
from .errors import (ConfigurationError, ElastoCavityError, GeometryError, NumericalDegeneracyError,
                     SolverError)
from .forward import (flux_balance, self_convergence, solve_forward, write_trace_csv, write_vtk)
from .geometry import CavityShape, extend_perturbation, generate_mesh, refine
from .inverse import (TraceSampler, derivative_check, local_stability_experiment, ratio_spread,
                      reconstruct, synthetic_data, write_iterate_log, write_shape_json,
                      write_stability_csv)
from .medium import make_incidence, make_medium

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_STAGNATION = 0, 2, 3, 4

DEFAULTS = {
    "medium": {"lambda": 1.0, "mu": 1.0, "omega": 1.0},
    "incidence": {"theta": math.pi / 6, "c_p": None, "c_s": 0.0},
    "bc": "dirichlet",
    "shape": {"kind": "semicircle", "r0": 1.0, "a": [], "b": [], "aspect": 1.0},
    "mesh": {"target_h": 0.3, "rings": None, "junction_grading": 2.5, "refinements": 0},
    "quadrature": {"xi_factor": 20.0, "order": 16, "levels": 6, "max_width": 1.0, "delta_reg": 0.0},
    "kernels": {"n_samples": 400, "xi_max_factor": 3.0},
    "derivative": {"perturbations": [{"kind": "sin", "m": 1, "amplitude": 1.0}],
                   "ts": [0.02, 0.01, 0.005], "route": "material"},
    "stability": {"k": [0.02, 0.01, 0.005], "perturbation": {"kind": "sin", "m": 1, "amplitude": 1.0},
                  "target_h": 0.1},
    "reconstruction": {"target": {"a": [0.05, -0.03], "b": [0.02]},
                       "init": {"a": [0.0, 0.0], "b": [0.0]},
                       "layout": [["a", 1], ["a", 2], ["b", 1]],
                       "max_iter": 50, "target_h": 0.04, "data_target_h": 0.02,
                       "method": "steepest", "threshold": 0.05, "sample_half_width": 1.5,
                       "n_samples": 401},
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key not in base:
            raise ConfigurationError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and key not in ("target", "init"):
            if not isinstance(val, dict):
                raise ConfigurationError(f"{path + key!r} must be an object")
            out[key] = _merge(base[key], val, f"{path}{key}.")
        else:
            out[key] = val
    return out


def _positive(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a number") from None
    if not (v > 0 and math.isfinite(v)):
        raise ConfigurationError(f"{name} must be positive, got {value!r}")
    return v


def resolve_config(raw: dict) -> dict:
    """Fill defaults and validate; raises :class:`ConfigurationError`."""
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration must be a JSON object")
    raw = {k: v for k, v in raw.items() if k != "output"}
    cfg = _merge(DEFAULTS, raw)
    for key in ("lambda", "mu", "omega"):
        _positive(f"medium.{key}", cfg["medium"][key])
    theta = cfg["incidence"]["theta"]
    if not isinstance(theta, (int, float)) or not (-math.pi / 2 < theta < math.pi / 2):
        raise ConfigurationError("incidence.theta must lie in (-pi/2, pi/2)")
    if cfg["bc"] not in ("dirichlet", "neumann"):
        raise ConfigurationError("bc must be 'dirichlet' or 'neumann'")
    if cfg["shape"]["kind"] not in ("semicircle", "star"):
        raise ConfigurationError("shape.kind must be 'semicircle' or 'star'")
    _positive("shape.r0", cfg["shape"]["r0"])
    _positive("shape.aspect", cfg["shape"]["aspect"])
    _positive("mesh.target_h", cfg["mesh"]["target_h"])
    if float(cfg["mesh"]["junction_grading"]) < 1:
        raise ConfigurationError("mesh.junction_grading must be >= 1")
    if cfg["mesh"]["rings"] is not None and int(cfg["mesh"]["rings"]) < 1:
        raise ConfigurationError("mesh.rings must be a positive integer")
    if int(cfg["mesh"]["refinements"]) < 0:
        raise ConfigurationError("mesh.refinements must be >= 0")
    _positive("quadrature.xi_factor", cfg["quadrature"]["xi_factor"])
    _positive("quadrature.max_width", cfg["quadrature"]["max_width"])
    for p in cfg["derivative"]["perturbations"]:
        _check_perturbation(p)
    _check_perturbation(cfg["stability"]["perturbation"])
    if any(float(t) <= 0 for t in cfg["derivative"]["ts"]):
        raise ConfigurationError("derivative.ts must be positive")
    return cfg


def _check_perturbation(p: dict) -> None:
    if not isinstance(p, dict) or p.get("kind") not in ("sin", "cos"):
        raise ConfigurationError("perturbation kind must be 'sin' or 'cos'")
    if int(p.get("m", 1)) < 0:
        raise ConfigurationError("perturbation mode m must be >= 0")
    amp = float(p.get("amplitude", 1.0))
    if amp == 0.0 or (p["kind"] == "sin" and int(p.get("m", 1)) == 0):
        raise ConfigurationError("perturbation must be nonzero")


def _profile(p: dict):
    m, amp = int(p.get("m", 1)), float(p.get("amplitude", 1.0))
    fn = np.sin if p["kind"] == "sin" else np.cos
    return lambda phi: amp * fn(m * np.asarray(phi))


def _build(cfg: dict):
    med = make_medium(cfg["medium"]["lambda"], cfg["medium"]["mu"], cfg["medium"]["omega"])
    inc = cfg["incidence"]
    inc_cfg = make_incidence(med, inc["theta"], inc["c_p"], inc["c_s"])
    sh = cfg["shape"]
    if sh["kind"] == "semicircle":
        shape = CavityShape.semicircle(sh["r0"], sh["aspect"])
    else:
        shape = CavityShape.star(sh["r0"], sh["a"], sh["b"], sh["aspect"])
    q = cfg["quadrature"]
    quad = spectral.QuadratureConfig(q["xi_factor"], int(q["order"]), int(q["levels"]),
                                     q["max_width"], q["delta_reg"])
    return med, inc_cfg, shape, quad


def _base_mesh(cfg, shape):
    mc = cfg["mesh"]
    return generate_mesh(shape, mc["target_h"], junction_grading=mc["junction_grading"], rings=mc["rings"])


def _mesh(cfg, shape):
    mesh = _base_mesh(cfg, shape)
    for _ in range(int(cfg["mesh"]["refinements"])):
        mesh = refine(mesh)
    return mesh


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------- commands

def cmd_kernels(cfg: dict, out: Path) -> int:
    med, _, _, _ = _build(cfg)
    kc = cfg["kernels"]
    ks = med.k_s
    xis = np.linspace(-kc["xi_max_factor"] * ks, kc["xi_max_factor"] * ks, int(kc["n_samples"]))
    spectral.write_kernel_csv(out / "kernels.csv", med, xis)
    xi_r = spectral.rayleigh_root(med)
    failures = 0
    with open(out / "sign_report.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["xi", "regime", "negReM_margin", "imMinv_class", "a1", "det_imMinv",
                     "d1", "d2", "d3", "pass", "note"])
        for x in [*xis, xi_r]:
            note = "rayleigh_root" if x == xi_r else ""
            try:
                rep = spectral.sign_report(med, float(x))
            except NumericalDegeneracyError as exc:
                wr.writerow([repr(float(x)), "", "", "", "", "", "", "", "", "skip", str(exc)])
                continue
            ok = rep.passes(med)
            failures += not ok
            nums = [rep.re_M_negdef_margin, rep.a1, rep.det_im_Minv, rep.d1, rep.d2, rep.d3]
            nums = [repr(float(v)) for v in nums]
            wr.writerow([repr(float(x)), rep.regime, nums[0], rep.im_Minv_classification, *nums[1:],
                         "pass" if ok else "FAIL", note])
    logger.info("sign report: %d failures; rayleigh root %.6g", failures, xi_r)
    return EXIT_OK if failures == 0 else EXIT_STAGNATION


def cmd_solve(cfg: dict, out: Path) -> int:
    med, inc, shape, quad = _build(cfg)
    diag: dict = {"bc": cfg["bc"]}
    try:
        mesh = _mesh(cfg, shape)
        sol = solve_forward(med, inc, mesh, cfg["bc"], quad)
        diag.update(sol.diagnostics)
        diag["flux_mismatch"] = flux_balance(sol)
        write_vtk(out / "field.vtk", mesh, sol.field.values)
        x1, tr = sol.gamma_trace()
        write_trace_csv(out / "trace.csv", x1, tr)
        if int(cfg["mesh"]["refinements"]) >= 2:
            base = _base_mesh(cfg, shape)
            errs, ratios, hs = self_convergence(med, inc, base, cfg["bc"],
                                                int(cfg["mesh"]["refinements"]), quad)
            diag.update(convergence_errors=errs, convergence_ratios=ratios, convergence_h=hs)
    except (SolverError, ArithmeticError) as exc:
        diag["error"] = str(exc)
        _write_json(out / "diagnostics.json", diag)
        logger.error("solve failed: %s", exc)
        return EXIT_SOLVER
    _write_json(out / "diagnostics.json", diag)
    return EXIT_OK


def cmd_derivative_check(cfg: dict, out: Path, jobs: int = 1) -> int:
    med, inc, shape, quad = _build(cfg)
    dc = cfg["derivative"]
    lo, hi = (1.5, 2.5) if cfg["bc"] == "dirichlet" else (1.4, 2.6)
    mesh = _mesh(cfg, shape)
    base = solve_forward(med, inc, mesh, cfg["bc"], quad)
    ok = True
    with open(out / "derivative_check.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["perturbation", "t", "fd_error", "ratio"])
        for p in dc["perturbations"]:
            pert = extend_perturbation(mesh, _profile(p), 1.0)
            chk = derivative_check(base, pert, dc["ts"], dc["route"], jobs=jobs)
            label = f"{p['kind']}{int(p.get('m', 1))}"
            for i, (t, e) in enumerate(zip(chk.ts, chk.errors)):
                r = chk.ratios[i - 1] if i > 0 else ""
                wr.writerow([label, repr(float(t)), repr(e), repr(r) if r != "" else ""])
            ok &= all(lo <= r <= hi for r in chk.ratios)
    return EXIT_OK if ok else EXIT_STAGNATION


def cmd_reconstruct(cfg: dict, out: Path) -> int:
    if cfg["bc"] != "dirichlet":
        raise ConfigurationError("reconstruction supports the Dirichlet problem only")
    med, inc, shape, quad = _build(cfg)
    rc = cfg["reconstruction"]
    r0, aspect = cfg["shape"]["r0"], cfg["shape"]["aspect"]
    if aspect != 1.0:
        raise ConfigurationError("reconstruction assumes aspect = 1")
    layout = [(str(k), int(m)) for k, m in rc["layout"]]
    target = CavityShape.star(r0, rc["target"].get("a", []), rc["target"].get("b", []))
    init = CavityShape.star(r0, rc["init"].get("a", []), rc["init"].get("b", []))
    truth = np.array([_coef(target, k, m) for k, m in layout])
    sampler = TraceSampler(rc["sample_half_width"] * r0, int(rc["n_samples"]))
    data = synthetic_data(med, inc, target, rc["data_target_h"], sampler, quad)
    state = reconstruct(med, inc, data, init, int(rc["max_iter"]), layout=layout,
                        target_h=rc["target_h"], sampler=sampler, method=rc["method"], quad=quad)
    names = [f"{k}{m}" for k, m in layout]
    write_iterate_log(out / "iterates.csv", state, names)
    a = [0.0] * max([m for k, m in layout if k == "a"] + [0])
    b = [0.0] * max([m for k, m in layout if k == "b"] + [0])
    for (k, m), v in zip(layout, state.params):
        (a if k == "a" else b)[m - 1] = float(v)
    final = CavityShape.star(r0, a, b)
    write_shape_json(out / "shape.json", final, state)
    scale = np.linalg.norm(truth)
    err = float(np.linalg.norm(state.params - truth) / scale) if scale > 0 else \
        float(np.linalg.norm(state.params - truth))
    logger.info("reconstruction %s after %d iterations, parameter error %.3g",
                state.status, state.iterations, err)
    if state.status == "stagnated":
        return EXIT_STAGNATION
    return EXIT_OK if err < rc["threshold"] else EXIT_STAGNATION


def _coef(shape: CavityShape, kind: str, m: int) -> float:
    arr = shape.a if kind == "a" else shape.b
    return float(arr[m - 1]) if m <= len(arr) else 0.0


def cmd_stability(cfg: dict, out: Path) -> int:
    if cfg["bc"] != "dirichlet":
        raise ConfigurationError("the stability experiment supports the Dirichlet problem only")
    med, inc, shape, _ = _build(cfg)
    sc = cfg["stability"]
    rows, skipped = local_stability_experiment(med, inc, shape, _profile(sc["perturbation"]),
                                               sc["k"], sc["target_h"])
    write_stability_csv(out / "stability.csv", rows)
    for k, why in skipped:
        logger.info("k=%g skipped (%s)", k, why)
    if not rows:
        return EXIT_STAGNATION
    return EXIT_OK if ratio_spread(rows) < 3 else EXIT_STAGNATION


COMMANDS = {"kernels": cmd_kernels, "solve": cmd_solve, "derivative-check": cmd_derivative_check,
            "reconstruct": cmd_reconstruct, "stability": cmd_stability}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="elastocavity", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="JSON configuration file (defaults if omitted)")
    ap.add_argument("--out", type=Path, default=None, help="output directory")
    ap.add_argument("--jobs", type=int, default=1, help="maximum worker count")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = {}
        if args.config is not None:
            with open(args.config) as fh:
                raw = json.load(fh)
        out = args.out or Path(raw.get("output", "elastocavity_out") if isinstance(raw, dict) else ".")
        cfg = resolve_config(raw)
        if args.jobs < 1:
            raise ConfigurationError("--jobs must be >= 1")
    except (OSError, json.JSONDecodeError, ConfigurationError, ValueError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "manifest.json", {"command": args.command, "config": cfg, "jobs": args.jobs})
    try:
        if args.command == "derivative-check":
            return cmd_derivative_check(cfg, out, args.jobs)
        return COMMANDS[args.command](cfg, out)
    except (ConfigurationError, GeometryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ElastoCavityError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
