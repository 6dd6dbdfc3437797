"""Command-line front end.

Exit codes: 0 pass, 1 numeric failure, 2 certificate failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from . import monodromy, recipes, surface
from .recipes import RecipeError, SurfaceRecipe

EXIT_OK, EXIT_NUMERIC, EXIT_CERTIFICATE, EXIT_IO = 0, 1, 2, 3

DEFAULT_TOLS = {
    "kill": 1e-10,      # |h| for the period-killing solve
    "sigma": 1e-7,      # edge-monodromy identities
    "rigidity": 1e-6,   # Im p pinned
    "words": 1e-7,      # reflection words equal +-id
    "loop": 1e-6,       # f-loop closure in ball coordinates
    "gauss": 1e-6,      # relative Gauss-relation residual
    "edges": 1e-6,      # shared-edge coincidence between copies
}


class StageError(Exception):
    def __init__(self, stage: str, message: str, code: int):
        super().__init__(f"[{stage}] {message}")
        self.stage, self.code = stage, code


@dataclass
class RunConfig:
    recipe: str = "dihedral"
    recipe_file: Optional[str] = None
    n: int = 3
    m: int = 1
    row: Optional[str] = None
    t: Optional[float] = None
    t_sweep: Optional[str] = None
    mesh: int = 16
    depth: int = 24
    out: str = "."
    format: str = "obj"
    json: bool = False
    tol: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))

    def validate(self):
        if self.mesh < 8:
            raise StageError("config", "mesh resolution must be >= 8", EXIT_NUMERIC)
        if self.depth < 0:
            raise StageError("config", "depth must be >= 0", EXIT_NUMERIC)
        for t in self.t_values():
            if not math.isfinite(t):
                raise StageError("config", "t values must be finite", EXIT_NUMERIC)

    def t_values(self) -> List[float]:
        if self.t_sweep:
            try:
                a, b, steps = self.t_sweep.split(":")
                ts = np.linspace(float(a), float(b), int(steps))
            except ValueError:
                raise StageError("config", f"bad --t-sweep {self.t_sweep!r} (want a:b:steps)", EXIT_NUMERIC)
            return sorted(float(t) for t in ts)
        return [self.t] if self.t is not None else []


def _parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        key, _, val = item.partition("=")
        if key not in DEFAULT_TOLS or not val:
            raise StageError("config", f"bad --tol {item!r}; keys: {', '.join(DEFAULT_TOLS)}", EXIT_NUMERIC)
        out[key] = float(val)
    return out


def make_config(args) -> RunConfig:
    """Defaults, then the JSON config file, then command-line flags."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise StageError("config", str(exc), EXIT_IO)
        tol = data.pop("tol", {})
        for k, v in data.items():
            k = k.replace("-", "_")
            if not hasattr(cfg, k):
                raise StageError("config", f"unknown config key {k!r}", EXIT_NUMERIC)
            setattr(cfg, k, v)
        cfg.tol.update(tol)
    for k in ("recipe", "recipe_file", "n", "m", "row", "t", "t_sweep", "mesh", "depth", "out", "format"):
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, v)
    if getattr(args, "json", False):
        cfg.json = True
    cfg.tol.update(_parse_tol(getattr(args, "tol", None)))
    cfg.validate()
    return cfg


def load_recipe(cfg: RunConfig) -> SurfaceRecipe:
    if cfg.recipe_file:
        try:
            with open(cfg.recipe_file) as fh:
                text = fh.read()
        except OSError as exc:
            raise StageError("recipe", str(exc), EXIT_IO)
        try:
            return SurfaceRecipe.from_json(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise StageError("recipe", f"unreadable recipe file: {exc}", EXIT_IO)
    try:
        return recipes.recipe_by_name(cfg.recipe, n=cfg.n, m=cfg.m)
    except RecipeError as exc:
        raise StageError("recipe", str(exc), EXIT_NUMERIC)


# ---------------------------------------------------------------------------
# pipeline stages


def stage_hypotheses(r: SurfaceRecipe) -> dict:
    try:
        rep = recipes.check_theorem_hypotheses(r)
    except Exception as exc:
        raise StageError("hypotheses", str(exc), EXIT_CERTIFICATE)
    if not rep["ok"]:
        failed = [k for k in ("angles", "pole_order", "branching", "symmetry") if not rep.get(k, {}).get("ok")]
        raise StageError("hypotheses", f"failed: {', '.join(failed) or rep.get('error', '?')}", EXIT_CERTIFICATE)
    return rep


def stage_kill(r: SurfaceRecipe, t: float, cfg: RunConfig) -> monodromy.KillResult:
    if t == 0.0:
        raise StageError("kill", "degenerate surface at t=0", EXIT_NUMERIC)
    try:
        return monodromy.kill_period(r, t, tol=cfg.tol["kill"])
    except Exception as exc:
        raise StageError("kill", str(exc), EXIT_NUMERIC)


def build_one(r: SurfaceRecipe, t: float, cfg: RunConfig, write: bool = True) -> dict:
    k = stage_kill(r, t, cfg)
    try:
        mesh = surface.build_mesh(r, cfg.mesh)
        patch = surface.build_fundamental_patch(r, k, mesh)
    except Exception as exc:
        raise StageError("patch", str(exc), EXIT_NUMERIC)
    try:
        exp = surface.expand_by_reflections(patch, k, cfg.depth)
    except Exception as exc:
        raise StageError("expand", str(exc), EXIT_NUMERIC)
    gauss = surface.gauss_relation_check(patch, r, cfg.tol["gauss"])
    report = {
        "recipe": r.name, "t": t, "B_t": k.B_t, "u_t": k.u_t, "kill": k.to_dict(),
        "copies": len(exp.copies), "expansion_exhausted": exp.exhausted,
        "shared_edge_residual": exp.shared_edge_residual,
        "total_curvature": surface.total_curvature(r, k),
        "gauss": gauss,
    }
    report["ok"] = bool(gauss["ok"] and exp.shared_edge_residual < cfg.tol["edges"])
    if write:
        stem = os.path.join(cfg.out, f"{_slug(r.name)}_t{t:+.4g}")
        try:
            os.makedirs(cfg.out, exist_ok=True)
            fmt = cfg.format if cfg.format != "json" else "obj"
            ext = "ply" if fmt.startswith("ply") else fmt
            report["mesh_file"] = surface.export_mesh(exp.copies, fmt, f"{stem}.{ext}")
            report["report_file"] = f"{stem}.json"
            surface.export_mesh(exp.copies, "json", report["report_file"], report=report)
        except OSError as exc:
            raise StageError("export", str(exc), EXIT_IO)
    return report


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name).strip("_")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CMC1_FORGE_THREADS", "1")))
    except ValueError:
        return 1


def _emit(obj, as_json: bool, text: str):
    if as_json:
        print(json.dumps(surface._jsonable(obj), indent=2, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands


def cmd_list(cfg: RunConfig) -> int:
    rows = recipes.table_rows(cfg.m, cfg.n)
    if cfg.row:
        rows = [d for d in rows if d.row == cfg.row]
    data = [{"row": d.row, "m": d.m, "ends": d.n_ends, "umbilics": d.n_umbilics, "ord_q_Q0": d.ord_q_Q0,
             "ord_p_Qm": d.ord_p_Qm, "ord_q_Qm": d.ord_q_Qm, "A": d.A, "B0": d.B0,
             "copies_total": d.copies_total, "chart": d.recipe is not None} for d in rows]
    if not cfg.row or cfg.row == "torus":
        tr = recipes.torus_recipe()
        data.append({"row": "torus", "m": None, "ends": len(tr.punctures), "umbilics": len(tr.umbilics),
                     "ord_q_Q0": None, "ord_p_Qm": tr.end_order, "ord_q_Qm": tr.umbilic_order, "A": tr.A,
                     "B0": tr.B0, "copies_total": tr.copies_total, "chart": True})
    lines = [f"{'row':<20}{'#p':>4}{'#q':>4}{'ord_p':>7}{'ord_q':>7}{'A/pi':>9}{'B0/pi':>8}  chart"]
    for d in data:
        lines.append(f"{d['row']:<20}{d['ends']:>4}{d['umbilics']:>4}{d['ord_p_Qm']:>7}{d['ord_q_Qm']:>7}"
                     f"{d['A'] / math.pi:>9.4f}{d['B0'] / math.pi:>8.4f}  {'yes' if d['chart'] else 'no'}")
    _emit(data, cfg.json, "\n".join(lines))
    return EXIT_OK


def cmd_kill(cfg: RunConfig) -> int:
    r = load_recipe(cfg)
    ts = cfg.t_values() or [0.01]
    out = []
    for t in ts:
        k = stage_kill(r, t, cfg) if t != 0.0 else monodromy.kill_period(r, 0.0)
        out.append(k.to_dict())
    _emit(out, cfg.json, "\n".join(f"t={d['t']:+.6g}  B_t={d['B_t']:.12f}  u_t={d['u_t']:.12f}  "
                                   f"iterations={len(d['iterations'])}" for d in out))
    return EXIT_OK


def cmd_irreducibility(cfg: RunConfig) -> int:
    r = load_recipe(cfg)
    cert = monodromy.irreducibility_certificate(r)
    rep = {k: v for k, v in cert.items() if k != "value"}
    rep["value"] = cert["value"]
    _emit(rep, cfg.json, f"{r.name}: nonzero_integral={cert['nonzero_integral']} "
                         f"angle_condition={cert['angle_condition']} |integral|={cert['norm']:.6g}")
    return EXIT_OK if cert["certified"] else EXIT_CERTIFICATE


def cmd_build(cfg: RunConfig) -> int:
    r = load_recipe(cfg)
    ts = cfg.t_values()
    if not ts:
        raise StageError("config", "build needs --t or --t-sweep", EXIT_NUMERIC)
    stage_hypotheses(r)
    if any(t == 0.0 for t in ts):
        raise StageError("kill", "degenerate surface at t=0", EXIT_NUMERIC)
    workers = min(_threads(), len(ts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            reports = list(ex.map(lambda t: build_one(r, t, cfg), ts))
    else:
        reports = [build_one(r, t, cfg) for t in ts]
    if len(ts) > 1:
        summary = [{"t": rep["t"], "B_t": rep["B_t"], "total_curvature": rep["total_curvature"]} for rep in reports]
        path = os.path.join(cfg.out, f"{_slug(r.name)}_sweep.json")
        try:
            with open(path, "w") as fh:
                json.dump(surface._jsonable(summary), fh, indent=2, sort_keys=True)
        except OSError as exc:
            raise StageError("export", str(exc), EXIT_IO)
    brief = "\n".join(f"t={rep['t']:+.6g}  B_t={rep['B_t']:.10f}  u_t={rep['u_t']:.10f}  copies={rep['copies']}  "
                      f"total_curvature={rep['total_curvature']:.8f}  -> {rep.get('mesh_file')}" for rep in reports)
    _emit(reports, cfg.json, brief)
    return EXIT_OK if all(rep["ok"] for rep in reports) else EXIT_NUMERIC


def cmd_export(cfg: RunConfig) -> int:
    return cmd_build(cfg)


def cmd_check(cfg: RunConfig) -> int:
    """Hypotheses, edge identities, rigidity, single-valuedness, irreducibility, Gauss relation, curvature."""
    r = load_recipe(cfg)
    ts = cfg.t_values() or [-0.02, -0.01, 0.01, 0.02]
    tol = cfg.tol
    suites = {}
    code = EXIT_OK
    try:
        suites["hypotheses"] = stage_hypotheses(r)
    except StageError as exc:
        suites["hypotheses"] = {"ok": False, "error": str(exc)}
        _emit(suites, cfg.json, f"hypotheses: FAIL ({exc})")
        return EXIT_CERTIFICATE
    cert = monodromy.irreducibility_certificate(r)
    suites["irreducibility"] = {"ok": cert["certified"], "norm": cert["norm"],
                                "angle_condition": cert["angle_condition"]}
    if not cert["certified"]:
        code = EXIT_CERTIFICATE
    per_t = []
    for t in ts:
        entry = {"t": t}
        try:
            em = monodromy.compute_edge_monodromies(r, None, t, r.B0)
            res = em.residuals
            entry["sigma"] = {"ok": max(res["sigma1_id"], res["sigma2_rho2"], res["sigma3_reality"]) < tol["sigma"],
                              **{k: res[k] for k in ("sigma1_id", "sigma2_rho2", "sigma3_reality")}}
            entry["rigidity"] = {"ok": res["im_p_rigidity"] < tol["rigidity"], "residual": res["im_p_rigidity"]}
            k = stage_kill(r, t, cfg)
            sv = monodromy.verify_single_valuedness(r, k, tol["words"], tol["loop"])
            entry["single_valued"] = {"ok": sv["ok"], "words": sv["words"], "loops": sv["loops"]}
            patch = surface.build_fundamental_patch(r, k, surface.build_mesh(r, cfg.mesh))
            entry["gauss"] = surface.gauss_relation_check(patch, r, tol["gauss"])
            cc = surface.curvature_cross_check(r, k)
            entry["curvature"] = {"ok": cc["relative_difference"] < 1e-3, **cc}
            entry["B_t"] = k.B_t
        except StageError as exc:
            entry["error"] = str(exc)
        except Exception as exc:  # numeric breakdown is a reportable failure
            entry["error"] = f"[numeric] {exc}"
        entry["ok"] = "error" not in entry and all(
            v["ok"] for key, v in entry.items() if isinstance(v, dict) and "ok" in v)
        if not entry["ok"] and code == EXIT_OK:
            code = EXIT_NUMERIC
        per_t.append(entry)
    suites["deformation"] = per_t
    lines = [f"hypotheses: PASS", f"irreducibility: {'PASS' if cert['certified'] else 'FAIL'}"]
    for e in per_t:
        parts = [f"{k}={'PASS' if v['ok'] else 'FAIL'}" for k, v in e.items() if isinstance(v, dict) and "ok" in v]
        if "error" in e:
            parts.append(f"error={e['error']}")
        lines.append(f"t={e['t']:+.4g}: " + "  ".join(parts))
    _emit(suites, cfg.json, "\n".join(lines))
    return code


COMMANDS = {"list": cmd_list, "build": cmd_build, "check": cmd_check, "kill": cmd_kill,
            "irreducibility": cmd_irreducibility, "export": cmd_export}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmc1-forge", description="Build and check CMC-1 surfaces in hyperbolic space.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name, help=(COMMANDS[name].__doc__ or "").strip().splitlines()[0] if COMMANDS[name].__doc__ else None)
        s.add_argument("--config", help="JSON config file (flags override it)")
        s.add_argument("--recipe", help="dihedral | tetrahedral | torus")
        s.add_argument("--recipe-file", dest="recipe_file", help="recipe JSON file")
        s.add_argument("--n", type=int)
        s.add_argument("--m", type=int)
        s.add_argument("--row")
        s.add_argument("--t", type=float)
        s.add_argument("--t-sweep", dest="t_sweep", metavar="A:B:STEPS")
        s.add_argument("--mesh", type=int)
        s.add_argument("--depth", type=int)
        s.add_argument("--out")
        s.add_argument("--format", choices=["obj", "ply", "ply-binary", "json"])
        s.add_argument("--json", action="store_true")
        s.add_argument("--tol", action="append", metavar="KEY=VAL")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](cfg)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: [io] {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
