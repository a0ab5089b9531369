"""Batch pipeline: ``reducing-atlas analyze|verify|report <config.json> [--out DIR]``.

Exit codes: 0 success, 2 analysis failure (any stage crash), 3 verification
failure (a residual above its tolerance), 4 IO or configuration error.

Stage outputs are JSON files in the output directory: ``analyze`` writes
``analysis.json``; ``verify`` rewrites it and adds ``verification.json``;
``report`` reads them and writes ``report.json``, ``atlas.json``,
``residuals.csv`` and ``paths.csv``.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import serialize
from .bergman import (ResidualRow, TruncatedBasis, adjoint_residual, commutator_residual,
                      homomorphism_residual, nullstellensatz_check, operator_bound,
                      reducing_projections, spectral_norm, toeplitz_family,
                      weighted_composition_matrix)
from .config import DEFAULTS, Tolerances
from .errors import AtlasError, ConfigurationError, InputError, PreconditionError
from .hecke import (idempotent_residuals, is_commutative, law_violations, minimal_idempotents,
                    structure_constants)
from .monodromy import build_monodromy, cycle_notation, pair_orbits
from .quadrature import QuadratureGrid
from .symbol import ProductMap, critical_points, symbol_from_json, symbol_to_json

log = logging.getLogger("reducing_atlas")

EXIT_OK, EXIT_ANALYSIS, EXIT_VERIFICATION, EXIT_IO = 0, 2, 3, 4
STAGES = ("analyze", "verify")
SCHEMA = "reducing-atlas/1"

_CONFIG_KEYS = {"symbol", "truncation", "quadrature", "tolerances", "stages", "output_dir", "seed",
                "idempotents"}


@dataclass(frozen=True)
class RunConfig:
    symbol: dict
    N: int = 32
    m_r: int = 96
    m_theta: int = 256
    r_max: float = 1.0
    tracking: float = DEFAULTS.tracking_residual
    verification: float = DEFAULTS.verification
    clearance: float = DEFAULTS.loop_clearance
    stages: tuple = STAGES
    output_dir: str = "out"
    seed: int = 0
    idempotents: Optional[tuple] = None  # explicit coefficient vectors, bypassing extraction

    def __post_init__(self):
        if self.N < 8:
            raise ConfigurationError(f"truncation N must be >= 8, got {self.N}")
        if self.m_r < 16 or self.m_theta < 16:
            raise ConfigurationError(f"quadrature needs m_r, m_theta >= 16, got {self.m_r}, {self.m_theta}")
        if not 0 < self.r_max <= 1:
            raise ConfigurationError(f"r_max must lie in (0, 1], got {self.r_max}")
        for name in ("tracking", "verification", "clearance"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"tolerance {name} must be positive")
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ConfigurationError(f"unknown stages {bad}; choose from {list(STAGES)}")

    @classmethod
    def from_json(cls, doc) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigurationError("config must be a JSON object")
        extra = set(doc) - _CONFIG_KEYS
        if extra:
            raise ConfigurationError(f"unknown config keys {sorted(extra)}")
        if "symbol" not in doc:
            raise ConfigurationError("config needs a 'symbol' entry")
        quad = doc.get("quadrature", {})
        tols = doc.get("tolerances", {})
        try:
            ids = doc.get("idempotents")
            if ids is not None:
                ids = tuple(tuple(serialize.complex_from_pair(c) for c in p) for p in ids)
            return cls(
                symbol=doc["symbol"],
                N=int(doc.get("truncation", cls.N)),
                m_r=int(quad.get("m_r", cls.m_r)),
                m_theta=int(quad.get("m_theta", cls.m_theta)),
                r_max=float(quad.get("r_max", cls.r_max)),
                tracking=float(tols.get("tracking", cls.tracking)),
                verification=float(tols.get("verification", cls.verification)),
                clearance=float(tols.get("clearance", cls.clearance)),
                stages=tuple(doc.get("stages", STAGES)),
                output_dir=str(doc.get("output_dir", cls.output_dir)),
                seed=int(doc.get("seed", 0)),
                idempotents=ids,
            )
        except (TypeError, ValueError, AttributeError, IndexError) as exc:
            raise ConfigurationError(f"malformed config: {exc}") from exc

    def to_json(self) -> dict:
        out = {
            "symbol": self.symbol,
            "truncation": self.N,
            "quadrature": {"m_r": self.m_r, "m_theta": self.m_theta, "r_max": self.r_max},
            "tolerances": {"tracking": self.tracking, "verification": self.verification,
                           "clearance": self.clearance},
            "stages": list(self.stages),
            "output_dir": self.output_dir,
            "seed": self.seed,
        }
        if self.idempotents is not None:
            out["idempotents"] = [list(p) for p in self.idempotents]
        return out

    @property
    def tolerances(self) -> Tolerances:
        return dataclasses.replace(DEFAULTS, tracking_residual=self.tracking,
                                   verification=self.verification, loop_clearance=self.clearance)

    @property
    def grid(self) -> QuadratureGrid:
        return QuadratureGrid(self.m_r, self.m_theta, self.r_max)


class StageFailure(Exception):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.exc = exc


# -- stages ---------------------------------------------------------------------------

@dataclass
class Analysis:
    """In-memory results of the analyze stage."""

    symbol: object
    rep: object
    atlas: object
    algebra: object
    idempotents: list
    paths: list
    doc: dict


def _critical_json(m):
    cps = critical_points(m)
    if isinstance(m, ProductMap):
        return [[[p, k] for p, k in f] for f in cps]
    return [[p, k] for p, k in cps]


def _cv_json(m, rep):
    if isinstance(m, ProductMap):
        return [{"factor": k, "value": v} for k, v in rep.critical_values]
    return list(rep.critical_values)


def run_analysis(cfg: RunConfig) -> Analysis:
    """Symbol, monodromy and algebra; raises :class:`StageFailure` on any error."""
    t0 = time.perf_counter()
    tol = cfg.tolerances
    try:
        m = symbol_from_json(cfg.symbol)
    except InputError as exc:
        raise ConfigurationError(str(exc)) from exc
    try:
        paths = []
        rep = build_monodromy(m, tol=tol, paths=paths)
        atlas = pair_orbits(rep)
        alg = structure_constants(atlas)
        laws = law_violations(alg)
        commutative = is_commutative(alg)
        if cfg.idempotents is None:
            ids = minimal_idempotents(alg, seed=cfg.seed, tol=tol)
    except Exception as exc:  # recorded as a stage failure, never swallowed silently
        raise StageFailure("analyze", exc) from exc
    if cfg.idempotents is not None:
        ids = [np.array(p, dtype=complex) for p in cfg.idempotents]
        if any(p.shape != (alg.dim,) for p in ids):
            raise ConfigurationError(f"each injected idempotent needs {alg.dim} coefficients")
    ires = idempotent_residuals(alg, ids)
    rows = [ResidualRow(f"algebra.{k}", float(v), 0.5) for k, v in laws.items()]
    rows += [ResidualRow(f"idempotents.{k}", v, tol.idempotent) for k, v in ires.items()]
    doc = {
        "schema": SCHEMA,
        "stage": "analyze",
        "status": "ok",
        "config": cfg.to_json(),
        "symbol": symbol_to_json(m),
        "degree": m.degree,
        "dimension": m.dim if isinstance(m, ProductMap) else 1,
        "critical_points": _critical_json(m),
        "critical_values": _cv_json(m, rep),
        "base_point": rep.base_point,
        "base_fiber": [list(z) if isinstance(z, tuple) else z for z in rep.base_fiber],
        "generators": [{"permutation": list(g), "cycles": cycle_notation(g)} for g in rep.generators],
        "boundary_permutation": {"permutation": list(rep.boundary_perm),
                                 "cycles": cycle_notation(rep.boundary_perm),
                                 "order": list(rep.boundary_order)},
        "q": atlas.orbit_count,
        "orbit_table": atlas.as_array(),
        "canonical_reps": [list(r) for r in atlas.canonical_reps],
        "transpose": list(atlas.transpose),
        "structure_tensor": alg.structure,
        "identity": alg.identity,
        "involution": list(alg.involution),
        "commutative": commutative,
        "idempotents": ids,
        "residuals": [_row_json(r) for r in rows],
        "paths": [{"name": name, "records": [[s, y, list(z)] for s, y, z in rec]} for name, rec in paths],
        "timings": {"analyze": time.perf_counter() - t0},
    }
    return Analysis(m, rep, atlas, alg, ids, paths, doc)


def _row_json(row: ResidualRow) -> dict:
    return {"name": row.name, "residual": row.residual, "tolerance": row.tolerance, "pass": row.passed}


def run_verification(cfg: RunConfig, an: Analysis) -> dict:
    """Bergman-space residual suite on the analysis results."""
    t0 = time.perf_counter()
    tol = cfg.tolerances
    m, rep, atlas, alg = an.symbol, an.rep, an.atlas, an.algebra
    q = atlas.orbit_count
    d = m.dim if isinstance(m, ProductMap) else 1
    basis = TruncatedBasis(cfg.N, d)
    grid = cfg.grid
    vt = tol.verification
    rows = []
    try:
        Ts = toeplitz_family(m, basis)
        for k in range(q):
            e = np.eye(q)[k]
            A = weighted_composition_matrix(m, rep, atlas, e, basis, grid, tol)
            for t, T in enumerate(Ts):
                rows.append(ResidualRow(f"commutator[T{t},e{k}]", commutator_residual(T, A), vt))
            rows.append(ResidualRow(f"adjoint[e{k}]", adjoint_residual(m, rep, atlas, e, basis, grid, tol), vt))
            ratio = spectral_norm(A.block()) / operator_bound(m, e)
            rows.append(ResidualRow(f"bound[e{k}]", ratio, 1 + 1e-6))
        rng = np.random.default_rng(cfg.seed)
        for k in range(3):
            a = rng.standard_normal(q) + 1j * rng.standard_normal(q)
            b = rng.standard_normal(q) + 1j * rng.standard_normal(q)
            res = homomorphism_residual(m, rep, atlas, alg, a, b, basis, grid, tol)
            rows.append(ResidualRow(f"homomorphism[{k}]", res, tol.homomorphism))
        report = reducing_projections(m, rep, atlas, an.idempotents, basis, grid, tol)
        rows += report.residuals
        if not isinstance(m, ProductMap):
            for lam in (0.3, 0.4j):
                for deg in range(3):
                    g = np.eye(deg + 1)[deg]
                    try:
                        res = nullstellensatz_check(m, lam, g, grid, tol)
                    except PreconditionError:
                        continue  # lambda happens to map onto a critical value
                    rows.append(ResidualRow(f"nullstellensatz[{lam},z^{deg}]", res, 1e-9))
    except ConfigurationError:
        raise
    except Exception as exc:
        raise StageFailure("verify", exc) from exc
    rows = [ResidualRow(r["name"], r["residual"], r["tolerance"]) for r in an.doc["residuals"]] + rows
    passed = all(r.passed for r in rows)
    trusted = report.projections[0][0].trusted_block if report.projections else 0
    return {
        "schema": SCHEMA,
        "stage": "verify",
        "status": "ok" if passed else "failed",
        "truncation": cfg.N,
        "trusted_block": trusted,
        "ranks": report.ranks,
        "residuals": [_row_json(r) for r in rows],
        "failures": [r.name for r in rows if not r.passed],
        "timings": {"verify": time.perf_counter() - t0},
    }


def _failure_doc(stage: str, cfg: RunConfig, exc: StageFailure) -> dict:
    return {"schema": SCHEMA, "stage": stage, "status": "failed", "config": cfg.to_json(),
            "error": {"stage": exc.stage, "type": type(exc.exc).__name__, "message": str(exc.exc)}}


# -- report ------------------------------------------------------------------------

def build_report(analysis: dict, verification: Optional[dict]) -> dict:
    """Merged report document; ``timings`` is the only non-deterministic field."""
    out = {"schema": SCHEMA, "stages": {"analyze": analysis.get("status")}}
    if verification is not None:
        out["stages"]["verify"] = verification.get("status")
    if analysis.get("status") != "ok":
        out["error"] = analysis.get("error")
        out["timings"] = {}
        return out
    for key in ("config", "symbol", "degree", "dimension", "q", "critical_values", "base_point",
                "generators", "boundary_permutation", "orbit_table", "structure_tensor", "involution",
                "commutative", "idempotents"):
        out[key] = analysis[key]
    rows = list(analysis["residuals"])
    if verification is not None:
        if verification.get("status") == "failed" and "error" in verification:
            out["error"] = verification["error"]
        else:
            rows = verification["residuals"]
            out["trusted_block"] = verification["trusted_block"]
            out["ranks"] = verification["ranks"]
    out["residuals"] = rows
    out["timings"] = {**analysis.get("timings", {}), **(verification or {}).get("timings", {})}
    return out


def atlas_doc(analysis: dict) -> dict:
    table = np.array(analysis["orbit_table"])
    n = len(table)
    return {
        "schema": SCHEMA,
        "n": n,
        "q": analysis["q"],
        "orbit_table": table,
        "canonical_reps": analysis["canonical_reps"],
        "transpose": analysis["transpose"],
        "diagonal_orbits": sorted({int(table[i, i]) for i in range(n)}),
        "members": [[[i, j] for i in range(n) for j in range(n) if table[i, j] == o]
                    for o in range(analysis["q"])],
    }


def residuals_csv(rows) -> str:
    return serialize.csv_text(["name", "residual", "tolerance", "pass"],
                              [[r["name"], _num(r["residual"]), _num(r["tolerance"]), str(bool(r["pass"])).lower()]
                               for r in rows])


def _num(x):
    return float("nan") if x is None else float(x)


def paths_csv(paths) -> str:
    rows = []
    for p in paths:
        for step, y, fib in p["records"]:
            for label, z in enumerate(fib):
                rows.append([p["name"], step, float(y[0]), float(y[1]), label, float(z[0]), float(z[1])])
    return serialize.csv_text(["path", "step", "y_re", "y_im", "label", "z_re", "z_im"], rows)


# -- command line -------------------------------------------------------------------

def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return serialize.loads(fh.read())


def load_config(path: str) -> RunConfig:
    try:
        doc = _read_json(path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_json(doc)


def _out_dir(cfg: RunConfig, override: Optional[str]) -> str:
    out = override if override is not None else cfg.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def cmd_analyze(cfg: RunConfig, out: str) -> int:
    try:
        an = run_analysis(cfg)
    except StageFailure as exc:
        log.error("analysis failed: %s", exc)
        _write(os.path.join(out, "analysis.json"), serialize.dumps(_failure_doc("analyze", cfg, exc)))
        return EXIT_ANALYSIS
    _write(os.path.join(out, "analysis.json"), serialize.dumps(an.doc))
    log.info("q = %d, generators %s", an.atlas.orbit_count, [g["cycles"] for g in an.doc["generators"]])
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: str) -> int:
    try:
        an = run_analysis(cfg)
    except StageFailure as exc:
        log.error("analysis failed: %s", exc)
        _write(os.path.join(out, "analysis.json"), serialize.dumps(_failure_doc("analyze", cfg, exc)))
        return EXIT_ANALYSIS
    _write(os.path.join(out, "analysis.json"), serialize.dumps(an.doc))
    try:
        ver = run_verification(cfg, an)
    except StageFailure as exc:
        log.error("verification crashed: %s", exc)
        _write(os.path.join(out, "verification.json"), serialize.dumps(_failure_doc("verify", cfg, exc)))
        return EXIT_ANALYSIS
    _write(os.path.join(out, "verification.json"), serialize.dumps(ver))
    if ver["status"] != "ok":
        for row in ver["residuals"]:
            if not row["pass"]:
                log.error("check %s failed: residual %s > tolerance %s", row["name"], row["residual"], row["tolerance"])
        return EXIT_VERIFICATION
    log.info("all %d checks passed; ranks %s", len(ver["residuals"]), ver["ranks"])
    return EXIT_OK


def cmd_report(cfg: RunConfig, out: str, stages) -> int:
    docs = {}
    for stage in stages:
        path = os.path.join(out, "analysis.json" if stage == "analyze" else "verification.json")
        if not os.path.exists(path):
            log.error("missing output of stage %r (%s); run it first", stage, path)
            return EXIT_IO
        docs[stage] = _read_json(path)
    if "analyze" not in docs:
        path = os.path.join(out, "analysis.json")
        if not os.path.exists(path):
            log.error("missing output of stage 'analyze' (%s); run it first", path)
            return EXIT_IO
        docs["analyze"] = _read_json(path)
    analysis = docs["analyze"]
    rep = build_report(analysis, docs.get("verify"))
    _write(os.path.join(out, "report.json"), serialize.dumps(rep))
    if analysis.get("status") == "ok":
        _write(os.path.join(out, "atlas.json"), serialize.dumps(atlas_doc(analysis)))
        _write(os.path.join(out, "paths.csv"), paths_csv(analysis["paths"]))
    else:
        _write(os.path.join(out, "atlas.json"), serialize.dumps({"schema": SCHEMA, "error": analysis.get("error")}))
        _write(os.path.join(out, "paths.csv"), paths_csv([]))
    _write(os.path.join(out, "residuals.csv"), residuals_csv(rep.get("residuals", [])))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reducing-atlas", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=("analyze", "verify", "report"))
    p.add_argument("config", help="run configuration (JSON)")
    p.add_argument("--out", help="output directory (overrides the config's output_dir)")
    p.add_argument("--stage", action="append", choices=STAGES,
                   help="for report: prior stage whose output is required (repeatable; default: config stages)")
    p.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        out = _out_dir(cfg, args.out)
        if args.command == "analyze":
            return cmd_analyze(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        return cmd_report(cfg, out, args.stage or cfg.stages)
    except (ConfigurationError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except AtlasError as exc:
        log.error("%s", exc)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
