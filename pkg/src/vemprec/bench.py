"""Experiment runner: mesh -> coefficient -> VEM and P1 systems -> PCG,
with CSV / markdown result tables."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .coefficients import CoefficientField, constant_field, inclusion_field_3d, random_exponent_field
from .fem import assemble_p1
from .linalg import pcg
from .mesh import (
    PolytopalMesh,
    generate_structured_hex_mesh,
    generate_structured_quad_mesh,
    generate_voronoi_mesh,
    mesh_quality,
    read_mesh,
    triangulate,
)
from .preconditioners import LABELS, VARIANTS, PreconditionerFactory
from .vem import assemble


class ConfigError(ValueError):
    """Invalid experiment specification or configuration file."""


SIZES_2D = (10, 100, 1000, 10000)
SIZES_3D = (4, 8, 16, 32)
FORMATS = ("csv", "markdown")


@dataclass
class ExperimentSpec:
    dim: int
    meshes: list[str]
    coefs: list[str]
    preconds: list[str] = field(default_factory=lambda: list(VARIANTS))
    smoother: str = "sgs"
    sweeps: int = 2
    tol: float = 1e-12
    max_iter: int = 1200
    coarse: str = "direct"
    rhs_seed: int = 0
    suite: str = "custom"
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.dim not in (2, 3):
            raise ConfigError(f"dim must be 2 or 3, got {self.dim}")
        if not self.meshes:
            raise ConfigError("no mesh source given (use gen or mesh)")
        if not self.coefs:
            raise ConfigError("no coefficient scenario given")
        if not self.preconds:
            raise ConfigError("no preconditioner given")
        for p in self.preconds:
            if p not in VARIANTS:
                raise ConfigError(f"unknown preconditioner {p!r}; choose from {', '.join(VARIANTS)}")
        if self.smoother not in ("sgs", "jacobi"):
            raise ConfigError(f"unknown smoother {self.smoother!r}")
        if self.sweeps < 0:
            raise ConfigError("sweeps must be non-negative")
        if not 0.0 < self.tol < 1.0:
            raise ConfigError(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        if self.coarse not in ("direct", "amg"):
            raise ConfigError(f"unknown coarse solver {self.coarse!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}; choose csv or markdown")
        for src in self.meshes:
            d = mesh_source_dim(src)
            if d is not None and d != self.dim:
                raise ConfigError(f"mesh source {src!r} is {d}D but dim={self.dim}")
        for c in self.coefs:
            parse_coef(c)
            if c.startswith("inclusion") and self.dim != 3:
                raise ConfigError("the inclusion coefficient is defined in 3D only")


@dataclass(frozen=True)
class ResultRow:
    suite: str
    mesh: str
    cells: int
    free_dofs: int
    coef: str
    preconditioner: str
    condition: float
    lambda_min: float
    lambda_max: float
    iterations: int
    converged: bool
    wall_time: float

    @classmethod
    def from_report(cls, report, **kw) -> "ResultRow":
        return cls(
            condition=report.condition,
            lambda_min=report.lambda_min,
            lambda_max=report.lambda_max,
            iterations=report.iterations,
            converged=report.converged,
            **kw,
        )

    def same_result(self, other: "ResultRow") -> bool:
        """Equality ignoring wall time."""
        return replace(self, wall_time=0.0) == replace(other, wall_time=0.0)


ROW_FIELDS = tuple(f.name for f in fields(ResultRow))


class SuiteResult(list):
    """List of ResultRow plus the metadata needed to regenerate them."""

    def __init__(self, rows=(), metadata: dict | None = None):
        super().__init__(rows)
        self.metadata = metadata or {}


# --- sources -----------------------------------------------------------------


def _parse_opts(parts: list[str], allowed: set[str], src: str) -> dict[str, int]:
    opts = {}
    for p in parts:
        key, sep, val = p.partition("=")
        if not sep or key not in allowed:
            raise ConfigError(f"bad option {p!r} in mesh source {src!r}")
        try:
            opts[key] = int(val)
        except ValueError:
            raise ConfigError(f"option {key} in {src!r} must be an integer") from None
    return opts


def mesh_source_dim(src: str) -> int | None:
    kind = src.split(":", 1)[0]
    return {"voronoi": 2, "quad": 2, "hex": 3}.get(kind)


def build_mesh(src: str) -> PolytopalMesh:
    """``voronoi:N[:lloyd=K][:seed=S]``, ``quad:N``, ``hex:N`` or a mesh file path."""
    kind, _, rest = src.partition(":")
    if kind in ("voronoi", "quad", "hex"):
        parts = rest.split(":") if rest else []
        if not parts or not parts[0].isdigit() or int(parts[0]) < 1:
            raise ConfigError(f"mesh source {src!r} needs a positive size, e.g. {kind}:100")
        n = int(parts[0])
        if kind == "voronoi":
            opts = _parse_opts(parts[1:], {"lloyd", "seed"}, src)
            return generate_voronoi_mesh(n, opts.get("lloyd", 100), opts.get("seed", 0))
        _parse_opts(parts[1:], set(), src)
        return generate_structured_quad_mesh(n) if kind == "quad" else generate_structured_hex_mesh(n)
    path = Path(src)
    if not path.is_file():
        raise ConfigError(f"mesh file {src!r} does not exist")
    return read_mesh(path)


def parse_coef(desc: str) -> tuple[str, float | int]:
    kind, _, arg = desc.partition(":")
    try:
        if kind == "const":
            v = float(arg) if arg else 1.0
            if not v > 0:
                raise ConfigError(f"constant coefficient must be positive in {desc!r}")
            return kind, v
        if kind == "random":
            return kind, int(arg)
        if kind == "inclusion":
            v = float(arg)
            if not v > 0:
                raise ConfigError(f"kappa1 must be positive in {desc!r}")
            return kind, v
    except ValueError:
        raise ConfigError(f"bad coefficient scenario {desc!r}") from None
    raise ConfigError(f"unknown coefficient scenario {desc!r}; use const[:v], random:SEED or inclusion:KAPPA1")


def build_coef(desc: str, mesh: PolytopalMesh) -> CoefficientField:
    kind, arg = parse_coef(desc)
    if kind == "const":
        return constant_field(mesh, arg)
    if kind == "random":
        return random_exponent_field(mesh, arg)
    return inclusion_field_3d(mesh, arg)


# --- running -----------------------------------------------------------------


def run_suite(spec: ExperimentSpec, progress=None) -> SuiteResult:
    """Run every (mesh, coefficient, preconditioner) combination in spec order.

    The right-hand side is a standard normal vector from ``rhs_seed``, so the
    Krylov space sees the whole spectrum. PCG failures after ``max_iter``
    become unconverged rows.
    """
    spec.validate()
    rows: list[ResultRow] = []
    meta = {
        "suite": spec.suite,
        "version": __version__,
        "rhs_seed": spec.rhs_seed,
        "smoother": f"{spec.smoother} x{spec.sweeps}",
        "coarse": spec.coarse,
        "tol": spec.tol,
        "max_iter": spec.max_iter,
        "meshes": {},
    }
    for src in spec.meshes:
        mesh = build_mesh(src)
        if mesh.dim != spec.dim:
            raise ConfigError(f"mesh {src!r} is {mesh.dim}D but dim={spec.dim}")
        meta["meshes"][src] = {"cells": mesh.n_cells, **mesh_quality(mesh).as_dict()}
        tri = triangulate(mesh) if any(p in ("fict", "add", "mul") for p in spec.preconds) else None
        for cdesc in spec.coefs:
            coeff = build_coef(cdesc, mesh)
            system = assemble(mesh, coeff)
            coarse = assemble_p1(tri, coeff) if tri is not None else system
            factory = PreconditionerFactory(system, coarse, spec.smoother, spec.sweeps, spec.coarse)
            b = np.random.default_rng(spec.rhs_seed).standard_normal(system.n_free)
            for variant in spec.preconds:
                B = factory.build(variant)
                t0 = time.perf_counter()
                _, report = pcg(system.matrix, b, B, tol=spec.tol, max_iter=spec.max_iter)
                elapsed = time.perf_counter() - t0
                row = ResultRow.from_report(
                    report,
                    suite=spec.suite,
                    mesh=src,
                    cells=mesh.n_cells,
                    free_dofs=system.n_free,
                    coef=coeff.descriptor,
                    preconditioner=variant,
                    wall_time=elapsed,
                )
                rows.append(row)
                if progress is not None:
                    progress(row)
    return SuiteResult(rows, meta)


# --- tables ------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _meta_lines(meta: dict) -> list[str]:
    out = []
    for key, val in meta.items():
        if key == "meshes":
            for src, q in val.items():
                out.append(f"mesh {src}: {json.dumps(q, sort_keys=True)}")
        else:
            out.append(f"{key}: {val}")
    return out


def format_csv(rows, metadata: dict | None = None) -> str:
    buf = io.StringIO()
    for line in _meta_lines(metadata or {}):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, f)) for f in ROW_FIELDS])
    return buf.getvalue()


def _cell(r: ResultRow) -> str:
    if not r.converged:
        return "-"
    return f"{r.condition:.3g} ({r.iterations})"


def format_markdown(rows, metadata: dict | None = None) -> str:
    """One block per (suite, coefficient); preconditioners as rows, meshes as columns."""
    lines: list[str] = []
    blocks: dict[tuple[str, str], list[ResultRow]] = {}
    for r in rows:
        blocks.setdefault((r.suite, r.coef), []).append(r)
    for (suite, coef), brows in blocks.items():
        meshes = list(dict.fromkeys(r.mesh for r in brows))
        cells = {r.mesh: r.cells for r in brows}
        counts = [cells[m] for m in meshes]
        heads = [str(c) if counts.count(c) == 1 else f"{c} ({m})" for c, m in zip(counts, meshes)]
        lines.append(f"### {suite}: {coef}")
        lines.append("")
        lines.append("| cells | " + " | ".join(heads) + " |")
        lines.append("|---|" + "---|" * len(meshes))
        lines.append("| free DOFs | " + " | ".join(str(next(r.free_dofs for r in brows if r.mesh == m)) for m in meshes) + " |")
        for p in dict.fromkeys(r.preconditioner for r in brows):
            by_mesh = {r.mesh: r for r in brows if r.preconditioner == p}
            vals = [_cell(by_mesh[m]) if m in by_mesh else "" for m in meshes]
            lines.append(f"| {LABELS.get(p, p)} | " + " | ".join(vals) + " |")
        lines.append("")
    meta = _meta_lines(metadata or {})
    if meta:
        lines.append("### Regeneration data")
        lines.append("")
        lines.extend(f"- {m}" for m in meta)
        lines.append("")
    if not lines:
        lines = ["| cells |", "|---|", ""]
    return "\n".join(lines)


def emit_table(rows, fmt: str = "csv", path=None, metadata: dict | None = None) -> str:
    """Render rows as csv or markdown; write to ``path`` when given."""
    if metadata is None:
        metadata = getattr(rows, "metadata", None)
    if fmt == "csv":
        text = format_csv(rows, metadata)
    elif fmt == "markdown":
        text = format_markdown(rows, metadata)
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv_rows(path) -> list[ResultRow]:
    return parse_csv_rows(Path(path).read_text())


def parse_csv_rows(text: str) -> list[ResultRow]:
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(body):
        rows.append(
            ResultRow(
                suite=rec["suite"],
                mesh=rec["mesh"],
                cells=int(rec["cells"]),
                free_dofs=int(rec["free_dofs"]),
                coef=rec["coef"],
                preconditioner=rec["preconditioner"],
                condition=float(rec["condition"]),
                lambda_min=float(rec["lambda_min"]),
                lambda_max=float(rec["lambda_max"]),
                iterations=int(rec["iterations"]),
                converged=rec["converged"] == "1",
                wall_time=float(rec["wall_time"]),
            )
        )
    return rows


# --- configuration -----------------------------------------------------------


def preset(name: str, seed: int = 0, sizes=None) -> ExperimentSpec:
    """Predefined benchmark suites.

    table1: 2D relaxed Voronoi, kappa = 1. table2: same meshes, random
    exponents 0..6. table3: raw Voronoi, kappa = 1. table4: 3D cubes with
    two inclusions of kappa1 in {1e-6, 1, 1e6}.
    """
    if name in ("table1", "table2", "table3"):
        lloyd = 0 if name == "table3" else 100
        meshes = [f"voronoi:{n}:lloyd={lloyd}:seed={seed}" for n in (sizes or SIZES_2D)]
        coefs = [f"random:{seed}"] if name == "table2" else ["const:1"]
        return ExperimentSpec(dim=2, meshes=meshes, coefs=coefs, suite=name)
    if name == "table4":
        meshes = [f"hex:{n}" for n in (sizes or SIZES_3D)]
        return ExperimentSpec(dim=3, meshes=meshes, coefs=["inclusion:1e-06", "inclusion:1", "inclusion:1e+06"], suite=name)
    raise ConfigError(f"unknown preset {name!r}; choose table1..table4")


_LIST_KEYS = {"gen", "mesh", "coef", "precond", "sizes"}
_KEYS = _LIST_KEYS | {
    "dim", "smoother", "sweeps", "tol", "max_iter", "coarse", "rhs_seed",
    "suite", "out", "format", "preset", "seed",
}


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment. List keys accept
    comma-separated values and may repeat."""
    cfg: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in _LIST_KEYS:
            cfg.setdefault(key, []).extend(v.strip() for v in val.split(",") if v.strip())
        else:
            if key in cfg:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            cfg[key] = val
    if not cfg:
        raise ConfigError("configuration is empty")
    return cfg


def spec_from_options(opts: dict) -> ExperimentSpec:
    """Build a spec from parsed config / CLI options (string or list values)."""
    try:
        if opts.get("preset"):
            sizes = [int(s) for s in opts.get("sizes") or []] or None
            base = preset(opts["preset"], int(opts.get("seed") or 0), sizes)
        else:
            meshes = list(opts.get("gen") or []) + list(opts.get("mesh") or [])
            if opts.get("dim") in (None, ""):
                dims = {mesh_source_dim(m) for m in meshes} - {None}
                if len(dims) != 1:
                    raise ConfigError("dim is required")
                opts = {**opts, "dim": dims.pop()}
            base = ExperimentSpec(
                dim=int(opts["dim"]),
                meshes=meshes,
                coefs=list(opts.get("coef") or ["const:1"]),
            )
        kw = {}
        if opts.get("precond"):
            kw["preconds"] = list(opts["precond"])
        for key, conv in (("smoother", str), ("sweeps", int), ("tol", float), ("max_iter", int),
                          ("coarse", str), ("rhs_seed", int), ("suite", str), ("out", str), ("format", str)):
            if opts.get(key) not in (None, ""):
                kw[key] = conv(opts[key])
        if opts.get("preset") and (opts.get("gen") or opts.get("mesh") or opts.get("coef")):
            raise ConfigError("preset cannot be combined with gen, mesh or coef")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return replace(base, **kw)


def load_spec(path) -> ExperimentSpec:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"spec file {str(p)!r} does not exist")
    return spec_from_options(parse_config(p.read_text()))
