"""Command-line front end: load a surface, run a check, write a JSON report.

Exit codes are 0 on pass, 1 on a failure that carries a witness, 2 for usage
errors, 3 for unreadable input and 4 for output that cannot be written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import gallery
from .cones import ConeKind, ConeSpec
from .graphs import GraphFunction, PointCloud, SurfaceGrid, sample_graph
from .group import Point
from .pipeline import PipelineGrids, PipelineTols, run_theorem_pipeline
from .verifier import (
    FAIL,
    PASS,
    Certificate,
    best_rotation_aperture,
    check_flat_property,
    check_full_at_base,
    check_full_property,
    check_lemma_vertical_inclusion,
    check_remark_shear_flat,
    check_shear_union_identity,
    max_flat_aperture,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3, 4
COMMANDS = ("check-flat", "check-full", "aperture", "pipeline", "lemmas", "gallery", "export")
SEED_ENV = "HEISCONE_SEED"
# aperture used by "--alpha auto" when no pair constrains the flat cone
AUTO_ALPHA_CAP = 1.0
# pairwise checks on a graph use the same sample size as the pipeline's mesh
GRAPH_SAMPLES = PipelineGrids().n_surface


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    input_path: Optional[str] = None
    gallery: Optional[str] = None
    alpha: Union[float, str, None] = None
    tol: float = 1e-9
    seed: int = 0
    output_path: Optional[str] = None
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "input": self.input_path,
            "gallery": self.gallery,
            "alpha": self.alpha,
            "tol": self.tol,
            "seed": self.seed,
            "options": self.options,
        }


# -- argument parsing -------------------------------------------------------


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return v


def _alpha(text: str) -> Union[float, str]:
    return "auto" if text == "auto" else _positive(text)


def _nonneg(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"must be finite and non-negative: {text!r}")
    return v


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not (-(2**63) <= v < 2**64):
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits: {text!r}")
    return v


def _point(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    try:
        vals = tuple(float(s) for s in parts)
    except ValueError:
        vals = ()
    if len(vals) != 3 or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected x,y,z with finite numbers, got {text!r}")
    return vals  # type: ignore[return-value]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heiscone", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p: argparse.ArgumentParser, needs_surface: bool = True) -> None:
        if needs_surface:
            src = p.add_mutually_exclusive_group(required=True)
            src.add_argument("--input", help="CSV or JSON file with x,y,z or eta,tau,phi columns")
            src.add_argument("--gallery", help="cubic | punctured | plane | constant:<c> | linear:<slope>")
            p.add_argument("--n", type=_count, help="sampling count for --gallery fixtures")
        p.add_argument("--tol", type=_nonneg, default=1e-9)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--output", help="report path (default: stdout)")

    p = sub.add_parser("check-flat", help="pairwise flat cone check")
    common(p)
    p.add_argument("--alpha", type=_alpha, required=True)

    p = sub.add_parser("check-full", help="pairwise full cone check")
    common(p)
    p.add_argument("--alpha", type=_alpha, required=True)
    p.add_argument("--base", type=_point, help="only use this base point (x,y,z)")
    p.add_argument("--radius", type=_positive, help="with --base: keep points with |x(base^-1 q)| < radius")

    p = sub.add_parser("aperture", help="largest flat aperture, also over rotations")
    common(p)
    p.add_argument("--angles", type=_count, default=180)

    p = sub.add_parser("pipeline", help="flat-to-full argument, stage by stage")
    common(p)
    p.add_argument("--alpha", type=_alpha, required=True)
    defaults = PipelineGrids()
    p.add_argument("--n-t", type=_count, default=defaults.n_t)
    p.add_argument("--n-p", type=_count, default=defaults.n_p)
    p.add_argument("--n-eta", type=_count, default=defaults.n_eta)
    p.add_argument("--n-surface", type=_count, default=defaults.n_surface)
    p.add_argument("--n-raster", type=_count, default=defaults.n_raster)
    p.add_argument("--n-lemma-samples", type=_count, default=defaults.n_lemma_samples)
    p.add_argument("--n-lemma-s", type=_count, default=defaults.n_lemma_s)
    p.add_argument("--root-tol", type=_positive, default=PipelineTols().root_tol)

    p = sub.add_parser("lemmas", help="sampled checks of the cone inclusions")
    common(p, needs_surface=False)
    p.add_argument("--beta", type=_positive, default=1.0)
    p.add_argument("--epsilon", type=_positive, default=0.5)
    p.add_argument("--radius", type=_positive, default=1.0)
    p.add_argument("--alpha", type=_positive, default=1.0)
    p.add_argument("--samples", type=_count, default=10_000)
    p.add_argument("--n-s", type=_count, default=101)
    p.add_argument("--n-t", type=_count, default=21)

    p = sub.add_parser("gallery", help="compare a fixture with its predicted behaviour")
    common(p, needs_surface=False)
    p.add_argument("name", help="cubic | punctured | plane | constant:<c> | linear:<slope>")
    p.add_argument("--n", type=_count)

    p = sub.add_parser("export", help="write a cloud or a sampled cone as x,y,z CSV")
    common(p, needs_surface=False)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--gallery")
    src.add_argument("--cone", choices=[k.value for k in ConeKind])
    p.add_argument("--n", type=_count, help="sampling count (fixtures and cone grids)")
    p.add_argument("--alpha", type=_positive, default=1.0, help="cone aperture")
    p.add_argument("--radius", type=_positive, default=1.0, help="x extent of the sampled cone")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None, env: Optional[dict] = None) -> RunConfig:
    """Validated configuration; argparse exits with code 2 on bad arguments."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    env = os.environ if env is None else env
    seed = ns.seed
    if env.get(SEED_ENV) not in (None, ""):
        try:
            seed = _seed(env[SEED_ENV])
        except argparse.ArgumentTypeError as exc:
            parser.error(f"{SEED_ENV}: {exc}")
    if ns.command == "check-full" and ns.radius is not None and ns.base is None:
        parser.error("--radius needs --base")
    known = {"command", "input", "gallery", "alpha", "tol", "seed", "output"}
    options = {k: v for k, v in sorted(vars(ns).items()) if k not in known}
    return RunConfig(
        command=ns.command,
        input_path=getattr(ns, "input", None),
        gallery=getattr(ns, "gallery", None),
        alpha=getattr(ns, "alpha", None),
        tol=ns.tol,
        seed=seed,
        output_path=ns.output,
        options=options,
    )


# -- input ------------------------------------------------------------------

GRID_FIELDS = ("eta", "tau", "phi")
CLOUD_FIELDS = ("x", "y", "z")


def _rows_to_surface(fields: Sequence[str], rows: list[tuple[int, list[str]]], path: str):
    names = tuple(f.strip().lower() for f in fields)
    if names not in (GRID_FIELDS, CLOUD_FIELDS):
        raise CliError(EXIT_INPUT, f"{path}: header must be eta,tau,phi or x,y,z, got {','.join(fields)}")
    values = np.empty((len(rows), 3))
    for k, (line, row) in enumerate(rows):
        if len(row) != 3:
            raise CliError(EXIT_INPUT, f"{path}:{line}: expected 3 fields, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except (TypeError, ValueError):
                raise CliError(EXIT_INPUT, f"{path}:{line}: {names[j]} is not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise CliError(EXIT_INPUT, f"{path}:{line}: {names[j]} is not finite: {cell!r}")
            values[k, j] = v
    if len(rows) == 0:
        raise CliError(EXIT_INPUT, f"{path}: no data rows")
    if names == CLOUD_FIELDS:
        return PointCloud(values)
    return _grid_from_rows(values, [line for line, _ in rows], path)


def _grid_from_rows(values: np.ndarray, lines: list[int], path: str) -> SurfaceGrid:
    eta = np.unique(values[:, 0])
    tau = np.unique(values[:, 1])
    n_eta, n_tau = len(eta), len(tau)
    if len(values) != n_eta * n_tau:
        raise CliError(
            EXIT_INPUT,
            f"{path}: ragged grid: {len(values)} rows for {n_eta} eta values x {n_tau} tau values",
        )
    want_eta = np.repeat(eta, n_tau)
    want_tau = np.tile(tau, n_eta)
    bad = np.flatnonzero((values[:, 0] != want_eta) | (values[:, 1] != want_tau))
    if bad.size:
        k = int(bad[0])
        raise CliError(
            EXIT_INPUT,
            f"{path}:{lines[k]}: grid rows must be row-major (eta outer, tau inner); "
            f"expected eta={want_eta[k]!r}, tau={want_tau[k]!r}",
        )
    try:
        return SurfaceGrid(eta, tau, values[:, 2].reshape(n_eta, n_tau))
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from None


def _load_csv(text: str, path: str):
    reader = csv.reader(io.StringIO(text))
    header: Optional[list[str]] = None
    rows: list[tuple[int, list[str]]] = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = row
        else:
            rows.append((reader.line_num, row))
    if header is None:
        raise CliError(EXIT_INPUT, f"{path}: empty file")
    return _rows_to_surface(header, rows, path)


def _load_json(text: str, path: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_INPUT, f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    for names in (GRID_FIELDS, CLOUD_FIELDS):
        if isinstance(doc, dict) and set(doc) >= set(names):
            cols = [doc[n] for n in names]
            if not all(isinstance(c, list) for c in cols) or len({len(c) for c in cols}) != 1:
                raise CliError(EXIT_INPUT, f"{path}: columns {','.join(names)} must be lists of equal length")
            rows = [(i + 1, [str(c[i]) for c in cols]) for i in range(len(cols[0]))]
            return _rows_to_surface(names, rows, path)
        if isinstance(doc, list) and doc and isinstance(doc[0], dict) and set(doc[0]) >= set(names):
            rows = []
            for i, rec in enumerate(doc):
                if not isinstance(rec, dict) or not set(rec) >= set(names):
                    raise CliError(EXIT_INPUT, f"{path}: record {i + 1} lacks fields {','.join(names)}")
                rows.append((i + 1, [str(rec[n]) for n in names]))
            return _rows_to_surface(names, rows, path)
    raise CliError(EXIT_INPUT, f"{path}: expected records or columns named eta,tau,phi or x,y,z")


def load_surface(path: str) -> Union[SurfaceGrid, PointCloud]:
    """Read a grid (``eta,tau,phi``) or a point cloud (``x,y,z``) from CSV or JSON."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise CliError(EXIT_INPUT, f"{path}: not UTF-8 text") from None
    if path.lower().endswith(".json") or text.lstrip()[:1] in ("{", "["):
        return _load_json(text, path)
    return _load_csv(text, path)


# -- output -----------------------------------------------------------------


def _plain(obj):
    """JSON-ready copy: numpy scalars become Python ones, non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def render_report(report) -> str:
    return json.dumps(_plain(report), indent=2, allow_nan=False) + "\n"


def emit_report(report, output_path: Optional[str]) -> int:
    """Write ``report`` as JSON and return the exit code its status implies."""
    _write_text(render_report(report), output_path)
    status = report.get("status") if isinstance(report, dict) else report.status
    return EXIT_PASS if status == PASS else EXIT_FAIL


def _write_text(text: str, output_path: Optional[str]) -> None:
    if output_path is None or output_path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"{output_path}: {exc.strerror or exc}") from None


# -- commands ---------------------------------------------------------------


def _surface_from_config(cfg: RunConfig) -> Union[GraphFunction, PointCloud]:
    n = cfg.options.get("n")
    if cfg.gallery is not None:
        try:
            spec = gallery.parse_spec(cfg.gallery, n)
        except ValueError as exc:
            raise CliError(EXIT_USAGE, str(exc)) from None
        return gallery.graph_function(spec) if spec.is_graph else gallery.generate(spec)
    assert cfg.input_path is not None
    loaded = load_surface(cfg.input_path)
    if isinstance(loaded, SurfaceGrid):
        return GraphFunction.from_grid(loaded)
    return loaded


def _as_cloud(surface: Union[GraphFunction, PointCloud], n: int) -> PointCloud:
    """Graph inputs are checked on an ``n x n`` sample of their graph."""
    if isinstance(surface, PointCloud):
        return surface
    return sample_graph(surface, n, n)


def _resolve_alpha(cfg: RunConfig, cloud: PointCloud) -> tuple[float, dict]:
    if cfg.alpha != "auto":
        return float(cfg.alpha), {}
    measured = max_flat_aperture(cloud, cfg.tol)
    alpha = min(measured, AUTO_ALPHA_CAP)
    return alpha, {"measured_aperture": measured, "alpha_used": alpha, "cap": AUTO_ALPHA_CAP}


def _no_aperture(cfg: RunConfig, measured: dict) -> dict:
    witness = {"kind": "diagnostic", "message": "measured flat aperture is 0: no flat cone misses the set"}
    cert = Certificate("aperture-auto", FAIL, witness, measured)
    return _with_run(cert.to_dict(), cfg)


def _with_run(doc: dict, cfg: RunConfig) -> dict:
    return {**doc, "run": cfg.to_dict()}


def cmd_check(cfg: RunConfig) -> dict:
    surface = _surface_from_config(cfg)
    cloud = _as_cloud(surface, cfg.options.get("n") or GRAPH_SAMPLES)
    alpha, auto = _resolve_alpha(cfg, cloud)
    if alpha <= 0:
        return _no_aperture(cfg, auto)
    if cfg.command == "check-flat":
        cert = check_flat_property(cloud, alpha, cfg.tol)
    else:
        base = cfg.options.get("base")
        radius = cfg.options.get("radius")
        if base is None:
            cert = check_full_property(cloud, alpha, cfg.tol)
        elif radius is None:
            cert = check_full_at_base(cloud, Point(*base), alpha, cfg.tol)
        else:
            cert = check_full_property(cloud, alpha, cfg.tol, restrict=(Point(*base), radius))
    doc = cert.to_dict()
    if auto:
        doc["parameters"] = {**doc["parameters"], "auto_alpha": auto}
    return _with_run(doc, cfg)


def cmd_aperture(cfg: RunConfig) -> dict:
    surface = _surface_from_config(cfg)
    cloud = _as_cloud(surface, cfg.options.get("n") or GRAPH_SAMPLES)
    measured = max_flat_aperture(cloud, cfg.tol)
    theta, best = best_rotation_aperture(cloud, cfg.options["angles"], cfg.tol)
    doc = {
        "check": "aperture",
        "status": PASS,
        "max_flat_aperture": measured,
        "best_rotation": {"angle": theta, "aperture": best, "n_angles": cfg.options["angles"]},
        "n_points": len(cloud),
    }
    return _with_run(doc, cfg)


def cmd_pipeline(cfg: RunConfig) -> dict:
    o = cfg.options
    grids = PipelineGrids(
        n_t=o["n_t"],
        n_p=o["n_p"],
        n_eta=o["n_eta"],
        n_surface=o["n_surface"],
        n_raster=o["n_raster"],
        n_lemma_samples=o["n_lemma_samples"],
        n_lemma_s=o["n_lemma_s"],
    )
    tols = PipelineTols(tol=cfg.tol, root_tol=o["root_tol"])
    surface = _surface_from_config(cfg)
    auto: dict = {}
    if cfg.alpha == "auto":
        alpha, auto = _resolve_alpha(cfg, _as_cloud(surface, grids.n_surface))
        if alpha <= 0:
            return _no_aperture(cfg, auto)
    else:
        alpha = float(cfg.alpha)
    report = run_theorem_pipeline(surface, alpha, grids, tols, cfg.seed)
    doc = report.to_dict()
    if auto:
        doc["auto_alpha"] = auto
    return _with_run(doc, cfg)


def cmd_lemmas(cfg: RunConfig) -> dict:
    o = cfg.options
    certs = [
        check_lemma_vertical_inclusion(o["beta"], o["epsilon"], o["samples"], o["n_s"], cfg.tol, cfg.seed),
        check_shear_union_identity(o["beta"], o["radius"], o["samples"], cfg.tol, cfg.seed),
        check_remark_shear_flat(float(cfg.alpha), o["samples"], o["n_t"], cfg.tol, cfg.seed),
    ]
    status = PASS if all(c.passed for c in certs) else FAIL
    return _with_run({"check": "lemmas", "status": status, "checks": [c.to_dict() for c in certs]}, cfg)


def cmd_gallery(cfg: RunConfig) -> dict:
    try:
        spec = gallery.parse_spec(cfg.options["name"], cfg.options.get("n"))
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    expected = gallery.expected_behavior(spec)
    got = gallery.verify_example(spec, cfg.tol)
    agrees = got["table"] == expected.table()
    doc = {
        "check": "gallery",
        "status": PASS if agrees else FAIL,
        "example": spec.to_dict(),
        "expected": expected.to_dict(),
        "observed": got["table"],
        "certificates": [c.to_dict() for c in got["certificates"]],
    }
    return _with_run(doc, cfg)


def cone_samples(cone: ConeSpec, n: int, x_extent: float) -> np.ndarray:
    """Points on the boundary of ``cone`` (its closure for the flat and vertical sets)."""
    r = cone.radius if cone.radius is not None else x_extent
    a = cone.aperture
    x = np.linspace(-r, r, n)
    u = np.linspace(-1.0, 1.0, n)
    X, U = (m.ravel() for m in np.meshgrid(x, u, indexing="ij"))
    if cone.kind is ConeKind.FLAT:
        return np.column_stack([X, a * np.abs(X) * U, np.zeros_like(X)])
    if cone.kind is ConeKind.VERTICAL:
        return np.column_stack([X, np.zeros_like(X), a * U * X * X / 2])
    sheets = []
    for sign in (-1.0, 1.0):
        # side walls |y| = a|x| and caps |z| = a x^2 / 2
        sheets.append(np.column_stack([X, sign * a * np.abs(X), a * U * X * X / 2]))
        sheets.append(np.column_stack([X, a * np.abs(X) * U, sign * a * X * X / 2]))
    return np.vstack(sheets)


def cmd_export(cfg: RunConfig) -> str:
    o = cfg.options
    n = o.get("n")
    if o.get("cone") is not None:
        kind = ConeKind(o["cone"])
        cone = ConeSpec(kind, float(cfg.alpha), o["radius"] if kind.needs_radius else None)
        pts = cone_samples(cone, n or 41, o["radius"])
    else:
        surface = _surface_from_config(cfg)
        pts = _as_cloud(surface, n or GRAPH_SAMPLES).points
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CLOUD_FIELDS)
    for row in pts:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def run(cfg: RunConfig) -> int:
    if cfg.command == "export":
        _write_text(cmd_export(cfg), cfg.output_path)
        return EXIT_PASS
    handlers = {
        "check-flat": cmd_check,
        "check-full": cmd_check,
        "aperture": cmd_aperture,
        "pipeline": cmd_pipeline,
        "lemmas": cmd_lemmas,
        "gallery": cmd_gallery,
    }
    return emit_report(handlers[cfg.command](cfg), cfg.output_path)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run(cfg)
    except CliError as exc:
        print(f"heiscone: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        # library validation of the loaded data (too few points, bad grid, ...)
        print(f"heiscone: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
