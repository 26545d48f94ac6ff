"""From the flat cone property at aperture alpha to the local full cone property at alpha/4.

:func:`run_theorem_pipeline` carries out the argument on a sampled surface,
one certificate per step, in this order:

``flat-check``
    the hypothesis, pairwise on the samples;
``common-domain``
    a centered rectangle ``[-eta0, eta0] x [-tau0, tau0]`` over which every
    ``shear(t, p^{-1} S)`` is a graph, for ``t`` in ``[-alpha/2, alpha/2]`` and
    base points ``p`` of S projecting into the rectangle;
``intersection-sweep``
    for every ``(t, p)`` and ``eta`` in ``[-eps, eps]``, a point ``(s eta, eta, 0)``
    of the transformed graph with ``|s| <= 2/alpha`` (plus reported slack), where
    ``eps = min(eta0, sqrt(tau0 alpha / 2))``;
``lemma-inclusion``
    the vertical set ``vC(alpha/4, 4 eps/alpha)`` lies in the intersection of
    the translated flat cones swept above;
``vertical-exclusion``
    no sample of ``shear(t, p^{-1} S)`` lies in that vertical set;
``shear-union``
    sheared vertical sets fill the truncated cone ``C(alpha/4, 4 eps/alpha)``;
``truncated-full``
    no sample of S lies in ``p C(alpha/4, 4 eps/alpha)``;
``local-full``
    the direct pairwise full-cone check at ``alpha/4`` on
    ``S`` near the center point. This last step does not use the others and is
    the oracle the rest must agree with.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .cones import ConeSpec, contains_arr
from .graphs import (
    FlatIntersection,
    GraphFunction,
    NotFound,
    NotRepresentable,
    PointCloud,
    Rect,
    Surface,
    epsilon_for,
    fit_surface,
    flat_intersections,
    graph_point,
    graph_surface,
    largest_centered_rect,
    reparameterize_surface,
)
from .group import Point, left_inverse_product_arr, project_arr
from .verifier import (
    FAIL,
    PASS,
    Certificate,
    bound_witness,
    check_flat_property,
    check_full_property,
    check_lemma_vertical_inclusion,
    check_shear_union_identity,
    membership_witness,
    strict_bound_witness,
)

log = logging.getLogger(__name__)


@dataclass
class PipelineGrids:
    n_t: int = 21
    n_p: int = 5
    n_eta: int = 101
    n_surface: int = 41
    n_raster: int = 21
    n_lemma_samples: int = 2000
    n_lemma_s: int = 41


@dataclass
class PipelineTols:
    tol: float = 1e-9
    root_tol: float = 1e-10
    rect_rel_tol: float = 1e-3


@dataclass
class PipelineReport:
    alpha_in: float
    v0: Optional[Rect]
    epsilon: Optional[float]
    per_stage: list[Certificate]
    center: list[float]
    neighborhood_radius: Optional[float] = None
    grids: dict = field(default_factory=dict)
    tols: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def alpha_out(self) -> float:
        return self.alpha_in / 4

    @property
    def passed(self) -> bool:
        return bool(self.per_stage) and all(c.passed for c in self.per_stage)

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def stage(self, name: str) -> Certificate:
        for c in self.per_stage:
            if c.check_name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "check": "pipeline",
            "status": self.status,
            "alpha_in": self.alpha_in,
            "alpha_out": self.alpha_out,
            "v0": None if self.v0 is None else {"eta0": self.v0.half_widths[0], "tau0": self.v0.half_widths[1]},
            "epsilon": self.epsilon,
            "center": self.center,
            "neighborhood": None
            if self.neighborhood_radius is None
            else {"center": self.center, "x_radius": self.neighborhood_radius, "within_v0": True},
            "grids": self.grids,
            "tols": self.tols,
            "seed": self.seed,
            "per_stage": [c.to_dict() for c in self.per_stage],
        }


def _center_of_cloud(cloud: PointCloud) -> np.ndarray:
    pts = cloud.points
    is_origin = np.all(pts == 0.0, axis=1)
    if is_origin.any():
        return pts[int(np.argmax(is_origin))]
    w = project_arr(pts)
    return pts[int(np.argmin(np.linalg.norm(w - w.mean(axis=0), axis=1)))]


def _pick_base_points(mesh: Surface, center: np.ndarray, half: tuple[float, float], n_p: int) -> np.ndarray:
    """Vertices nearest to an ``n_p x n_p`` grid around the center, center first."""
    w = project_arr(left_inverse_product_arr(center, mesh.vertices))
    nodes = Rect.centered(*half).raster(n_p) if n_p > 1 else np.zeros((1, 2))
    picked = [int(np.argmin(np.linalg.norm(w, axis=1)))]
    for node in nodes:
        i = int(np.argmin(np.linalg.norm(w - node, axis=1)))
        if i not in picked:
            picked.append(i)
    return mesh.vertices[picked]


def run_theorem_pipeline(
    surface: Union[GraphFunction, PointCloud],
    alpha: float,
    grids: Optional[PipelineGrids] = None,
    tols: Optional[PipelineTols] = None,
    seed: int = 0,
    center: Optional[Point] = None,
) -> PipelineReport:
    """Run every step of the flat-to-full argument on ``surface``; see the module docstring."""
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive and finite, got {alpha!r}")
    grids = grids or PipelineGrids()
    tols = tols or PipelineTols()
    tol = tols.tol
    stages: list[Certificate] = []

    if isinstance(surface, GraphFunction):
        mesh = graph_surface(surface, grids.n_surface, grids.n_surface)
        o = np.array(tuple(graph_point(surface, *surface.domain.center)))
        cloud_pts = mesh.vertices
    else:
        cloud_pts = surface.points
        o = _center_of_cloud(surface)
        mesh = None
    if center is not None:
        o = np.array(tuple(center), dtype=float)

    report = PipelineReport(
        alpha, None, None, stages, o.tolist(), grids=asdict(grids), tols=asdict(tols), seed=seed
    )

    # stage 0: hypothesis
    flat = check_flat_property(cloud_pts, alpha, tol)
    flat.check_name = "flat-check"
    stages.append(flat)
    if not flat.passed:
        return report

    # stage 1: common graph domain
    if mesh is None:
        try:
            mesh = fit_surface(surface)
        except NotRepresentable as exc:
            stages.append(_fail("common-domain", {"kind": "diagnostic", "message": str(exc)}, {}))
            return report
    w_all = project_arr(left_inverse_product_arr(o, mesh.vertices))
    reach = (2 * float(np.max(np.abs(w_all[:, 0]))), 2 * float(np.max(np.abs(w_all[:, 1]))))
    half_all = (float(np.max(np.abs(w_all[:, 0]))), float(np.max(np.abs(w_all[:, 1]))))
    t_grid = np.linspace(-alpha / 2, alpha / 2, grids.n_t)
    frac = 0.25
    rect: Optional[Rect] = None
    bases = np.empty((0, 3))
    params: dict = {"t_grid": [float(t_grid[0]), float(t_grid[-1]), int(len(t_grid))], "mesh_note": mesh.note}
    for _ in range(8):
        bases = _pick_base_points(mesh, o, (frac * half_all[0], frac * half_all[1]), grids.n_p)
        moved = [mesh.transformed(float(t), p) for p in bases for t in t_grid]
        folded = next((m for m in moved if m.is_folded()), None)
        if folded is not None:
            msg = "a transformed image folds over the projected plane"
            stages.append(_fail("common-domain", {"kind": "diagnostic", "message": msg}, params))
            return report
        if len(mesh.triangles) == 0:
            rect = Rect.centered(0.0, 0.0)
        else:
            rect = largest_centered_rect(moved, reach[0], reach[1], grids.n_raster, tols.rect_rel_tol)
        if rect.is_degenerate:
            break
        wb = project_arr(left_inverse_product_arr(o, bases))
        if np.all(rect.contains(wb[:, 0], wb[:, 1], slack=0.0)):
            break
        frac /= 2
    assert rect is not None
    eta0, tau0 = rect.half_widths
    params.update(
        eta0=eta0,
        tau0=tau0,
        n_base_points=int(len(bases)),
        base_fraction=frac,
        n_triangles=int(len(mesh.triangles)),
    )
    if rect.is_degenerate:
        w = strict_bound_witness(-min(eta0, tau0), 0.0, what="common rectangle half-widths must be positive")
        stages.append(_fail("common-domain", w, params))
        return report
    wb = project_arr(left_inverse_product_arr(o, bases))
    inside = rect.contains(wb[:, 0], wb[:, 1], slack=0.0)
    if not inside.all():
        i = int(np.argmin(inside))
        w = {"kind": "diagnostic", "message": "base point projects outside the common rectangle", "base": bases[i].tolist()}
        stages.append(_fail("common-domain", w, params))
        return report
    stages.append(Certificate("common-domain", PASS, None, params))
    report.v0 = rect

    # stage 2: epsilon
    beta = alpha / 2
    eps = epsilon_for(eta0, tau0, beta)
    report.epsilon = eps
    r_trunc = 4 * eps / alpha
    vertical = ConeSpec.vertical(alpha / 4, r_trunc)

    # stage 3 and 4 share the reparameterised graphs
    etas = np.linspace(-eps, eps, grids.n_eta)
    taus = np.linspace(-tau0, tau0, grids.n_eta)
    sweep_fail: Optional[dict] = None
    vert_fail: Optional[dict] = None
    max_s, max_slack = 0.0, 0.0
    n_roots = 0
    for i, p in enumerate(bases):
        for j, t in enumerate(t_grid):
            t = float(t)
            try:
                phi_tp = reparameterize_surface(
                    mesh, t, p, rect, n_check=grids.n_raster, moved=moved[i * len(t_grid) + j]
                )
            except NotRepresentable as exc:
                if sweep_fail is None:
                    sweep_fail = {"kind": "diagnostic", "message": str(exc), "t": t, "p": p.tolist()}
                continue
            lip = phi_tp.tau_lipschitz(grids.n_raster)
            results = flat_intersections(phi_tp, beta, etas, tols.root_tol, lip)
            for res in results:
                if isinstance(res, NotFound):
                    if sweep_fail is None:
                        sweep_fail = {
                            "kind": "any",
                            "message": str(res),
                            "t": t,
                            "p": p.tolist(),
                            "eta": res.eta,
                            "parts": [
                                strict_bound_witness(res.zeta_low, 0.0, what="zeta(eta, -tau0) < 0"),
                                strict_bound_witness(-res.zeta_high, 0.0, what="zeta(eta, tau0) > 0"),
                            ],
                        }
                    continue
                n_roots += 1
                bound = 2 / alpha + res.slack
                max_s = max(max_s, abs(res.s))
                max_slack = max(max_slack, res.slack)
                if abs(res.s) > bound and sweep_fail is None:
                    sweep_fail = bound_witness(
                        abs(res.s), bound, what="|s| <= 2/alpha + slack", t=t, p=p.tolist(), **_root_payload(res)
                    )
            if vert_fail is None:
                vert_fail = _vertical_violation(mesh, phi_tp, t, p, taus, vertical, tol)
    sweep_params = {
        "beta": beta,
        "epsilon": eps,
        "n_eta": grids.n_eta,
        "n_pairs_tp": int(len(bases) * len(t_grid)),
        "n_roots": n_roots,
        "root_tol": tols.root_tol,
        "ideal_bound": 2 / alpha,
        "max_abs_s": max_s,
        "max_slack": max_slack,
        "inflated_bound": 2 / alpha + max_slack,
    }
    stages.append(_cert("intersection-sweep", sweep_fail, sweep_params))

    lemma = check_lemma_vertical_inclusion(beta, eps, grids.n_lemma_samples, grids.n_lemma_s, tol, seed)
    lemma.check_name = "lemma-inclusion"
    stages.append(lemma)

    stages.append(
        _cert("vertical-exclusion", vert_fail, {"cone": vertical.to_dict(), "tol": tol, "n_section": grids.n_eta})
    )

    shear_cert = check_shear_union_identity(alpha / 4, r_trunc, grids.n_lemma_samples, tol, seed)
    stages.append(shear_cert)

    # stage 5: S misses p C(alpha/4, 4 eps/alpha) for every base point
    trunc = ConeSpec.truncated(alpha / 4, r_trunc)
    trunc_fail = None
    for i, p in enumerate(bases):
        hit = contains_arr(trunc, left_inverse_product_arr(p, cloud_pts), tol)
        if hit.any():
            j = int(np.argmax(hit))
            trunc_fail = membership_witness(p, trunc, cloud_pts[j], tol, True, base_index=i, q_index=j)
            break
    stages.append(_cert("truncated-full", trunc_fail, {"cone": trunc.to_dict(), "tol": tol, "n_bases": int(len(bases))}))

    # stage 6: the local full cone property, checked directly
    radius = 2 * eps / alpha
    report.neighborhood_radius = radius
    rel = left_inverse_product_arr(o, cloud_pts)
    wr = project_arr(rel)
    local = cloud_pts[rect.contains(wr[:, 0], wr[:, 1], slack=0.0)]
    oracle = check_full_property(local, alpha / 4, tol, restrict=(Point(*o), radius))
    oracle.check_name = "local-full"
    oracle.parameters["within_v0"] = rect.to_dict()
    stages.append(oracle)
    return report


def _root_payload(res: FlatIntersection) -> dict:
    return {"eta": res.eta, "tau": res.tau, "s": res.s, "residual": res.residual, "slack": res.slack}


def _vertical_violation(mesh, phi_tp: GraphFunction, t, p, taus, vertical: ConeSpec, tol: float) -> Optional[dict]:
    moved = mesh.transformed(t, p).vertices
    hit = contains_arr(vertical, moved, tol)
    if hit.any():
        j = int(np.argmax(hit))
        return membership_witness((0, 0, 0), vertical, moved[j], tol, True, t=t, p=p.tolist(), source="sample")
    # the eta = 0 section of the transformed graph is its trace on the plane y = 0
    xs = phi_tp(np.zeros_like(taus), taus)
    section = np.column_stack([xs, np.zeros_like(taus), taus])
    hit = contains_arr(vertical, section, tol)
    if hit.any():
        j = int(np.argmax(hit))
        return membership_witness((0, 0, 0), vertical, section[j], tol, True, t=t, p=p.tolist(), source="section")
    return None


def _cert(name: str, witness: Optional[dict], params: dict) -> Certificate:
    return Certificate(name, PASS if witness is None else FAIL, witness, params)


def _fail(name: str, witness: dict, params: dict) -> Certificate:
    return Certificate(name, FAIL, witness, params)
