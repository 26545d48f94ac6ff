"""Intrinsic graphs over rectangles and their sampled, triangulated versions.

A function ``phi`` on a rectangle of ``(eta, tau)`` values has the intrinsic graph

    {(phi, eta, tau - eta * phi / 2)} = {(0, eta, tau)(phi, 0, 0)},

and :func:`~heiscone.group.project` recovers ``(eta, tau)`` from a graph point.
Sampled surfaces are carried around as :class:`Surface`, a triangle mesh whose
vertices live in the group; images of a surface under left translations and
shears keep the triangles, which is how coverage of a rectangle and scattered
interpolation over the projected image are decided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import Delaunay, QhullError, cKDTree

from .group import (
    Point,
    as_points,
    left_inverse_product_arr,
    lift_arr,
    project_arr,
    shear_arr,
)

DUPLICATE_TOL = 1e-12


class DomainError(ValueError):
    """Raised when a graph function is evaluated outside its rectangle."""


class NotFound(LookupError):
    """The sign condition for the intersection with ``{z = 0}`` fails.

    ``zeta_low`` and ``zeta_high`` are the values at ``tau = -tau0`` and ``tau0``.
    """

    def __init__(self, message: str, eta: float = math.nan, zeta_low: float = math.nan, zeta_high: float = math.nan):
        super().__init__(message)
        self.eta = eta
        self.zeta_low = zeta_low
        self.zeta_high = zeta_high


class NotRepresentable(ValueError):
    """A transformed surface is not a graph over the requested rectangle."""


@dataclass(frozen=True)
class Rect:
    eta_min: float
    eta_max: float
    tau_min: float
    tau_max: float

    def __post_init__(self) -> None:
        vals = (self.eta_min, self.eta_max, self.tau_min, self.tau_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"rectangle bounds must be finite, got {vals}")
        if self.eta_min > self.eta_max or self.tau_min > self.tau_max:
            raise ValueError(f"rectangle bounds out of order: {vals}")

    @classmethod
    def centered(cls, eta0: float, tau0: float) -> Rect:
        return cls(-eta0, eta0, -tau0, tau0)

    @property
    def half_widths(self) -> tuple[float, float]:
        return (self.eta_max - self.eta_min) / 2, (self.tau_max - self.tau_min) / 2

    @property
    def center(self) -> tuple[float, float]:
        return (self.eta_min + self.eta_max) / 2, (self.tau_min + self.tau_max) / 2

    @property
    def is_degenerate(self) -> bool:
        return self.eta_max <= self.eta_min or self.tau_max <= self.tau_min

    def contains(self, eta, tau, slack: float = 1e-12):
        eta = np.asarray(eta)
        tau = np.asarray(tau)
        return (
            (eta >= self.eta_min - slack)
            & (eta <= self.eta_max + slack)
            & (tau >= self.tau_min - slack)
            & (tau <= self.tau_max + slack)
        )

    def grid(self, n_eta: int, n_tau: int) -> tuple[np.ndarray, np.ndarray]:
        return np.linspace(self.eta_min, self.eta_max, n_eta), np.linspace(self.tau_min, self.tau_max, n_tau)

    def raster(self, n: int) -> np.ndarray:
        """``n * n`` nodes of a regular grid on the closed rectangle, shape (n*n, 2)."""
        e, t = self.grid(n, n)
        E, T = np.meshgrid(e, t, indexing="ij")
        return np.column_stack([E.ravel(), T.ravel()])

    def to_dict(self) -> dict:
        return {"eta_min": self.eta_min, "eta_max": self.eta_max, "tau_min": self.tau_min, "tau_max": self.tau_max}


@dataclass(frozen=True)
class SurfaceGrid:
    """``phi`` sampled on a tensor grid: ``phi[i, j] = phi(eta_values[i], tau_values[j])``."""

    eta_values: np.ndarray
    tau_values: np.ndarray
    phi: np.ndarray

    def __post_init__(self) -> None:
        eta = np.asarray(self.eta_values, dtype=float)
        tau = np.asarray(self.tau_values, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if eta.ndim != 1 or tau.ndim != 1 or len(eta) < 2 or len(tau) < 2:
            raise ValueError("eta and tau grids need at least two nodes each")
        if np.any(np.diff(eta) <= 0) or np.any(np.diff(tau) <= 0):
            raise ValueError("grid values must be strictly increasing")
        if phi.shape != (len(eta), len(tau)):
            raise ValueError(f"phi has shape {phi.shape}, expected {(len(eta), len(tau))}")
        if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(tau)) and np.all(np.isfinite(phi))):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "eta_values", eta)
        object.__setattr__(self, "tau_values", tau)
        object.__setattr__(self, "phi", phi)

    @property
    def domain(self) -> Rect:
        return Rect(self.eta_values[0], self.eta_values[-1], self.tau_values[0], self.tau_values[-1])


class GraphFunction:
    """A continuous real function on a closed rectangle.

    ``func`` must accept numpy arrays ``(eta, tau)`` of equal shape and return an
    array of that shape. Evaluation outside the rectangle raises DomainError.
    """

    def __init__(self, domain: Rect, func: Callable[[np.ndarray, np.ndarray], np.ndarray], name: str = "phi"):
        if domain.is_degenerate:
            raise ValueError(f"graph domain must have interior, got {domain}")
        self.domain = domain
        self._func = func
        self.name = name

    def __repr__(self) -> str:
        return f"GraphFunction({self.name}, {self.domain})"

    def __call__(self, eta, tau):
        eta_a = np.asarray(eta, dtype=float)
        tau_a = np.asarray(tau, dtype=float)
        eta_a, tau_a = np.broadcast_arrays(eta_a, tau_a)
        if not np.all(self.domain.contains(eta_a, tau_a)):
            raise DomainError(f"({eta}, {tau}) outside {self.domain}")
        out = np.asarray(self._func(eta_a, tau_a), dtype=float)
        out = np.broadcast_to(out, eta_a.shape)
        if out.ndim == 0:
            return float(out)
        return out.copy()

    @classmethod
    def constant(cls, c: float, domain: Rect) -> GraphFunction:
        return cls(domain, lambda e, t: np.full(np.shape(e), float(c)), name=f"constant({c})")

    @classmethod
    def linear(cls, slope: float, domain: Rect) -> GraphFunction:
        return cls(domain, lambda e, t: slope * e, name=f"linear({slope})")

    @classmethod
    def from_grid(cls, grid: SurfaceGrid) -> GraphFunction:
        """Bilinear interpolation of a sampled grid."""
        interp = RegularGridInterpolator((grid.eta_values, grid.tau_values), grid.phi, method="linear")

        def f(e, t):
            e_c = np.clip(e, grid.eta_values[0], grid.eta_values[-1])
            t_c = np.clip(t, grid.tau_values[0], grid.tau_values[-1])
            return interp(np.stack([e_c, t_c], axis=-1))

        return cls(grid.domain, f, name="bilinear")

    def to_grid(self, n_eta: int, n_tau: int) -> SurfaceGrid:
        e, t = self.domain.grid(n_eta, n_tau)
        E, T = np.meshgrid(e, t, indexing="ij")
        return SurfaceGrid(e, t, self(E, T))

    def tau_lipschitz(self, n: int = 41) -> float:
        """Finite-difference estimate of the Lipschitz constant in ``tau``."""
        e, t = self.domain.grid(n, n)
        E, T = np.meshgrid(e, t, indexing="ij")
        vals = self(E, T)
        return float(np.max(np.abs(np.diff(vals, axis=1)) / np.diff(t)[None, :]))


@dataclass(frozen=True)
class PointCloud:
    """A finite set of points; entries closer than ``DUPLICATE_TOL`` collapse."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = as_points(self.points).reshape(-1, 3)
        object.__setattr__(self, "points", _collapse_duplicates(pts))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return (Point(*row) for row in self.points)

    @classmethod
    def from_points(cls, pts: Sequence[Point]) -> PointCloud:
        return cls(np.array([tuple(p) for p in pts], dtype=float).reshape(-1, 3))

    def map(self, f: Callable[[np.ndarray], np.ndarray]) -> PointCloud:
        return PointCloud(f(self.points))


def _collapse_duplicates(pts: np.ndarray) -> np.ndarray:
    if len(pts) < 2:
        return pts.copy()
    pairs = cKDTree(pts).query_pairs(DUPLICATE_TOL, p=np.inf, output_type="ndarray")
    if len(pairs) == 0:
        return pts.copy()
    drop = np.zeros(len(pts), dtype=bool)
    drop[np.max(pairs, axis=1)] = True
    # a chain a~b~c keeps a only; the later index of every pair goes
    return pts[~drop]


# -- pointwise graph maps ---------------------------------------------------


def graph_point(phi: GraphFunction, eta: float, tau: float) -> Point:
    x = phi(eta, tau)
    return Point(x, eta, tau - eta * x / 2)


def graph_points(phi: GraphFunction, eta, tau) -> np.ndarray:
    x = np.asarray(phi(eta, tau))
    return lift_arr(np.stack(np.broadcast_arrays(np.asarray(eta, float), np.asarray(tau, float)), axis=-1), x)


def zeta(phi: GraphFunction, eta, tau):
    """Height ``tau - eta * phi(eta, tau) / 2`` of the graph point over ``(eta, tau)``."""
    out = np.asarray(tau, dtype=float) - np.asarray(eta, dtype=float) * np.asarray(phi(eta, tau)) / 2
    return float(out) if out.ndim == 0 else out


def sample_graph(phi: GraphFunction, n_eta: int, n_tau: int) -> PointCloud:
    if n_eta < 2 or n_tau < 2:
        raise ValueError("sample_graph needs at least two nodes per axis")
    return PointCloud(graph_surface(phi, n_eta, n_tau).vertices)


# -- intersection with {z = 0} ----------------------------------------------


@dataclass(frozen=True)
class FlatIntersection:
    """A point ``(s * eta, eta, ~0)`` of the graph found by bisection.

    ``slack`` bounds how far ``s`` can sit from the slope at the exact root:
    the root lies inside the final bracket, and ``phi`` moves by at most
    ``lipschitz * bracket`` across it.
    """

    eta: float
    tau: float
    s: float
    residual: float
    bracket: float
    iterations: int
    slack: float


def epsilon_for(eta0: float, tau0: float, beta: float) -> float:
    """Half-width of the eta range where the sign condition is guaranteed."""
    return min(eta0, math.sqrt(tau0 * beta))


def flat_intersection(
    phi: GraphFunction,
    beta: float,
    eta: float,
    root_tol: float = 1e-10,
    lipschitz: Optional[float] = None,
) -> FlatIntersection:
    """Bisect ``zeta(eta, .)`` on ``[-tau0, tau0]`` for a zero.

    ``phi`` must live on a centered rectangle ``[-eta0, eta0] x [-tau0, tau0]``
    and ``|eta|`` may not exceed ``min(eta0, sqrt(tau0 * beta))``. Raises
    NotFound when ``zeta(eta, -tau0) < 0 < zeta(eta, tau0)`` fails.
    """
    res = flat_intersections(phi, beta, np.array([float(eta)]), root_tol, lipschitz)
    if isinstance(res[0], NotFound):
        raise res[0]
    return res[0]


def flat_intersections(
    phi: GraphFunction,
    beta: float,
    etas: np.ndarray,
    root_tol: float = 1e-10,
    lipschitz: Optional[float] = None,
    max_iter: int = 200,
) -> list:
    """Vectorised :func:`flat_intersection`; failures come back as NotFound instances."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    if not root_tol > 0:
        raise ValueError(f"root_tol must be positive, got {root_tol!r}")
    dom = phi.domain
    eta0, tau0 = dom.half_widths
    if abs(dom.center[0]) > 1e-12 * max(1.0, eta0) or abs(dom.center[1]) > 1e-12 * max(1.0, tau0):
        raise ValueError(f"flat_intersection needs a centered domain, got {dom}")
    eps = epsilon_for(eta0, tau0, beta)
    etas = np.asarray(etas, dtype=float).ravel()
    too_far = np.abs(etas) > eps * (1 + 1e-12)
    if lipschitz is None:
        lipschitz = phi.tau_lipschitz()

    etas_c = np.clip(etas, -eta0, eta0)
    lo = np.full(etas.shape, -tau0)
    hi = np.full(etas.shape, tau0)
    z_lo = zeta(phi, etas_c, lo)
    z_hi = zeta(phi, etas_c, hi)
    bracketed = (z_lo < 0) & (z_hi > 0) & ~too_far

    active = bracketed.copy()
    iters = np.zeros(etas.shape, dtype=int)
    mid = (lo + hi) / 2
    z_mid = np.zeros(etas.shape)
    for _ in range(max_iter):
        if not active.any():
            break
        mid = (lo + hi) / 2
        z_mid = zeta(phi, etas_c, mid)
        done = (hi - lo < root_tol) & (np.abs(z_mid) <= root_tol)
        stuck = (mid <= lo) | (mid >= hi)
        active &= ~(done | stuck)
        go_up = active & (z_mid < 0)
        go_down = active & (z_mid >= 0)
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_down, mid, hi)
        iters += active
    mid = (lo + hi) / 2
    z_mid = zeta(phi, etas_c, mid)
    phi_mid = phi(etas_c, mid)

    out: list = []
    for i, e in enumerate(etas):
        if not bracketed[i]:
            reason = (
                f"|eta|={abs(e):.6g} exceeds epsilon={eps:.6g}"
                if too_far[i]
                else f"sign condition fails: zeta(eta,-tau0)={z_lo[i]:.6g}, zeta(eta,tau0)={z_hi[i]:.6g}"
            )
            out.append(NotFound(reason, float(e), float(z_lo[i]), float(z_hi[i])))
            continue
        width = float(hi[i] - lo[i])
        if e == 0.0:
            s, slack = 0.0, 0.0
        else:
            s = float(phi_mid[i] / e)
            slack = float(lipschitz * width / abs(e))
        out.append(FlatIntersection(float(e), float(mid[i]), s, float(z_mid[i]), width, int(iters[i]), slack))
    return out


# -- triangulated surfaces --------------------------------------------------


class TriangleLocator:
    """Point location in a planar triangle soup, bucketed on a uniform grid.

    Points on an edge count as inside (barycentric slack ``1e-12``). When
    triangles overlap, the lowest triangle index wins.
    """

    def __init__(self, w: np.ndarray, triangles: np.ndarray, slack: float = 1e-12):
        self.slack = slack
        a, b, c = w[triangles[:, 0]], w[triangles[:, 1]], w[triangles[:, 2]]
        self.a = a
        e1, e2 = b - a, c - a
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        with np.errstate(divide="ignore"):
            inv = np.where(det != 0, 1.0 / np.where(det != 0, det, 1.0), 0.0)
        # rows of the inverse of [e1 e2], so (l1, l2) = M (q - a)
        self.m = np.stack([np.stack([e2[:, 1], -e2[:, 0]], 1), np.stack([-e1[:, 1], e1[:, 0]], 1)], 1) * inv[:, None, None]
        self.degenerate = det == 0
        lo = np.minimum(np.minimum(a, b), c)
        hi = np.maximum(np.maximum(a, b), c)
        self.origin = lo.min(axis=0)
        extent = np.maximum(hi.max(axis=0) - self.origin, 1e-300)
        self.nb = nb = max(1, int(math.sqrt(len(triangles))))
        self.size = extent / nb
        i0 = np.clip(np.floor((lo - self.origin) / self.size).astype(int), 0, nb - 1)
        i1 = np.clip(np.floor((hi - self.origin) / self.size).astype(int), 0, nb - 1)
        span = i1 - i0 + 1
        counts = span[:, 0] * span[:, 1]
        tri_ids = np.repeat(np.arange(len(triangles)), counts)
        k = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        ny = np.repeat(span[:, 1], counts)
        cx = np.repeat(i0[:, 0], counts) + k // ny
        cy = np.repeat(i0[:, 1], counts) + k % ny
        cell = cx * nb + cy
        order = np.lexsort((tri_ids, cell))
        self.cell_tris = tri_ids[order]
        self.starts = np.searchsorted(cell[order], np.arange(nb * nb + 1))

    def find(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Triangle index per point (-1 if none) and barycentric ``(l1, l2)``."""
        q = np.asarray(q, dtype=float).reshape(-1, 2)
        n = len(q)
        found = np.full(n, -1)
        bary = np.zeros((n, 2))
        rel = (q - self.origin) / self.size
        cell_xy = np.floor(rel).astype(int)
        # points on the far edge of the bounding box belong to the last cell
        cell_xy = np.where((rel >= self.nb) & (rel <= self.nb * (1 + 1e-12)), self.nb - 1, cell_xy)
        valid = np.all((cell_xy >= 0) & (cell_xy < self.nb), axis=1)
        idx = np.flatnonzero(valid)
        if idx.size == 0:
            return found, bary
        cell = cell_xy[idx, 0] * self.nb + cell_xy[idx, 1]
        s0, s1 = self.starts[cell], self.starts[cell + 1]
        counts = s1 - s0
        pt = np.repeat(idx, counts)
        k = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        tri = self.cell_tris[np.repeat(s0, counts) + k]
        d = q[pt] - self.a[tri]
        lam = np.einsum("kij,kj->ki", self.m[tri], d)
        eps = self.slack
        inside = (
            ~self.degenerate[tri] & (lam[:, 0] >= -eps) & (lam[:, 1] >= -eps) & (lam[:, 0] + lam[:, 1] <= 1 + eps)
        )
        pt, tri, lam = pt[inside], tri[inside], lam[inside]
        # candidates come sorted by point, then triangle index
        first = np.unique(pt, return_index=True)[1]
        found[pt[first]] = tri[first]
        bary[pt[first]] = lam[first]
        return found, bary


@dataclass
class Surface:
    """Vertices in the group plus triangles that record which samples are adjacent.

    ``triangles`` may be empty, in which case the surface covers nothing in the
    projected plane (a curve, an isolated point set).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    note: str = ""
    _locator: Optional[TriangleLocator] = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        self.vertices = as_points(self.vertices).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=int).reshape(-1, 3)

    def transformed(self, t: float, p) -> Surface:
        """The surface ``shear(t, p^{-1} S)`` with the same connectivity."""
        moved = shear_arr(t, left_inverse_product_arr(np.asarray(tuple(p), dtype=float), self.vertices))
        return Surface(moved, self.triangles, self.note)

    @property
    def projected(self) -> np.ndarray:
        return project_arr(self.vertices)

    def locator(self) -> Optional[TriangleLocator]:
        if len(self.triangles) == 0:
            return None
        if self._locator is None:
            self._locator = TriangleLocator(self.projected, self.triangles)
        return self._locator

    def signed_areas(self) -> np.ndarray:
        w = self.projected
        a, b, c = w[self.triangles[:, 0]], w[self.triangles[:, 1]], w[self.triangles[:, 2]]
        return ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])) / 2

    def is_folded(self) -> bool:
        """True when the projected triangles do not all keep one orientation."""
        if len(self.triangles) == 0:
            return False
        areas = self.signed_areas()
        return not (np.all(areas > 0) or np.all(areas < 0))

    def covers(self, w: np.ndarray) -> np.ndarray:
        """Which planar points lie in the projected image of some triangle."""
        w = np.asarray(w, dtype=float).reshape(-1, 2)
        loc = self.locator()
        if loc is None:
            return np.zeros(len(w), dtype=bool)
        return loc.find(w)[0] >= 0

    def interpolate_x(self, w: np.ndarray) -> np.ndarray:
        """Piecewise-linear interpolation of the x coordinate over the projected mesh.

        NaN where the point is not covered.
        """
        w = np.asarray(w, dtype=float)
        shape = w.shape[:-1]
        loc = self.locator()
        if loc is None:
            return np.full(shape, np.nan)
        tri, lam = loc.find(w.reshape(-1, 2))
        out = np.full(len(tri), np.nan)
        ok = tri >= 0
        corners = self.vertices[self.triangles[tri[ok]], 0]
        l1, l2 = lam[ok, 0], lam[ok, 1]
        out[ok] = (1 - l1 - l2) * corners[:, 0] + l1 * corners[:, 1] + l2 * corners[:, 2]
        return out.reshape(shape)


def grid_triangles(n_eta: int, n_tau: int) -> np.ndarray:
    """Two triangles per cell of a row-major ``n_eta x n_tau`` vertex grid."""
    i, j = np.meshgrid(np.arange(n_eta - 1), np.arange(n_tau - 1), indexing="ij")
    a = (i * n_tau + j).ravel()
    b = a + n_tau
    return np.concatenate([np.column_stack([a, b, b + 1]), np.column_stack([a, b + 1, a + 1])])


def graph_surface(phi: GraphFunction, n_eta: int, n_tau: int) -> Surface:
    e, t = phi.domain.grid(n_eta, n_tau)
    E, T = np.meshgrid(e, t, indexing="ij")
    verts = graph_points(phi, E, T).reshape(-1, 3)
    return Surface(verts, grid_triangles(n_eta, n_tau), note=f"{phi.name} on {n_eta}x{n_tau} grid")


def fit_surface(cloud: PointCloud, edge_factor: float = 3.0) -> Surface:
    """Triangulate a cloud over its projected image.

    Raises NotRepresentable when two points share a projection (the cloud is
    not a graph). A cloud whose projection has no area, such as a curve, comes
    back with no triangles.
    """
    pts = cloud.points
    w = project_arr(pts)
    if len(pts) >= 2:
        pairs = cKDTree(w).query_pairs(DUPLICATE_TOL, p=np.inf, output_type="ndarray")
        if len(pairs):
            i, j = (int(v) for v in pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))][0])
            raise NotRepresentable(
                f"points {i} and {j} project to the same (eta, tau) = {w[i].tolist()}; the cloud is not a graph"
            )
    if len(pts) < 3:
        return Surface(pts, np.empty((0, 3), dtype=int), note="fewer than 3 points")
    try:
        dt = Delaunay(w)
    except QhullError:
        return Surface(pts, np.empty((0, 3), dtype=int), note="projection is degenerate (no planar extent)")
    tris = dt.simplices
    a, b, c = w[tris[:, 0]], w[tris[:, 1]], w[tris[:, 2]]
    edges = np.stack([np.linalg.norm(b - a, axis=1), np.linalg.norm(c - b, axis=1), np.linalg.norm(a - c, axis=1)], 1)
    longest = edges.max(axis=1)
    area = np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])) / 2
    typical = np.median(edges)
    # drop hull-filling triangles and slivers that only join distant samples
    keep = (longest <= edge_factor * typical) & (area > 1e-9 * longest**2)
    tris = tris[keep]
    # orient every triangle counter-clockwise in the projected plane
    a, b, c = w[tris[:, 0]], w[tris[:, 1]], w[tris[:, 2]]
    cw = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]) < 0
    tris[cw] = tris[cw][:, [0, 2, 1]]
    note = "" if len(tris) else "projection has no planar extent at sampling scale"
    return Surface(pts, tris, note=note)


# -- transformed graphs and their common domain -----------------------------


def _surface_on_graph(phi: GraphFunction, p: Point, tol: float) -> None:
    w = project_arr(np.array(tuple(p)))
    eta, tau = float(w[0]), float(w[1])
    if not phi.domain.contains(eta, tau):
        raise ValueError(f"{p} does not project into the domain of {phi.name}")
    x = phi(eta, tau)
    if abs(x - p.x) > tol:
        raise ValueError(f"{p} is not on the graph of {phi.name} (phi={x!r})")


def reparameterize_surface(
    surface: Surface, t: float, p, target: Rect, n_check: int = 41, moved: Optional[Surface] = None
) -> GraphFunction:
    """Describe ``shear(t, p^{-1} S)`` as a graph over ``target``.

    ``moved`` may pass in the already transformed surface. Raises
    NotRepresentable when the transformed mesh folds or does not cover every
    node of an ``n_check x n_check`` raster of ``target``.
    """
    if moved is None:
        moved = surface.transformed(t, p)
    if moved.is_folded():
        raise NotRepresentable(f"image under t={t}, p={tuple(p)} folds over the projected plane")
    nodes = target.raster(n_check)
    covered = moved.covers(nodes)
    if not covered.all():
        first = nodes[int(np.argmin(covered))]
        raise NotRepresentable(
            f"image under t={t}, p={tuple(p)} does not cover {target}; first uncovered node {first.tolist()}"
        )

    def f(e, tau):
        w = np.stack([e, tau], axis=-1)
        vals = moved.interpolate_x(w)
        if np.isnan(vals).any():
            # points on the raster boundary can fall between float-rounded triangles
            bad = np.isnan(vals)
            vals[bad] = _nearest_x(moved, w[bad])
        return vals

    px, py, pz = (float(v) for v in tuple(p))
    return GraphFunction(target, f, name=f"reparam(t={t:.6g}, p=({px:.6g},{py:.6g},{pz:.6g}))")


def _nearest_x(surface: Surface, w: np.ndarray) -> np.ndarray:
    tree = cKDTree(surface.projected)
    _, idx = tree.query(w.reshape(-1, 2))
    return surface.vertices[idx, 0]


def reparameterize(
    phi: GraphFunction, t: float, p: Point, target: Rect, n_dense: int = 81, tol: float = 1e-9
) -> GraphFunction:
    """Graph function of ``shear(t, p^{-1} Gamma_phi)`` over ``target``.

    ``Gamma_phi`` is resampled on an ``n_dense`` grid, moved, and ``x`` is
    interpolated linearly over the projected triangles.
    """
    _surface_on_graph(phi, p, tol)
    return reparameterize_surface(graph_surface(phi, n_dense, n_dense), t, p, target)


def largest_centered_rect(
    surfaces: Sequence[Surface],
    eta_max: float,
    tau_max: float,
    n_raster: int = 21,
    rel_tol: float = 1e-3,
    min_scale: float = 1e-6,
) -> Rect:
    """Largest centered rectangle inside every surface's projected image.

    The half-widths are first scaled together (keeping the aspect of
    ``eta_max : tau_max``), then each is grown on its own; all three steps are
    binary searches. A rectangle counts as covered when all nodes of its
    ``n_raster x n_raster`` raster are covered. Returns ``Rect.centered(0, 0)``
    when no positive scale works.
    """

    def ok(eta0: float, tau0: float) -> bool:
        if eta0 <= 0 or tau0 <= 0:
            return False
        nodes = Rect.centered(eta0, tau0).raster(n_raster)
        return all(s.covers(nodes).all() for s in surfaces)

    def search(pred, lo: float, hi: float) -> float:
        # largest x in [lo, hi] with pred(x), given pred(lo) (or lo == 0)
        if pred(hi):
            return hi
        floor = min_scale * hi
        while hi - lo > rel_tol * hi and hi > floor:
            mid = (lo + hi) / 2
            if pred(mid):
                lo = mid
            else:
                hi = mid
        return lo

    lam = search(lambda s: ok(s * eta_max, s * tau_max), 0.0, 1.0)
    if lam <= 0:
        return Rect.centered(0.0, 0.0)
    eta0, tau0 = lam * eta_max, lam * tau_max
    eta0 = search(lambda e: ok(e, tau0), eta0, eta_max)
    tau0 = search(lambda t: ok(eta0, t), tau0, tau_max)
    return Rect.centered(eta0, tau0)


def common_domain(
    phi: GraphFunction,
    alpha: float,
    base_points: Sequence[Point],
    t_grid: Sequence[float],
    n_dense: int = 41,
    n_raster: int = 21,
    tol: float = 1e-9,
) -> Rect:
    """Centered rectangle covered by the projection of every ``shear(t, p^{-1} Gamma_phi)``.

    Empty (zero half-widths) when the images share no centered rectangle.
    """
    if any(abs(t) > alpha / 2 + 1e-12 for t in t_grid):
        raise ValueError(f"t_grid must lie in [-{alpha / 2}, {alpha / 2}]")
    for p in base_points:
        _surface_on_graph(phi, p, tol)
    surf = graph_surface(phi, n_dense, n_dense)
    moved = [surf.transformed(t, p) for p in base_points for t in t_grid]
    eta_half, tau_half = phi.domain.half_widths
    d = phi.domain
    eta_reach = max(abs(d.eta_min), abs(d.eta_max), eta_half)
    tau_reach = max(abs(d.tau_min), abs(d.tau_max), tau_half)
    return largest_centered_rect(moved, 2 * eta_reach, 2 * tau_reach, n_raster)
