"""Pairwise cone-property checkers and sampled checks of the cone inclusions.

Every check returns a :class:`Certificate`. A failing certificate carries a
witness that :meth:`Certificate.replay` can re-evaluate on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .cones import ConeSpec, contains_arr, contains_translated, inequality_report
from .group import Point, as_points, left_inverse_product_arr, rotate_z_arr, shear_arr
from .graphs import PointCloud

PASS = "pass"
FAIL = "fail"

# rows of base points handled per vectorised block in pairwise loops
_BLOCK = 256


@dataclass
class Certificate:
    check_name: str
    status: str
    witness: Optional[dict] = None
    parameters: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status not in (PASS, FAIL):
            raise ValueError(f"status must be 'pass' or 'fail', got {self.status!r}")
        if self.status == FAIL and self.witness is None:
            raise ValueError("a failing certificate needs a witness")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {
            "check": self.check_name,
            "status": self.status,
            "parameters": self.parameters,
            "witness": self.witness,
        }

    def replay(self) -> bool:
        """Re-evaluate the witness; True when the recorded violation reproduces."""
        if self.witness is None:
            raise ValueError("passing certificates have no witness to replay")
        return replay_witness(self.witness)


def replay_witness(w: dict) -> bool:
    kind = w.get("kind")
    if kind == "membership":
        cone = ConeSpec.from_dict(w["cone"])
        got = contains_translated(Point(*w["base"]), cone, Point(*w["point"]), w["tol"])
        return got == w["expected_member"]
    if kind == "bound":
        return w["value"] > w["bound"]
    if kind == "all":
        return all(replay_witness(sub) for sub in w["parts"])
    if kind == "any":
        return any(replay_witness(sub) for sub in w["parts"])
    raise ValueError(f"witness kind {kind!r} cannot be replayed")


def membership_witness(base, cone: ConeSpec, point, tol: float, expected_member: bool, **extra) -> dict:
    base_p = Point(*map(float, base))
    pt = Point(*map(float, point))
    rel = left_inverse_product_arr(np.array(tuple(base_p)), np.array(tuple(pt)))
    w = {
        "kind": "membership",
        "base": list(base_p),
        "point": list(pt),
        "base_inv_point": rel.tolist(),
        "cone": cone.to_dict(),
        "tol": tol,
        "expected_member": expected_member,
        "inequalities": inequality_report(cone, Point(*rel), tol),
    }
    w.update(extra)
    return w


def bound_witness(value: float, bound: float, **extra) -> dict:
    w = {"kind": "bound", "value": value, "bound": bound}
    w.update(extra)
    return w


def strict_bound_witness(value: float, bound: float, **extra) -> dict:
    """Witness for a failed ``value < bound``; replays as ``value > prev(bound)``."""
    return bound_witness(value, math.nextafter(bound, -math.inf), required_strictly_below=bound, **extra)


def _cloud_array(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    return as_points(cloud).reshape(-1, 3)


def first_pair_in_cone(pts: np.ndarray, cone: ConeSpec, tol: float) -> Optional[tuple[int, int]]:
    """Smallest ``(i, j)``, row-major, with ``i != j`` and ``p_i^{-1} p_j`` in ``cone``.

    This naive O(N^2) scan is the trusted reference; pruning structures can be
    layered on top as long as they report the same first pair.
    """
    n = len(pts)
    for start in range(0, n, _BLOCK):
        rows = pts[start : start + _BLOCK]
        rel = left_inverse_product_arr(rows[:, None, :], pts[None, :, :])
        hit = contains_arr(cone, rel, tol)
        idx = np.arange(start, start + len(rows))
        hit[np.arange(len(rows)), idx] = False
        if hit.any():
            i, j = np.unravel_index(int(np.argmax(hit)), hit.shape)
            return int(start + i), int(j)
    return None


def _pair_check(name: str, pts: np.ndarray, cone: ConeSpec, tol: float, params: dict) -> Certificate:
    found = first_pair_in_cone(pts, cone, tol)
    params = dict(params, n_points=int(len(pts)), n_ordered_pairs=int(len(pts) * max(len(pts) - 1, 0)))
    if found is None:
        return Certificate(name, PASS, None, params)
    i, j = found
    witness = membership_witness(pts[i], cone, pts[j], tol, True, p_index=i, q_index=j)
    return Certificate(name, FAIL, witness, params)


def check_flat_property(cloud, alpha: float, tol: float = 1e-9) -> Certificate:
    """Pass iff no ordered pair ``(p, q)`` of distinct points has ``p^{-1} q`` in the flat cone."""
    pts = _cloud_array(cloud)
    cone = ConeSpec.flat(alpha)
    return _pair_check("flat", pts, cone, tol, {"alpha": alpha, "tol": tol})


def check_full_property(
    cloud,
    alpha: float,
    tol: float = 1e-9,
    restrict: Optional[tuple[Point, float]] = None,
) -> Certificate:
    """Pairwise check against the full cone.

    With ``restrict=(o, r)`` only points of ``o * {|x| < r}`` take part, both as
    base points and as targets; this is the local form of the property.
    """
    pts = _cloud_array(cloud)
    cone = ConeSpec.full(alpha)
    params: dict[str, Any] = {"alpha": alpha, "tol": tol, "restrict": None}
    if restrict is not None:
        base, radius = restrict
        rel = left_inverse_product_arr(np.array(tuple(base), dtype=float), pts)
        keep = np.abs(rel[:, 0]) < radius
        pts = pts[keep]
        params["restrict"] = {"base": list(map(float, base)), "radius": float(radius)}
    return _pair_check("full", pts, cone, tol, params)


def check_full_at_base(cloud, base, alpha: float, tol: float = 1e-9) -> Certificate:
    """Full-cone check with the single base point ``base``: no other ``q`` in ``base * C(alpha)``."""
    pts = _cloud_array(cloud)
    cone = ConeSpec.full(alpha)
    b = np.array(tuple(base), dtype=float)
    hit = contains_arr(cone, left_inverse_product_arr(b, pts), tol)
    params = {"alpha": alpha, "tol": tol, "base": b.tolist(), "n_points": int(len(pts))}
    if not hit.any():
        return Certificate("full-at-base", PASS, None, params)
    j = int(np.argmax(hit))
    return Certificate("full-at-base", FAIL, membership_witness(b, cone, pts[j], tol, True, q_index=j), params)


def max_flat_aperture(cloud, tol: float = 1e-9) -> float:
    """Supremum of apertures at which :func:`check_flat_property` passes.

    Only pairs whose relative position has ``|z| <= tol`` and ``x != 0``
    constrain it; the result is the least ``|y| / |x|`` over those, or
    ``inf`` when there are none. Pairs with ``x == 0`` never enter a flat cone.
    """
    pts = _cloud_array(cloud)
    if len(pts) < 2:
        raise ValueError("max_flat_aperture needs at least two points")
    best = math.inf
    n = len(pts)
    for start in range(0, n, _BLOCK):
        rows = pts[start : start + _BLOCK]
        rel = left_inverse_product_arr(rows[:, None, :], pts[None, :, :])
        x, y, z = rel[..., 0], rel[..., 1], rel[..., 2]
        mask = (np.abs(z) <= tol) & (x != 0)
        mask[np.arange(len(rows)), np.arange(start, start + len(rows))] = False
        if mask.any():
            best = min(best, float(np.min(np.abs(y[mask]) / np.abs(x[mask]))))
    return best


def rotation_angles(n_angles: int) -> np.ndarray:
    """``n_angles`` uniform angles covering a half turn, folded into ``(-pi/2, pi/2]``.

    A half turn suffices: rotating by pi maps every cone around the x axis to itself.
    """
    if n_angles < 1:
        raise ValueError("n_angles must be at least 1")
    theta = np.arange(n_angles) * math.pi / n_angles
    return np.where(theta > math.pi / 2, theta - math.pi, theta)


def best_rotation_aperture(cloud, n_angles: int = 180, tol: float = 1e-9) -> tuple[float, float]:
    """Rotation about the z axis that maximises :func:`max_flat_aperture`.

    Ties go to the smallest ``|theta|`` and then to the non-negative angle.
    """
    pts = _cloud_array(cloud)
    best: Optional[tuple[float, float]] = None
    for theta in rotation_angles(n_angles):
        a = max_flat_aperture(rotate_z_arr(float(theta), pts), tol)
        if best is None:
            best = (float(theta), a)
            continue
        bt, ba = best
        if a > ba or (a == ba and (abs(theta) < abs(bt) or (abs(theta) == abs(bt) and theta > bt))):
            best = (float(theta), a)
    assert best is not None
    return best


# -- sampled checks of the cone inclusions ----------------------------------


def _interior_s_values(beta: float, n_s: int) -> np.ndarray:
    k = np.arange(1, n_s + 1)
    return (-1 + 2 * k / (n_s + 1)) / beta


def check_lemma_vertical_inclusion(
    beta: float,
    epsilon: float,
    n_samples: int = 10_000,
    n_s: int = 101,
    tol: float = 1e-9,
    seed: int = 0,
) -> Certificate:
    """Sampled check that ``vC(beta/2, 2 eps/beta)`` lies in the intersection of flat cones.

    Each sample ``(x, 0, u x^2/2)`` is tested against ``(s eta, eta, 0) fC(beta)``
    with ``eta = -u x`` for ``n_s`` values of ``s`` inside ``(-1/beta, 1/beta)``.
    The margin ``tol`` is carried into the flat cone's own inequality: samples
    keep ``|u| < beta/2 - max(tol, tol/(2|x|))`` so the worst ``s`` still clears it.
    """
    if n_samples < 1 or n_s < 1:
        raise ValueError("sample counts must be at least 1")
    rng = np.random.default_rng(seed)
    r = 2 * epsilon / beta
    xs, us = _rejection(
        rng,
        n_samples,
        lambda m: rng.uniform(-(r - tol), r - tol, m),
        lambda x, m: rng.uniform(-1, 1, m) * (beta / 2 - np.maximum(tol, tol / (2 * np.abs(x)))),
        lambda x, u: (x != 0) & (np.abs(u) < beta / 2 - np.maximum(tol, tol / (2 * np.abs(x)))),
    )
    points = np.column_stack([xs, np.zeros_like(xs), us * xs**2 / 2])
    etas = -us * xs
    s_values = _interior_s_values(beta, n_s)
    cone = ConeSpec.flat(beta)
    params = {
        "beta": beta,
        "epsilon": epsilon,
        "vertical_aperture": beta / 2,
        "vertical_radius": r,
        "n_samples": n_samples,
        "n_s": n_s,
        "tol": tol,
        "seed": seed,
    }
    eta_ok = np.abs(etas) < epsilon
    if not eta_ok.all():
        i = int(np.argmin(eta_ok))
        w = strict_bound_witness(float(abs(etas[i])), epsilon, what="|eta| < epsilon", point=points[i].tolist())
        return Certificate("lemma-vertical-inclusion", FAIL, w, params)
    for s in s_values:
        bases = np.column_stack([s * etas, etas, np.zeros_like(etas)])
        ok = contains_arr(cone, left_inverse_product_arr(bases, points), tol)
        if not ok.all():
            i = int(np.argmin(ok))
            w = membership_witness(bases[i], cone, points[i], tol, False, s=float(s), eta=float(etas[i]), u=float(us[i]))
            return Certificate("lemma-vertical-inclusion", FAIL, w, params)
    return Certificate("lemma-vertical-inclusion", PASS, None, params)


def _rejection(rng, n, draw_x, draw_u, accept, max_rounds: int = 100):
    xs: list[np.ndarray] = []
    us: list[np.ndarray] = []
    have = 0
    for _ in range(max_rounds):
        m = max(2 * (n - have), 16)
        x = draw_x(m)
        u = draw_u(x, m)
        keep = accept(x, u)
        xs.append(x[keep])
        us.append(u[keep])
        have += int(keep.sum())
        if have >= n:
            break
    else:
        raise RuntimeError("rejection sampling did not produce enough samples")
    return np.concatenate(xs)[:n], np.concatenate(us)[:n]


def check_shear_union_identity(
    beta: float,
    r: float,
    n_samples: int = 10_000,
    tol: float = 1e-9,
    seed: int = 0,
) -> Certificate:
    """Sampled check that ``C(beta, r)`` is the union of sheared vertical sets.

    Forward: for ``p`` in the truncated cone, ``t = y/x`` has ``|t| < beta`` and
    ``shear(-t, p)`` is in ``vC(beta, r)``. Backward: for ``q`` in ``vC(beta, r)``
    and ``|t| < beta``, ``shear(t, q)`` is in ``C(beta, r)``. Samples keep the
    margin ``tol`` in the inequalities of the set they are mapped into.
    """
    rng = np.random.default_rng(seed)
    truncated = ConeSpec.truncated(beta, r)
    vertical = ConeSpec.vertical(beta, r)
    params = {"beta": beta, "r": r, "n_samples": n_samples, "tol": tol, "seed": seed}

    # forward: p = (x, a beta |x|, b beta x^2 / 2) strictly inside both margins
    def z_margin(x):
        return np.maximum(tol, tol * x * x / 2)

    def forward_point(x, ab):
        y = ab[:, 0] * np.maximum(beta * np.abs(x) - tol, 0)
        z = ab[:, 1] * np.maximum(beta * x**2 / 2 - z_margin(x), 0)
        return np.column_stack([x, y, z])

    xs, ab = _rejection(
        rng,
        n_samples,
        lambda m: rng.uniform(-(r - tol), r - tol, m),
        lambda x, m: rng.uniform(-1, 1, (m, 2)),
        lambda x, ab: contains_arr(truncated, forward_point(x, ab), tol),
    )
    fwd = forward_point(xs, ab)
    t = fwd[:, 1] / fwd[:, 0]
    back = shear_arr(-t, fwd)
    t_ok = np.abs(t) < beta
    v_ok = contains_arr(vertical, back, tol)
    bad = np.flatnonzero(~(t_ok & v_ok))
    params["n_forward"] = int(len(fwd))
    if bad.size:
        i = int(bad[0])
        parts = []
        if not t_ok[i]:
            parts.append(strict_bound_witness(float(abs(t[i])), beta, what="|t| < beta"))
        if not v_ok[i]:
            parts.append(membership_witness((0, 0, 0), vertical, back[i], tol, False))
        w = {"kind": "any", "direction": "forward", "point": fwd[i].tolist(), "t": float(t[i]), "parts": parts}
        return Certificate("shear-union", FAIL, w, params)

    # backward: q = (x, 0, u x^2 / 2), |t| < beta, margins taken in C(beta, r)
    def limits(x):
        return beta - np.maximum(tol, 2 * tol / (x * x)), beta - tol / np.abs(x)

    def backward_ok(x, ut):
        with np.errstate(divide="ignore"):
            u_lim, t_lim = limits(x)
        q = np.column_stack([x, np.zeros_like(x), ut[:, 0] * u_lim * x**2 / 2])
        return (x != 0) & (u_lim > 0) & (t_lim > 0) & contains_arr(vertical, q, tol)

    xs, ut = _rejection(
        rng,
        n_samples,
        lambda m: rng.uniform(-(r - tol), r - tol, m),
        lambda x, m: rng.uniform(-1, 1, (m, 2)),
        backward_ok,
    )
    u_lim, t_lim = limits(xs)
    ts = ut[:, 1] * t_lim
    q = np.column_stack([xs, np.zeros_like(xs), ut[:, 0] * u_lim * xs**2 / 2])
    img = shear_arr(ts, q)
    ok = contains_arr(truncated, img, tol)
    params["n_backward"] = int(len(q))
    if not ok.all():
        i = int(np.argmin(ok))
        w = membership_witness((0, 0, 0), truncated, img[i], tol, False, direction="backward", q=q[i].tolist(), t=float(ts[i]))
        return Certificate("shear-union", FAIL, w, params)
    return Certificate("shear-union", PASS, None, params)


def check_remark_shear_flat(
    alpha: float,
    n_samples: int = 10_000,
    n_t: int = 21,
    tol: float = 1e-9,
    seed: int = 0,
) -> Certificate:
    """Sampled check that ``shear(-t, p)`` is in ``fC(alpha)`` whenever ``p`` is in ``fC(alpha/2)`` and ``|t| <= alpha/2``."""
    rng = np.random.default_rng(seed)
    half = ConeSpec.flat(alpha / 2)
    cone = ConeSpec.flat(alpha)
    xs, a = _rejection(
        rng,
        n_samples,
        lambda m: rng.uniform(-1, 1, m),
        lambda x, m: rng.uniform(-1, 1, m),
        lambda x, a: x != 0,
    )
    pts = np.column_stack([xs, a * np.maximum(alpha / 2 * np.abs(xs) - tol, 0), np.zeros_like(xs)])
    pts = pts[contains_arr(half, pts, tol)]
    ts = np.linspace(-alpha / 2, alpha / 2, n_t)
    params = {"alpha": alpha, "n_samples": int(len(pts)), "n_t": n_t, "tol": tol, "seed": seed}
    for t in ts:
        ok = contains_arr(cone, shear_arr(-t, pts), tol)
        if not ok.all():
            i = int(np.argmin(ok))
            w = membership_witness((0, 0, 0), cone, shear_arr(-t, pts[i]), tol, False, t=float(t), p=pts[i].tolist())
            return Certificate("remark-shear-flat", FAIL, w, params)
    return Certificate("remark-shear-flat", PASS, None, params)
