"""Membership predicates for the four cone families around the x axis.

Every strict inequality ``a < b`` is decided as ``a < b - tol`` so callers
control how close to the boundary a point may sit and still count as inside.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .group import Point, as_points, inverse, left_inverse_product_arr, product


class ConeKind(str, enum.Enum):
    FULL = "full"
    FLAT = "flat"
    TRUNCATED_FULL = "truncated_full"
    VERTICAL = "vertical"

    @property
    def needs_radius(self) -> bool:
        return self in (ConeKind.TRUNCATED_FULL, ConeKind.VERTICAL)


@dataclass(frozen=True)
class ConeSpec:
    kind: ConeKind
    aperture: float
    radius: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ConeKind(self.kind))
        if not (math.isfinite(self.aperture) and self.aperture > 0):
            raise ValueError(f"cone aperture must be positive and finite, got {self.aperture!r}")
        if self.kind.needs_radius:
            if self.radius is None or not (math.isfinite(self.radius) and self.radius > 0):
                raise ValueError(f"{self.kind.value} cone needs a positive radius, got {self.radius!r}")
        elif self.radius is not None:
            raise ValueError(f"{self.kind.value} cone takes no radius")

    @classmethod
    def full(cls, alpha: float) -> ConeSpec:
        return cls(ConeKind.FULL, alpha)

    @classmethod
    def flat(cls, alpha: float) -> ConeSpec:
        return cls(ConeKind.FLAT, alpha)

    @classmethod
    def truncated(cls, beta: float, r: float) -> ConeSpec:
        return cls(ConeKind.TRUNCATED_FULL, beta, r)

    @classmethod
    def vertical(cls, beta: float, r: float) -> ConeSpec:
        return cls(ConeKind.VERTICAL, beta, r)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "aperture": self.aperture, "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> ConeSpec:
        return cls(ConeKind(d["kind"]), d["aperture"], d.get("radius"))


def _check_tol(tol: float) -> None:
    if not (math.isfinite(tol) and tol >= 0):
        raise ValueError(f"tol must be a finite non-negative number, got {tol!r}")


def contains_arr(cone: ConeSpec, pts, tol: float = 0.0) -> np.ndarray:
    """Vectorised :func:`contains` over an array of shape (..., 3)."""
    _check_tol(tol)
    pts = np.asarray(pts, dtype=float)
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    ax = np.abs(x)
    a = cone.aperture
    kind = cone.kind
    if kind is ConeKind.FLAT:
        return (np.abs(y) < a * ax - tol) & (np.abs(z) <= tol)
    if kind is ConeKind.FULL or kind is ConeKind.TRUNCATED_FULL:
        inside = (np.abs(y) < a * ax - tol) & (np.abs(z) < a * x * x / 2 - tol)
        if kind is ConeKind.TRUNCATED_FULL:
            inside &= ax < cone.radius - tol
        return inside
    # vertical set {(x, 0, u x^2 / 2) : |u| < beta, 0 < |x| < r}, read off via u = 2z/x^2;
    # 0 < |x| is strict like the others and gets the same margin
    nonzero = ax > tol
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(nonzero, 2 * z / np.where(nonzero, x * x, 1.0), np.inf)
    return nonzero & (np.abs(y) <= tol) & (ax < cone.radius - tol) & (np.abs(u) < a - tol)


def contains(cone: ConeSpec, p: Point, tol: float = 0.0) -> bool:
    return bool(contains_arr(cone, np.array([p.x, p.y, p.z]), tol))


def contains_translated(base: Point, cone: ConeSpec, p: Point, tol: float = 0.0) -> bool:
    """Whether ``p`` lies in the left translate ``base * cone``."""
    return contains(cone, product(inverse(base), p), tol)


def contains_translated_arr(base, cone: ConeSpec, pts, tol: float = 0.0) -> np.ndarray:
    return contains_arr(cone, left_inverse_product_arr(base, pts), tol)


def inequality_report(cone: ConeSpec, p: Point, tol: float) -> dict:
    """The defining inequalities of ``cone`` evaluated at ``p``, for witnesses."""
    x, y, z = p
    a = cone.aperture
    rows: dict[str, dict] = {}
    if cone.kind is ConeKind.VERTICAL:
        rows["|y| <= tol"] = {"lhs": abs(y), "rhs": tol, "holds": abs(y) <= tol}
        rows["0 < |x| - tol"] = {"lhs": 0.0, "rhs": abs(x) - tol, "holds": abs(x) > tol}
        u = 2 * z / (x * x) if x != 0 else math.inf
        rows["|2z/x^2| < beta - tol"] = {"lhs": abs(u), "rhs": a - tol, "holds": abs(u) < a - tol}
    else:
        rows["|y| < a|x| - tol"] = {"lhs": abs(y), "rhs": a * abs(x) - tol, "holds": abs(y) < a * abs(x) - tol}
        if cone.kind is ConeKind.FLAT:
            rows["|z| <= tol"] = {"lhs": abs(z), "rhs": tol, "holds": abs(z) <= tol}
        else:
            rhs = a * x * x / 2 - tol
            rows["|z| < a x^2/2 - tol"] = {"lhs": abs(z), "rhs": rhs, "holds": abs(z) < rhs}
    if cone.kind.needs_radius:
        rows["|x| < r - tol"] = {"lhs": abs(x), "rhs": cone.radius - tol, "holds": abs(x) < cone.radius - tol}
    return rows


def flat_equals_full_slice(alpha: float, samples, tol: float = 0.0):
    """Check that flat and full membership agree on every sample with ``|z| <= tol``.

    Samples off the slab are skipped. Returns a :class:`~heiscone.verifier.Certificate`.
    """
    from .verifier import Certificate

    _check_tol(tol)
    pts = as_points(getattr(samples, "points", samples)).reshape(-1, 3)
    on_slice = np.abs(pts[:, 2]) <= tol
    flat = contains_arr(ConeSpec.flat(alpha), pts, tol)
    full = contains_arr(ConeSpec.full(alpha), pts, tol)
    bad = np.flatnonzero(on_slice & (flat != full))
    params = {"alpha": alpha, "tol": tol, "n_samples": int(len(pts)), "n_on_slice": int(on_slice.sum())}
    if bad.size == 0:
        return Certificate("flat-equals-full-slice", "pass", None, params)
    i = int(bad[0])
    witness = {
        "index": i,
        "point": pts[i].tolist(),
        "flat_member": bool(flat[i]),
        "full_member": bool(full[i]),
    }
    return Certificate("flat-equals-full-slice", "fail", witness, params)
