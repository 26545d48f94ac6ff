"""Arithmetic in the first Heisenberg group.

Points are triples ``(x, y, z)`` with the product

    (x, y, z)(x', y', z') = (x + x', y + y', z + z' + (x y' - x' y) / 2).

Scalar helpers act on :class:`Point`; the ``*_arr`` variants act on numpy
arrays whose last axis has length 3 and are what the pairwise checkers use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"Point.{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y
        yield self.z

    def __neg__(self) -> Point:
        return Point(-self.x, -self.y, -self.z)

    def __mul__(self, other: Point) -> Point:
        return product(self, other)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_seq(cls, seq) -> Point:
        x, y, z = seq
        return cls(float(x), float(y), float(z))


@dataclass(frozen=True, slots=True)
class PlanePoint:
    eta: float
    tau: float

    def __post_init__(self) -> None:
        for name in ("eta", "tau"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"PlanePoint.{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))

    def __iter__(self) -> Iterator[float]:
        yield self.eta
        yield self.tau


ORIGIN = Point(0.0, 0.0, 0.0)


def product(p: Point, q: Point) -> Point:
    return Point(p.x + q.x, p.y + q.y, p.z + q.z + (p.x * q.y - q.x * p.y) / 2)


def inverse(p: Point) -> Point:
    return Point(-p.x, -p.y, -p.z)


def dilate(lam: float, p: Point) -> Point:
    """Apply the dilation ``(x, y, z) -> (lam x, lam y, lam^2 z)``."""
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam!r}")
    return Point(lam * p.x, lam * p.y, lam * lam * p.z)


def shear(t: float, p: Point) -> Point:
    """The automorphism ``(x, y, z) -> (x, y + t x, z)``; ``shear(-t)`` undoes it."""
    return Point(p.x, p.y + t * p.x, p.z)


def rotate_z(theta: float, p: Point) -> Point:
    c, s = math.cos(theta), math.sin(theta)
    return Point(c * p.x - s * p.y, s * p.x + c * p.y, p.z)


def project(p: Point) -> PlanePoint:
    """Graph coordinates ``(y, z + x y / 2)`` of ``p``.

    Inverse to :func:`lift`: ``lift(project(p), p.x) == p``.
    """
    return PlanePoint(p.y, p.z + p.x * p.y / 2)


def lift(w: PlanePoint, x: float) -> Point:
    """The point ``(0, eta, tau)(x, 0, 0)``."""
    return product(Point(0.0, w.eta, w.tau), Point(x, 0.0, 0.0))


# -- array versions ---------------------------------------------------------
# All take arrays of shape (..., 3) and broadcast like numpy.


def as_points(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.shape[-1] != 3:
        raise ValueError(f"expected trailing axis of length 3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def product_arr(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    px, py, pz = p[..., 0], p[..., 1], p[..., 2]
    qx, qy, qz = q[..., 0], q[..., 1], q[..., 2]
    return np.stack([px + qx, py + qy, pz + qz + (px * qy - qx * py) / 2], axis=-1)


def inverse_arr(p: np.ndarray) -> np.ndarray:
    return -np.asarray(p, dtype=float)


def left_inverse_product_arr(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``p^{-1} q`` computed directly, without forming ``p^{-1}``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    px, py, pz = p[..., 0], p[..., 1], p[..., 2]
    qx, qy, qz = q[..., 0], q[..., 1], q[..., 2]
    return np.stack([qx - px, qy - py, qz - pz + (qx * py - px * qy) / 2], axis=-1)


def dilate_arr(lam, p: np.ndarray) -> np.ndarray:
    """``lam`` may be an array broadcasting against ``p[..., 0]``."""
    lam_a = np.asarray(lam, dtype=float)
    if not (np.all(np.isfinite(lam_a)) and np.all(lam_a > 0)):
        raise ValueError(f"dilation factor must be positive, got {lam!r}")
    p = np.asarray(p, dtype=float)
    lam_a = lam_a[..., None]
    return p * np.concatenate(np.broadcast_arrays(lam_a, lam_a, lam_a * lam_a), axis=-1)


def shear_arr(t, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = p.copy()
    out[..., 1] = p[..., 1] + np.asarray(t) * p[..., 0]
    return out


def rotate_z_arr(theta, p: np.ndarray) -> np.ndarray:
    """``theta`` may be an array broadcasting against ``p[..., 0]``."""
    p = np.asarray(p, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = p.copy()
    out[..., 0] = c * p[..., 0] - s * p[..., 1]
    out[..., 1] = s * p[..., 0] + c * p[..., 1]
    return out


def project_arr(p: np.ndarray) -> np.ndarray:
    """Shape (..., 3) -> (..., 2) of ``(eta, tau)`` pairs."""
    p = np.asarray(p, dtype=float)
    return np.stack([p[..., 1], p[..., 2] + p[..., 0] * p[..., 1] / 2], axis=-1)


def lift_arr(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    eta, tau = w[..., 0], w[..., 1]
    return np.stack([x, eta, tau - eta * x / 2], axis=-1)
