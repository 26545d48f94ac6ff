"""Fixture surfaces: two sets where flat cones do not give full cones, and easy positives.

``CubicCurve`` is the curve ``{(x, 0, x^3) : 0 <= x <= 1}``. ``PuncturedPlane``
is the origin together with the plane ``{x = 1}`` minus the slit
``{(1, s, 0) : |s| < 1}``. The rest are intrinsic graphs of simple functions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graphs import GraphFunction, PointCloud, Rect, sample_graph
from .group import ORIGIN
from .verifier import check_flat_property, check_full_at_base, check_full_property


class ExampleKind(str, enum.Enum):
    CUBIC_CURVE = "cubic"
    PUNCTURED_PLANE = "punctured"
    VERTICAL_PLANE = "plane"
    CONSTANT_GRAPH = "constant"
    LINEAR_GRAPH = "linear"


@dataclass(frozen=True)
class ExampleSpec:
    name: str
    kind: ExampleKind
    param: float = 0.0
    n1: int = 41
    n2: int = 41
    range1: tuple[float, float] = (-1.0, 1.0)
    range2: tuple[float, float] = (-1.0, 1.0)
    exclusion_tol: float = 1e-9
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ExampleKind(self.kind))
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("sampling counts must be at least 2")
        for lo, hi in (self.range1, self.range2):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"bad sampling range ({lo}, {hi})")

    @property
    def is_graph(self) -> bool:
        return self.kind in (ExampleKind.VERTICAL_PLANE, ExampleKind.CONSTANT_GRAPH, ExampleKind.LINEAR_GRAPH)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "param": self.param,
            "n1": self.n1,
            "n2": self.n2,
            "range1": list(self.range1),
            "range2": list(self.range2),
            "exclusion_tol": self.exclusion_tol,
            "seed": self.seed,
        }


def cubic_curve(n: int = 1000) -> ExampleSpec:
    return ExampleSpec("cubic-curve", ExampleKind.CUBIC_CURVE, n1=n, n2=2, range1=(0.0, 1.0))


def punctured_plane(n_y: int = 17, n_z: int = 33, y_range=(-2.0, 2.0), z_range=(-1.0, 1.0)) -> ExampleSpec:
    return ExampleSpec("punctured-plane", ExampleKind.PUNCTURED_PLANE, n1=n_y, n2=n_z, range1=y_range, range2=z_range)


def vertical_plane(n: int = 41) -> ExampleSpec:
    return ExampleSpec("vertical-plane", ExampleKind.VERTICAL_PLANE, n1=n, n2=n)


def constant_graph(c: float, n: int = 41) -> ExampleSpec:
    return ExampleSpec(f"constant-{c:g}", ExampleKind.CONSTANT_GRAPH, param=c, n1=n, n2=n)


def linear_graph(slope: float, n: int = 41) -> ExampleSpec:
    return ExampleSpec(f"linear-{slope:g}", ExampleKind.LINEAR_GRAPH, param=slope, n1=n, n2=n)


def parse_spec(text: str, n: Optional[int] = None) -> ExampleSpec:
    """Read ``cubic``, ``punctured``, ``plane``, ``constant:<c>`` or ``linear:<slope>``."""
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    try:
        if name in ("cubic", "cubic-curve"):
            return cubic_curve(n or 1000)
        if name in ("punctured", "punctured-plane"):
            return punctured_plane(n, n) if n else punctured_plane()
        if name in ("plane", "vertical-plane"):
            return vertical_plane(n or 41)
        if name == "constant":
            return constant_graph(float(arg), n or 41)
        if name == "linear":
            return linear_graph(float(arg), n or 41)
    except ValueError as exc:
        raise ValueError(f"bad gallery spec {text!r}: {exc}") from None
    raise ValueError(f"unknown gallery example {text!r}")


def graph_function(spec: ExampleSpec) -> GraphFunction:
    """The function whose intrinsic graph the fixture samples (graph kinds only)."""
    dom = Rect(*spec.range1, *spec.range2)
    if spec.kind is ExampleKind.VERTICAL_PLANE:
        return GraphFunction.constant(0.0, dom)
    if spec.kind is ExampleKind.CONSTANT_GRAPH:
        return GraphFunction.constant(spec.param, dom)
    if spec.kind is ExampleKind.LINEAR_GRAPH:
        return GraphFunction.linear(spec.param, dom)
    raise ValueError(f"{spec.kind.value} is not an intrinsic graph fixture")


def generate(spec: ExampleSpec) -> PointCloud:
    if spec.is_graph:
        return sample_graph(graph_function(spec), spec.n1, spec.n2)
    if spec.kind is ExampleKind.CUBIC_CURVE:
        x = np.linspace(*spec.range1, spec.n1)
        if spec.range1[0] > 0 or spec.range1[1] < 0:
            x = np.concatenate([[0.0], x])
        return PointCloud(np.column_stack([x, np.zeros_like(x), x**3]))
    # punctured plane
    y = np.linspace(*spec.range1, spec.n1)
    z = np.linspace(*spec.range2, spec.n2)
    Y, Z = np.meshgrid(y, z, indexing="ij")
    Y, Z = Y.ravel(), Z.ravel()
    keep = ~((np.abs(Z) <= spec.exclusion_tol) & (np.abs(Y) < 1))
    plane = np.column_stack([np.ones(keep.sum()), Y[keep], Z[keep]])
    return PointCloud(np.vstack([[0.0, 0.0, 0.0], plane]))


@dataclass
class Expectation:
    """Predicted statuses of the flat check and of the full check.

    ``full_base`` is ``"origin"`` when the full check uses the origin as its
    only base point and ``"all"`` when every sample is a base point.
    """

    flat_alpha: float
    flat_status: str
    full_alphas: list[float]
    full_status: str
    full_base: str = "all"
    known_witness: Optional[list[float]] = None
    notes: str = ""

    def table(self) -> dict:
        return {
            "flat": {"alpha": self.flat_alpha, "status": self.flat_status},
            "full": {"base": self.full_base, "alphas": self.full_alphas, "status": self.full_status},
        }

    def to_dict(self) -> dict:
        return {**self.table(), "known_witness": self.known_witness, "notes": self.notes}


def expected_behavior(spec: ExampleSpec) -> Expectation:
    k = spec.kind
    if k is ExampleKind.CUBIC_CURVE:
        # (0,0,0)^{-1}(x,0,x^3) = (x,0,x^3) sits in C(a) once 0 < x < a/2; no pair has z = 0
        return Expectation(1.0, "pass", [0.1, 0.25, 1.0], "fail", "origin", [0.1, 0.0, 0.001], "flat at any aperture; full fails at 0")
    if k is ExampleKind.PUNCTURED_PLANE:
        # origin-to-plane offsets are (1, y, z); z = 0 needs |y| >= 1 after removing the slit
        return Expectation(1.0, "pass", [1.0, 0.25], "fail", "origin", [1.0, 0.0, 0.0625], "flat for alpha <= 1; full fails at 0")
    if k is ExampleKind.LINEAR_GRAPH and spec.param != 0:
        a = 0.5 / abs(spec.param)
        return Expectation(a, "pass", [a], "pass", "all", None, "relative offsets satisfy |y| = |x| / |slope|")
    # vertical plane and constant graphs are left translates of {x = 0}: every offset has x = 0
    return Expectation(1.0, "pass", [0.25, 1.0, 4.0], "pass", "all", None, "all offsets have x = 0")


def verify_example(spec: ExampleSpec, tol: float = 1e-9) -> dict:
    """Run the checks :func:`expected_behavior` predicts; the ``table`` entry mirrors it."""
    exp = expected_behavior(spec)
    cloud = generate(spec)
    flat = check_flat_property(cloud, exp.flat_alpha, tol)
    if exp.full_base == "origin":
        fulls = [check_full_at_base(cloud, ORIGIN, a, tol) for a in exp.full_alphas]
    else:
        fulls = [check_full_property(cloud, a, tol) for a in exp.full_alphas]
    statuses = {c.status for c in fulls}
    full_status = statuses.pop() if len(statuses) == 1 else "mixed"
    return {
        "table": {
            "flat": {"alpha": exp.flat_alpha, "status": flat.status},
            "full": {"base": exp.full_base, "alphas": exp.full_alphas, "status": full_status},
        },
        "certificates": [flat] + fulls,
    }
