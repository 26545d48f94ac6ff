"""Acceptance criteria, one test per criterion.

Each test prints a ``PASS``/``FAIL`` line (also collected into the terminal
summary). Run on its own with ``pytest tests/test_acceptance.py -s``.
"""

import json
import math
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from heiscone.cones import ConeSpec, contains_arr, flat_equals_full_slice
from heiscone.gallery import (
    constant_graph,
    cubic_curve,
    expected_behavior,
    generate,
    linear_graph,
    punctured_plane,
    verify_example,
)
from heiscone.graphs import GraphFunction, Rect, epsilon_for, flat_intersections, sample_graph
from heiscone.group import (
    dilate_arr,
    inverse_arr,
    product_arr,
    rotate_z_arr,
    shear_arr,
)
from heiscone.pipeline import run_theorem_pipeline
from heiscone.verifier import (
    check_flat_property,
    check_full_at_base,
    check_full_property,
    check_lemma_vertical_inclusion,
    check_remark_shear_flat,
    check_shear_union_identity,
    max_flat_aperture,
)

from conftest import q_in_flat, q_in_full

RESULTS: dict = {}
SQUARE = Rect(-1, 1, -1, 1)


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}" + (f" ({detail})" if detail else "")
    RESULTS[number] = line
    print("\n" + line, flush=True)
    assert ok, line


def rel_err(a, b) -> float:
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / scale))


def test_01_group_laws():
    rng = np.random.default_rng(2024)
    p, q, r = (rng.uniform(-10, 10, (10_000, 3)) for _ in range(3))
    lam = rng.uniform(0.1, 10, 10_000)
    t = rng.uniform(-5, 5, 10_000)
    th = rng.uniform(-math.pi, math.pi, 10_000)
    start = time.perf_counter()
    errs = {
        "assoc": rel_err(product_arr(product_arr(p, q), r), product_arr(p, product_arr(q, r))),
        "left-id": rel_err(product_arr(np.zeros(3), p), p),
        "right-id": rel_err(product_arr(p, np.zeros(3)), p),
        "inverse": max(rel_err(product_arr(inverse_arr(p), p), 0 * p), rel_err(product_arr(p, inverse_arr(p)), 0 * p)),
        "dilate": rel_err(dilate_arr(lam, product_arr(p, q)), product_arr(dilate_arr(lam, p), dilate_arr(lam, q))),
        "shear": rel_err(shear_arr(t, product_arr(p, q)), product_arr(shear_arr(t, p), shear_arr(t, q))),
        "rotate": rel_err(
            rotate_z_arr(th, product_arr(p, q)), product_arr(rotate_z_arr(th, p), rotate_z_arr(th, q))
        ),
    }
    elapsed = time.perf_counter() - start
    worst = max(errs.values())
    record(1, "group laws on 10^4 triples", worst <= 1e-12 and elapsed < 1.0, f"max rel err {worst:.2e}, {elapsed:.3f} s")


def test_02_flat_cone_is_slice_of_full_cone():
    rng = np.random.default_rng(7)
    bad = 0
    for alpha in (0.25, 1.0, 4.0):
        x = rng.uniform(-2, 2, 10_000)
        # half the samples sit within 1e-6 of the wall |y| = alpha |x|
        y = np.where(np.arange(10_000) % 2 == 0, rng.uniform(-2, 2, 10_000) * alpha * np.abs(x), 0)
        y[1::2] = alpha * np.abs(x[1::2]) * np.sign(rng.uniform(-1, 1, 5000)) * (1 + rng.uniform(-1e-6, 1e-6, 5000))
        pts = np.column_stack([x, y, np.zeros_like(x)])
        cert = flat_equals_full_slice(alpha, pts, tol=0.0)
        bad += not cert.passed
        # exact oracle on a subsample
        flat = contains_arr(ConeSpec.flat(alpha), pts[:500])
        full = contains_arr(ConeSpec.full(alpha), pts[:500])
        oracle = [q_in_flat(p, alpha) for p in pts[:500]]
        bad += int(np.sum(flat != oracle)) + int(np.sum(full != np.array([q_in_full(p, alpha) for p in pts[:500]])))
    record(2, "fC(alpha) = C(alpha) on z = 0", bad == 0, f"{bad} disagreements")


def test_03_vertical_set_in_flat_cones():
    start = time.perf_counter()
    certs = [check_lemma_vertical_inclusion(b, e, 10_000, 101, 1e-9, seed=3) for b, e in ((1, 0.5), (0.5, 0.2), (2, 1))]
    elapsed = time.perf_counter() - start
    ok = all(c.passed for c in certs)
    record(3, "vertical set inside intersection of flat cones", ok and elapsed < 10, f"{elapsed:.2f} s")


def test_04_shear_union_identity():
    certs = [check_shear_union_identity(b, r, 10_000, 1e-9, seed=4) for b, r in ((1, 1), (0.5, 2))]
    n = sum(c.parameters["n_forward"] + c.parameters["n_backward"] for c in certs)
    record(4, "truncated cone = union of sheared vertical sets", all(c.passed for c in certs), f"{n} samples")


def test_05_sheared_half_flat_cone():
    certs = [check_remark_shear_flat(a, 10_000, 21, 1e-9, seed=5) for a in (0.5, 1, 2)]
    record(5, "fC(alpha/2) inside sheared fC(alpha)", all(c.passed for c in certs))


def test_06_counterexamples():
    notes = []
    ok = True
    cubic = generate(cubic_curve(1000))
    ok &= len(cubic) == 1000 and check_flat_property(cubic, 1.0).passed
    for a in (0.1, 0.25, 1.0):
        c1 = check_full_at_base(cubic, (0, 0, 0), a)
        c2 = check_full_at_base(cubic, (0, 0, 0), a)
        ok &= (not c1.passed) and c1.replay() and c1.to_dict() == c2.to_dict()
    punct = generate(punctured_plane())
    ok &= check_flat_property(punct, 1.0).passed
    for a in (1.0, 0.25):
        c = check_full_at_base(punct, (0, 0, 0), a)
        ok &= (not c.passed) and c.replay()
    for spec in (cubic_curve(), punctured_plane()):
        table = verify_example(spec)["table"]
        same = table == expected_behavior(spec).table()
        ok &= same
        notes.append(f"{spec.name} {'matches' if same else 'differs'}")
    record(6, "counterexample fidelity", bool(ok), ", ".join(notes))


def test_07_pipeline_on_constant_graphs():
    ok = True
    details = []
    for c in (0.0, 0.1):
        phi = GraphFunction.constant(c, SQUARE)
        cloud = sample_graph(phi, 41, 41)
        start = time.perf_counter()
        alpha = min(max_flat_aperture(cloud), 1.0)
        report = run_theorem_pipeline(phi, alpha)
        elapsed = time.perf_counter() - start
        # the oracle uses every sample in the certified neighbourhood, not only those in V0
        oracle = check_full_property(
            cloud, alpha / 4, 1e-9, restrict=(tuple(report.center), report.neighborhood_radius)
        )
        if report.passed and not oracle.passed:
            pytest.fail(f"c={c}: pipeline passed while the direct full-cone check failed")
        ok &= report.passed and len(report.per_stage) == 8 and oracle.passed and elapsed < 60
        details.append(f"c={c}: {report.status}, oracle {oracle.status}, {elapsed:.1f} s")
    record(7, "flat-to-full pipeline on constant graphs", bool(ok), "; ".join(details))


def test_08_root_finder():
    rng = np.random.default_rng(8)
    worst_tau, worst_s, n_hyp, n_cases = 0.0, -math.inf, 0, 0
    bad = 0
    for k in range(1000):
        beta = float(rng.uniform(0.1, 4))
        # a quarter of the cases use c = 0, the only constant graph through the origin
        c = 0.0 if k % 4 == 0 else float(rng.uniform(-1, 1))
        eps = epsilon_for(1, 1, beta)
        eta = float(rng.uniform(-eps, eps))
        res = flat_intersections(GraphFunction.constant(c, SQUARE), beta, np.array([eta]), 1e-10, 0.0)[0]
        n_cases += 1
        exact = Fraction(eta) * Fraction(c) / 2
        err = abs(Fraction(res.tau) - exact)
        worst_tau = max(worst_tau, float(err))
        bad += err > Fraction(1, 10**10)
        if c == 0.0:
            n_hyp += 1
            worst_s = max(worst_s, abs(res.s) - 1 / beta)
            bad += abs(res.s) > 1 / beta + 1e-8
    # graphs of a * eta pass through the origin and are flat for beta <= 1 / |a|
    for k in range(200):
        a = float(rng.uniform(-2, 2))
        beta = float(rng.uniform(0.1, 1 / max(abs(a), 0.25)))
        eps = epsilon_for(1, 1, beta)
        eta = float(rng.uniform(-eps, eps))
        res = flat_intersections(GraphFunction.linear(a, SQUARE), beta, np.array([eta]), 1e-10, 0.0)[0]
        n_hyp += 1
        bad += abs(res.tau - a * eta * eta / 2) > 1e-10
        if eta != 0:
            worst_s = max(worst_s, abs(res.s) - 1 / beta)
            bad += abs(res.s) > 1 / beta + 1e-8
    record(
        8,
        "bisection root finder",
        bad == 0,
        f"{n_cases} constant cases, max |tau - eta c/2| {worst_tau:.1e}, {n_hyp} slope checks, max |s| - 1/beta {worst_s:.1e}",
    )


def test_09_invariance():
    rng = np.random.default_rng(9)
    clouds = {
        "cubic": (generate(cubic_curve(200)).points, 1.0, 0.25),
        "punctured": (generate(punctured_plane(9, 17)).points, 1.0, 0.25),
        "linear": (generate(linear_graph(0.5, 12)).points, 1.0, 1.0),
        "constant": (generate(constant_graph(0.1, 12)).points, 1.0, 1.0),
        "random": (rng.uniform(-1, 1, (60, 3)), 0.5, 0.5),
    }

    def statuses(pts, base, flat_a, full_a):
        return (
            check_flat_property(pts, flat_a).status,
            check_full_property(pts, full_a).status,
            check_full_at_base(pts, base, full_a).status,
        )

    diffs = 0
    n = 0
    for name, (pts, flat_a, full_a) in clouds.items():
        base = pts[0]
        ref = statuses(pts, base, flat_a, full_a)
        for g in rng.uniform(-2, 2, (100, 3)):
            diffs += statuses(product_arr(g, pts), product_arr(g, base), flat_a, full_a) != ref
            n += 1
        for lam in (0.5, 3.0):
            diffs += statuses(dilate_arr(lam, pts), dilate_arr(lam, base), flat_a, full_a) != ref
            n += 1
    record(9, "checker statuses invariant under translation and dilation", diffs == 0, f"{diffs} of {n} differ")


CLI_RUNS = [
    ["check-flat", "--gallery", "cubic", "--n", "200", "--alpha", "1"],
    ["check-full", "--gallery", "cubic", "--n", "200", "--alpha", "0.25", "--base", "0,0,0"],
    ["aperture", "--gallery", "punctured", "--angles", "6"],
    ["pipeline", "--gallery", "constant:0.1", "--alpha", "auto", "--n-t", "5", "--n-p", "3", "--n-surface", "21",
     "--n-eta", "21", "--n-raster", "11", "--n-lemma-samples", "500", "--n-lemma-s", "11"],
    ["lemmas", "--samples", "2000", "--n-s", "21", "--seed", "77"],
    ["gallery", "linear:0.5", "--n", "15"],
    ["export", "--gallery", "punctured"],
]


def test_10_cli_determinism(tmp_path):
    env = dict(os.environ, HEISCONE_SEED="123456789")
    same = 0
    for i, argv in enumerate(CLI_RUNS):
        outs = []
        for run in range(2):
            path = tmp_path / f"{i}-{run}.out"
            proc = subprocess.run(
                [sys.executable, "-m", "heiscone.cli", *argv, "--output", str(path)], env=env, capture_output=True
            )
            assert proc.returncode in (0, 1), proc.stderr.decode()
            outs.append(path.read_bytes())
        same += outs[0] == outs[1]
        if argv[0] != "export":
            assert json.loads(outs[0])["run"]["seed"] == 123456789
    record(10, "CLI reports are byte-identical across runs", same == len(CLI_RUNS), f"{same}/{len(CLI_RUNS)} commands")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
