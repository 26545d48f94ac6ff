import math

import numpy as np
import pytest

from heiscone.gallery import cubic_curve, generate
from heiscone.graphs import GraphFunction, PointCloud, Rect, sample_graph
from heiscone.pipeline import PipelineGrids, run_theorem_pipeline
from heiscone.verifier import check_full_property, max_flat_aperture

SQUARE = Rect(-1, 1, -1, 1)
STAGES = [
    "flat-check",
    "common-domain",
    "intersection-sweep",
    "lemma-inclusion",
    "vertical-exclusion",
    "shear-union",
    "truncated-full",
    "local-full",
]
# coarse grids keep the module fast; the acceptance suite runs the full sizes
FAST = PipelineGrids(n_t=5, n_p=3, n_eta=21, n_surface=21, n_raster=11, n_lemma_samples=500, n_lemma_s=11)


@pytest.fixture(scope="module")
def zero_report():
    return run_theorem_pipeline(GraphFunction.constant(0.0, SQUARE), 1.0, FAST)


class TestPlane:
    def test_all_stages_pass_in_order(self, zero_report):
        assert zero_report.passed
        assert [c.check_name for c in zero_report.per_stage] == STAGES

    def test_report_quantities(self, zero_report):
        r = zero_report
        assert r.alpha_out == r.alpha_in / 4
        eta0, tau0 = r.v0.half_widths
        assert r.epsilon == min(eta0, math.sqrt(tau0 * r.alpha_in / 2))
        assert r.neighborhood_radius == pytest.approx(2 * r.epsilon / r.alpha_in)

    def test_to_dict_lists_stages(self, zero_report):
        d = zero_report.to_dict()
        assert d["status"] == "pass"
        assert [s["check"] for s in d["per_stage"]] == STAGES


@pytest.mark.parametrize(
    "phi",
    [GraphFunction.constant(0.1, SQUARE), GraphFunction.linear(0.5, SQUARE)],
    ids=["constant", "linear"],
)
def test_graph_with_measured_aperture_passes_and_oracle_agrees(phi):
    cloud = sample_graph(phi, FAST.n_surface, FAST.n_surface)
    alpha = min(max_flat_aperture(cloud), 1.0)
    report = run_theorem_pipeline(phi, alpha, FAST)
    assert report.passed
    oracle = check_full_property(
        cloud.points, alpha / 4, 1e-9, restrict=(tuple(report.center), report.neighborhood_radius)
    )
    assert oracle.passed


def test_cloud_input_is_fit_and_passes():
    cloud = sample_graph(GraphFunction.constant(0.1, SQUARE), 21, 21)
    assert run_theorem_pipeline(cloud, 1.0, FAST).passed


def test_cubic_curve_has_no_common_domain():
    report = run_theorem_pipeline(generate(cubic_curve(200)), 1.0, FAST)
    assert report.stage("flat-check").passed
    cd = report.stage("common-domain")
    assert not cd.passed
    assert cd.replay()
    assert report.v0 is None
    assert not report.passed


def test_non_flat_input_stops_at_stage_zero():
    cloud = PointCloud(np.array([[0, 0, 0], [1, 0.1, 0], [0, 1, 0]]))
    report = run_theorem_pipeline(cloud, 0.5, FAST)
    assert [c.check_name for c in report.per_stage] == ["flat-check"]
    assert report.per_stage[0].replay()


def test_steep_graph_fails_the_flat_check():
    # the graph of 4 * eta has flat aperture 1/8
    report = run_theorem_pipeline(GraphFunction.linear(4.0, SQUARE), 1.0, FAST)
    assert not report.passed
    assert report.per_stage[-1].check_name == "flat-check"


def test_same_seed_same_report():
    phi = GraphFunction.constant(0.05, SQUARE)
    a = run_theorem_pipeline(phi, 1.0, FAST, seed=4).to_dict()
    b = run_theorem_pipeline(phi, 1.0, FAST, seed=4).to_dict()
    assert a == b


def test_bad_alpha():
    with pytest.raises(ValueError):
        run_theorem_pipeline(GraphFunction.constant(0.0, SQUARE), 0.0)
