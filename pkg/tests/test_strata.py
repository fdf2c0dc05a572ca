from fractions import Fraction as Q

import numpy as np
import pytest
import sympy as sp

from perbif.bifurcation import exact_point, solve
from perbif.catalog import EXAMPLE1_POINT, EXAMPLE2_INIT, example1, example2, principal_family
from perbif.errors import EmptyRegion
from perbif.strata import batched_newton, cobweb_data, hausdorff, trace_strata
from perbif.system import PeriodicSystem, composition_jet

A = EXAMPLE1_POINT["a"]
B = EXAMPLE1_POINT["b"]
LAM = list(EXAMPLE1_POINT["lambda"])


def scalar_ladder(system, j, x, lam, r):
    jet = composition_jet(system, j, 1, float(x), [float(v) for v in lam], r, with_grad=False)
    d = jet.derivatives()
    return [abs(d[0] - x), abs(d[1] - 1)] + [abs(v) for v in d[2 : r + 1]]


@pytest.fixture(scope="module")
def normal_form_cloud():
    nf = principal_family(3)
    pt = exact_point(nf, 0, 1, 3, 0.0, [0.0] * 3)
    return nf, trace_strata(nf, 0, 3, pt, [(-1, 1)] * 3, grid=64, x_window=(-1.5, 1.5))


@pytest.fixture(scope="module")
def example1_clouds():
    s = example1()
    pt = exact_point(s, 0, 1, 3, A, LAM)
    box = [(float(v) - 1e-2, float(v) + 1e-2) for v in LAM]
    c0 = trace_strata(s, 0, 3, pt, box, grid=16, x_window=(0.5, 1.0))
    c1 = trace_strata(s, 1, 3, pt, box, grid=16, x_window=(-0.7, -0.1))
    return s, c0, c1


def test_normal_form_strata_residuals(normal_form_cloud):
    nf, cloud = normal_form_cloud
    assert cloud.stratum("fold") and cloud.stratum("cusp") and len(cloud.stratum("top")) == 1
    for p in cloud.points:
        res = scalar_ladder(nf, 0, p.x, p.lambdas, 3)
        assert res[0] <= 1e-8 and res[1] <= 1e-8
        if p.stratum in ("cusp", "top"):
            assert res[2] <= 1e-8
        if p.stratum == "top":
            assert res[3] <= 1e-8


def test_normal_form_folds_on_discriminant(normal_form_cloud):
    # folds of x^4 + l3 x^2 + l2 x + l1 = 0 lie on its discriminant surface
    _, cloud = normal_form_cloud
    t, a, b, c = sp.symbols("t a b c")
    disc = sp.lambdify((a, b, c), sp.discriminant(t**4 + c * t**2 + b * t + a, t))
    for p in cloud.stratum("fold")[::25]:
        l1, l2, l3 = p.lambdas
        scale = 1 + abs(l1) ** 3 + abs(l2) ** 4 + abs(l3) ** 6
        assert abs(disc(l1, l2, l3)) <= 1e-9 * scale


def test_normal_form_reflection_symmetry(normal_form_cloud):
    _, cloud = normal_form_cloud
    pts = cloud.lambda_array(["fold"])
    assert hausdorff(pts, pts * [1, -1, 1]) <= 1e-9


def test_normal_form_cusp_curve(normal_form_cloud):
    # triple roots of x^4 + l3 x^2 + l2 x + l1 need l3 <= 0
    nf, cloud = normal_form_cloud
    for p in cloud.stratum("cusp"):
        assert p.lambdas[2] <= 1e-9  # cusp lines exist only for l3 <= 0


def test_example1_strata_and_rotation_invariance(example1_clouds):
    s, c0, c1 = example1_clouds
    for c, j in ((c0, 0), (c1, 1)):
        assert c.stratum("fold") and c.stratum("cusp") and c.stratum("top")
        for p in c.points:
            res = scalar_ladder(s, j, p.x, p.lambdas, 2)
            assert res[0] <= 1e-8 and res[1] <= 1e-8
    assert hausdorff(c0.lambda_array(), c1.lambda_array()) <= 1e-6


def test_nonempty_in_small_boxes():
    s = example1()
    pt = exact_point(s, 0, 1, 3, A, LAM)
    for shift in ([0, 0, 0], [4e-3, -3e-3, 2e-3]):
        box = [(float(v) + d - 1e-2, float(v) + d + 1e-2) for v, d in zip(LAM, shift)]
        c = trace_strata(s, 0, 3, pt, box, grid=8, x_window=(0.5, 1.0))
        assert c.stratum("fold") and c.stratum("cusp")


def test_far_region_is_empty():
    nf = principal_family(3)
    pt = exact_point(nf, 0, 1, 3, 0.0, [0.0] * 3)
    c = trace_strata(nf, 0, 3, pt, [(5, 6), (5, 6), (5, 6)], grid=8, x_window=(-1.5, 1.5))
    assert len(c) == 0
    assert c.to_csv().strip() == "stratum,x,l1,l2,l3,res_fp,res_dx,res_dxx"


def test_degenerate_region():
    nf = principal_family(3)
    pt = exact_point(nf, 0, 1, 3, 0.0, [0.0] * 3)
    with pytest.raises(EmptyRegion):
        trace_strata(nf, 0, 3, pt, [(1, 1), (-1, 1), (-1, 1)], grid=4)
    with pytest.raises(EmptyRegion):
        trace_strata(nf, 0, 3, pt, [(1, -1), (-1, 1), (-1, 1)], grid=4)


def test_deterministic_output():
    nf = principal_family(2)
    pt = exact_point(nf, 0, 1, 2, 0.0, [0.0] * 2)
    a = trace_strata(nf, 0, 2, pt, [(-1, 1), (-1, 1)], grid=20)
    b = trace_strata(nf, 0, 2, pt, [(-1, 1), (-1, 1)], grid=20)
    assert a.to_csv() == b.to_csv()
    assert a.stratum("top") and not a.stratum("cusp")


def test_csv_and_json_fields(example1_clouds):
    _, c0, _ = example1_clouds
    lines = c0.to_csv().splitlines()
    assert lines[0] == "stratum,x,l1,l2,l3,res_fp,res_dx,res_dxx"
    assert len(lines) == len(c0) + 1
    data = c0.to_json()
    assert set(data["points"][0]) == set(lines[0].split(","))


def test_batched_newton_matches_scalar_solve():
    s = example2()
    x, ps, res, ok = batched_newton(s, 0, 1, np.array([0.08, 0.07]), [np.array([-0.04] * 2), 0.0, 1.0], [0, 1, 2], 3)
    pt = solve(s, 0, 1, 3, list(EXAMPLE2_INIT))
    assert ok.all()
    assert x == pytest.approx([pt.x_star] * 2, abs=1e-10)


def test_tan_pole_members_are_dropped():
    s = PeriodicSystem.from_strings(["tan(x) + l1"], 1)
    x, _, _, ok = batched_newton(s, 0, 1, np.array([np.pi / 2, 0.1]), [np.array([0.0, 0.0])], [0], 1)
    assert not ok[0]


# cobweb


def test_cobweb_example2_collapses_on_cycle():
    s = example2()
    pt = solve(s, 0, 1, 3, list(EXAMPLE2_INIT))
    b = float(s.maps[0](pt.x_star, pt.params))
    cob = cobweb_data(s, pt.x_star, pt.params, 6)
    assert len(cob.segments) == 12
    for seg in cob.segments:
        for v in (seg.x0, seg.y0, seg.x1, seg.y1):
            assert min(abs(v - pt.x_star), abs(v - b)) <= 1e-5
    assert set(cob.graphs) == {"f0", "f1", "diagonal"}


def test_cobweb_example1_exact():
    cob = cobweb_data(example1(), A, LAM, 4)
    assert cob.orbit == [A, B, A, B, A]
    assert all(isinstance(v, Q) for seg in cob.segments for v in (seg.x0, seg.y0, seg.x1, seg.y1))
    assert cob.segments[0].kind == "vertical" and cob.segments[1].kind == "horizontal"
    csv_text = cob.to_csv(include_graphs=False)
    assert csv_text.splitlines()[1] == "vertical,27/35,27/35,27/35,-486/1225"


def test_cobweb_fixed_point_p1():
    s = PeriodicSystem.from_strings(["x^2"], 0)
    cob = cobweb_data(s, Q(1), [], 3)
    assert all((seg.x0, seg.y0, seg.x1, seg.y1) == (1, 1, 1, 1) for seg in cob.segments)


def test_cobweb_needs_steps():
    with pytest.raises(ValueError):
        cobweb_data(example1(), A, LAM, 0)
