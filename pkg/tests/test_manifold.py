import numpy as np
import pytest

from mapgeom import (
    ChartBoundaryError,
    ChartManifold,
    DegenerateMetricError,
    DomainExitError,
    SecondTangentVector,
    TangentVector,
    christoffel_from_metric,
    connector_apply,
    connector_apply_embedded,
    curvature_point,
    exp_point,
    from_pointwise,
    make_manifold,
    parallel_transport_point,
    sectional_curvature,
    spray_eval,
)
from mapgeom.manifold import integrate_spray

FLAT2 = make_manifold("flat:n=2")
HALFPLANE = make_manifold("halfplane")
SPHERE_CHART = make_manifold("sphere:r=1.0:rep=chart")
SPHERE_EMB = make_manifold("sphere:r=1.0:rep=embedded")
PARABOLOID = make_manifold("paraboloid")


def great_circle(p, h, t):
    """Independent closed-form unit-sphere geodesic used as the oracle."""
    speed = np.linalg.norm(h)
    if speed == 0.0:
        return np.array(p, dtype=float)
    return np.cos(speed * t) * p + np.sin(speed * t) * h / speed


# ---------------------------------------------------------------------------
# Christoffel symbols


def test_flat_christoffel_zero():
    x = np.array([0.3, -0.8])
    assert np.all(christoffel_from_metric(FLAT2, x) == 0.0)
    assert np.all(FLAT2.christoffel_eval(x) == 0.0)


def test_halfplane_christoffel_analytic_values():
    G = HALFPLANE.christoffel_eval(np.array([0.0, 1.0]))
    assert G[0, 0, 1] == -1.0
    assert G[0, 1, 0] == -1.0
    assert G[1, 0, 0] == 1.0
    assert G[1, 1, 1] == -1.0


def test_halfplane_christoffel_from_metric_matches_analytic():
    metric_only = ChartManifold(dim=2, metric=HALFPLANE.metric, chart_domain=HALFPLANE.chart_domain)
    for y in (1.0, 0.7, 2.3):
        x = np.array([0.2, y])
        fd = christoffel_from_metric(metric_only, x)
        assert np.max(np.abs(fd - HALFPLANE.christoffel_eval(x))) < 1e-6


def test_sphere_chart_christoffel_equator_and_midlatitude():
    eq = SPHERE_CHART.christoffel_eval(np.array([np.pi / 2, 0.3]))
    assert abs(eq[0, 1, 1]) < 1e-12  # -sin(theta) cos(theta) vanishes on the equator
    mid = SPHERE_CHART.christoffel_eval(np.array([np.pi / 4, 0.3]))
    assert abs(mid[0, 1, 1] + 0.5) < 1e-12


def test_christoffel_symmetry_in_lower_indices():
    rng = np.random.default_rng(0)
    for man in (HALFPLANE, SPHERE_CHART):
        x = man.random_points(rng, 5)
        G = man.christoffel_eval(x)
        assert np.array_equal(G, np.swapaxes(G, -1, -2))


def test_christoffel_stencil_domain_guard():
    x = np.array([0.0, 1.001e-3])
    metric_only = ChartManifold(dim=2, metric=HALFPLANE.metric, chart_domain=HALFPLANE.chart_domain)
    with pytest.raises(ChartBoundaryError, match="chart boundary"):
        christoffel_from_metric(metric_only, x)


def test_degenerate_metric_detected():
    def singular(x):
        g = np.zeros(np.shape(x)[:-1] + (2, 2))
        g[..., 0, 0] = x[..., 0]
        return g

    man = ChartManifold(dim=2, metric=singular)
    with pytest.raises(DegenerateMetricError, match="degenerate metric"):
        christoffel_from_metric(man, np.array([0.5, 0.5]))


def test_from_pointwise_wrapper_batches():
    def point_metric(x):
        return np.eye(2) * (1.0 + x[0] ** 2)

    man = ChartManifold(dim=2, metric=from_pointwise(point_metric))
    xs = np.array([[0.5, 0.0], [1.0, 2.0]])
    g = man.metric(xs)
    assert g.shape == (2, 2, 2)
    assert g[1, 0, 0] == 2.0


# ---------------------------------------------------------------------------
# connector


def test_connector_flat_returns_dvec():
    xi = SecondTangentVector(np.array([0.1, 0.2]), np.array([1.0, 2.0]),
                             np.array([3.0, 4.0]), np.array([5.0, 6.0]))
    out = connector_apply(FLAT2, xi)
    assert np.array_equal(out.vec, np.array([5.0, 6.0]))


@pytest.mark.parametrize("man", [FLAT2, HALFPLANE, SPHERE_CHART])
def test_connector_vertical_lift_identity(man):
    rng = np.random.default_rng(1)
    x = man.random_points(rng, 1)[0]
    h, k = rng.uniform(-1, 1, size=(2, 2))
    xi = SecondTangentVector(x, h, np.zeros(2), k)
    out = connector_apply(man, xi)
    assert np.array_equal(out.vec, k)


def test_connector_halfplane_value():
    # K(x,h;k,l) = l + Gamma(k,h); at (0,1) with h=e_x, k=e_y, l=0 the
    # correction is Gamma^x_{yx} = -1/y, so the result is (-1, 0)
    xi = SecondTangentVector(np.array([0.0, 1.0]), np.array([1.0, 0.0]),
                             np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    out = connector_apply(HALFPLANE, xi)
    np.testing.assert_allclose(out.vec, [-1.0, 0.0], atol=1e-14)


def test_connector_embedded_projects_dvec():
    pole = np.array([0.0, 0.0, 1.0])
    tangent = np.array([1.0, 0.0, 0.0])
    xi = SecondTangentVector(pole, tangent, tangent, np.array([0.0, 0.0, 5.0]))
    out = connector_apply_embedded(SPHERE_EMB, xi)
    np.testing.assert_allclose(out.vec, [0.0, 0.0, 0.0], atol=1e-15)
    xi2 = SecondTangentVector(pole, tangent, tangent, np.array([1.0, 2.0, 3.0]))
    out2 = connector_apply_embedded(SPHERE_EMB, xi2)
    np.testing.assert_allclose(out2.vec, [1.0, 2.0, 0.0], atol=1e-15)


def test_connector_embedded_paraboloid_origin():
    origin = np.array([0.0, 0.0, 0.0])
    l = np.array([0.7, -0.3, 0.9])
    xi = SecondTangentVector(origin, np.array([1.0, 0.0, 0.0]),
                             np.array([0.0, 1.0, 0.0]), l)
    out = connector_apply_embedded(PARABOLOID, xi)
    np.testing.assert_allclose(out.vec, [0.7, -0.3, 0.0], atol=1e-15)


# ---------------------------------------------------------------------------
# spray and exp


def test_connector_rejects_chart_boundary():
    xi = SecondTangentVector(np.array([0.0, 5e-4]), np.ones(2), np.ones(2), np.ones(2))
    with pytest.raises(ChartBoundaryError, match="chart boundary"):
        connector_apply(HALFPLANE, xi)


def test_connector_embedded_rejects_off_manifold_point():
    from mapgeom import OffManifoldError

    xi = SecondTangentVector(np.array([0.0, 0.0, 1.5]), np.zeros(3), np.zeros(3), np.ones(3))
    with pytest.raises(OffManifoldError, match="off manifold"):
        connector_apply_embedded(SPHERE_EMB, xi)


def test_spray_flat():
    v = TangentVector(np.array([0.1, 0.2]), np.array([1.5, -2.0]))
    xi = spray_eval(FLAT2, v)
    assert np.array_equal(xi.dbase, v.vec)
    assert np.all(xi.dvec == 0.0)


def test_spray_zero_vector_is_zero():
    for man in (HALFPLANE, SPHERE_EMB):
        rng = np.random.default_rng(2)
        x = man.random_points(rng, 1)[0]
        xi = spray_eval(man, TangentVector(x, np.zeros(x.shape)))
        assert np.all(xi.dbase == 0.0)
        assert np.all(xi.dvec == 0.0)


def test_spray_sphere_embedded_acceleration():
    p = np.array([0.0, 0.0, 1.0])
    h = np.array([1.0, 0.0, 0.0])
    xi = spray_eval(SPHERE_EMB, TangentVector(p, h))
    np.testing.assert_allclose(xi.dvec, -p, atol=1e-9)


def test_exp_flat_exact_for_dyadic_data():
    x = np.array([0.25, -1.5])
    h = np.array([0.5, 0.75])
    out = exp_point(FLAT2, TangentVector(x, h), steps=1024)
    assert np.array_equal(out, x + h)


def test_exp_zero_vector_is_identity():
    p = SPHERE_EMB.random_points(np.random.default_rng(3), 1)[0]
    out = exp_point(SPHERE_EMB, TangentVector(p, np.zeros(3)), steps=100)
    assert np.array_equal(out, p)


def test_exp_sphere_quarter_circle():
    p = np.array([0.0, 0.0, 1.0])
    h = np.array([np.pi / 2, 0.0, 0.0])
    out = exp_point(SPHERE_EMB, TangentVector(p, h), steps=1000)
    assert np.max(np.abs(out - great_circle(p, h, 1.0))) < 1e-8


def test_exp_homogeneity_in_time():
    rng = np.random.default_rng(4)
    p = SPHERE_EMB.random_points(rng, 1)[0]
    h = SPHERE_EMB.project(p, rng.uniform(-1, 1, 3))
    xs, _ = integrate_spray(SPHERE_EMB, p, h, 1000, record_every=250)
    for j, t in enumerate((0.25, 0.5, 0.75, 1.0), start=1):
        scaled = exp_point(SPHERE_EMB, TangentVector(p, t * h), steps=1000)
        assert np.max(np.abs(scaled - xs[j])) < 1e-9


def test_exp_speed_conservation_chart():
    x = np.array([np.pi / 2, 0.0])
    v = np.array([0.3, 0.4])
    xs, vs = integrate_spray(SPHERE_CHART, x, v, 1000, record_every=100)
    g = SPHERE_CHART.metric(xs)
    speeds = np.einsum("tij,ti,tj->t", g, vs, vs)
    assert np.max(np.abs(speeds - speeds[0])) / speeds[0] < 1e-8


def test_exp_reports_domain_exit_with_time():
    x = np.array([0.3, 0.0])
    h = np.array([-0.5, 0.0])  # heads into the pole band at t ~ 0.6
    with pytest.raises(DomainExitError, match="geodesic left domain") as err:
        exp_point(SPHERE_CHART, TangentVector(x, h), steps=1000)
    assert 0.55 < err.value.time < 0.65


def test_exp_reports_constraint_blowup_on_embedded_target():
    # one enormous step leaves the sphere far beyond tolerance before any
    # retraction can catch it
    p = np.array([0.0, 0.0, 1.0])
    h = np.array([50.0, 0.0, 0.0])
    with pytest.raises(DomainExitError, match="geodesic left domain"):
        exp_point(SPHERE_EMB, TangentVector(p, h), steps=1)


def test_chart_and_embedded_sphere_geodesics_agree():
    x0 = np.array([np.pi / 2, 0.2])
    h = np.array([0.3, -0.4])
    xs, _ = integrate_spray(SPHERE_CHART, x0, h, 1000, record_every=100)
    p0 = SPHERE_CHART.embedding(x0)
    v0 = SPHERE_CHART.embedding_jacobian(x0) @ h
    ps, _ = integrate_spray(SPHERE_EMB, p0, v0, 1000, record_every=100)
    assert np.max(np.abs(SPHERE_CHART.embedding(xs) - ps)) < 1e-6


# ---------------------------------------------------------------------------
# curvature


def test_curvature_flat_zero():
    rng = np.random.default_rng(5)
    h, k, l = rng.uniform(-1, 1, size=(3, 2))
    out = curvature_point(FLAT2, np.array([0.1, 0.2]), h, k, l)
    assert np.all(out == 0.0)


def test_curvature_antisymmetry_exact():
    rng = np.random.default_rng(6)
    x = HALFPLANE.random_points(rng, 1)[0]
    h, k, l = rng.uniform(-1, 1, size=(3, 2))
    a = curvature_point(HALFPLANE, x, h, k, l)
    b = curvature_point(HALFPLANE, x, k, h, l)
    assert np.array_equal(a, -b)
    assert np.all(curvature_point(HALFPLANE, x, h, h, l) == 0.0)


def test_curvature_first_bianchi():
    rng = np.random.default_rng(7)
    for man in (HALFPLANE, SPHERE_CHART):
        x = man.random_points(rng, 1)[0]
        h, k, l = rng.uniform(-1, 1, size=(3, 2))
        total = (
            curvature_point(man, x, h, k, l)
            + curvature_point(man, x, k, l, h)
            + curvature_point(man, x, l, h, k)
        )
        assert np.max(np.abs(total)) < 1e-8


@pytest.mark.parametrize("radius", [1.0, 2.0])
def test_sphere_sectional_curvature(radius):
    man = make_manifold(f"sphere:r={radius}:rep=chart")
    rng = np.random.default_rng(8)
    x = man.random_points(rng, 4)
    h = rng.uniform(-1, 1, size=(4, 2))
    k = rng.uniform(-1, 1, size=(4, 2))
    sec = sectional_curvature(man, x, h, k)
    assert np.max(np.abs(sec - 1.0 / radius**2)) < 1e-6


def test_halfplane_sectional_curvature():
    rng = np.random.default_rng(9)
    x = HALFPLANE.random_points(rng, 4)
    h = rng.uniform(-1, 1, size=(4, 2))
    k = rng.uniform(-1, 1, size=(4, 2))
    sec = sectional_curvature(HALFPLANE, x, h, k)
    assert np.max(np.abs(sec + 1.0)) < 1e-6


def test_curvature_with_fd_jacobian_fallback():
    no_jac = ChartManifold(
        dim=2,
        metric=HALFPLANE.metric,
        christoffel=HALFPLANE.christoffel,
        chart_domain=HALFPLANE.chart_domain,
    )
    x = np.array([0.4, 1.3])
    h, k = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert abs(sectional_curvature(no_jac, x, h, k) + 1.0) < 1e-6


# ---------------------------------------------------------------------------
# parallel transport


def test_transport_flat_is_identity():
    ts = np.linspace(0, 1, 50)
    curve = np.stack([ts, ts**2], axis=-1)
    v0 = np.array([0.3, -0.7])
    out = parallel_transport_point(FLAT2, curve, v0)
    assert np.array_equal(out, v0)


def test_transport_zero_length_curve():
    p = np.array([0.0, 0.0, 1.0])
    v0 = np.array([0.5, 0.5, 0.0])
    assert np.array_equal(parallel_transport_point(SPHERE_EMB, p[None, :], v0), v0)


def octant_loop(samples_per_arc):
    def arc(p, q, n):
        theta = np.arccos(np.clip(p @ q, -1, 1))
        w = q - np.cos(theta) * p
        w = w / np.linalg.norm(w)
        ts = np.linspace(0.0, theta, n)
        return np.cos(ts)[:, None] * p + np.sin(ts)[:, None] * w

    north = np.array([0.0, 0.0, 1.0])
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0])
    n = samples_per_arc
    return np.vstack([arc(north, a, n), arc(a, b, n)[1:], arc(b, north, n)[1:]])


def test_transport_sphere_triangle_holonomy():
    # three right angles enclose area pi/2; the loop below turns the
    # transported vector by +pi/2 about the outward normal at the start
    loop = octant_loop(3334)  # ~1e4 steps in total
    v0 = np.array([1.0, 0.0, 0.0])
    out = parallel_transport_point(SPHERE_EMB, loop, v0)
    assert np.max(np.abs(out - np.array([0.0, 1.0, 0.0]))) < 1e-4
    assert abs(np.linalg.norm(out) - 1.0) < 1e-8


def test_transport_preserves_metric_norm_halfplane():
    ts = np.linspace(0.0, 1.0, 2000)
    curve = np.stack([np.sin(ts), 1.0 + 0.5 * ts**2], axis=-1)
    v0 = np.array([0.4, 0.9])
    out = parallel_transport_point(HALFPLANE, curve, v0)
    g0 = HALFPLANE.metric(curve[0])
    g1 = HALFPLANE.metric(curve[-1])
    assert abs(out @ g1 @ out - v0 @ g0 @ v0) < 1e-8


def test_transport_rejects_curve_outside_domain():
    curve = np.array([[0.0, 1.0], [0.0, -1.0]])
    with pytest.raises(DomainExitError, match="curve left domain"):
        parallel_transport_point(HALFPLANE, curve, np.array([1.0, 0.0]))


# ---------------------------------------------------------------------------
# registry


def test_registry_rejects_bad_parameters():
    with pytest.raises(ValueError, match="invalid parameter"):
        make_manifold("sphere:r=-1")
    with pytest.raises(ValueError, match="invalid parameter"):
        make_manifold("flat:n=0")
    with pytest.raises(ValueError, match="invalid parameter"):
        make_manifold("sphere:radius=2")
    with pytest.raises(ValueError, match="unknown manifold"):
        make_manifold("torus")
    with pytest.raises(ValueError, match="invalid parameter"):
        make_manifold("halfplane:r=1")


def test_registry_defaults_and_names():
    assert make_manifold("sphere").name == "sphere:r=1.0:rep=embedded"
    assert make_manifold("flat").name == "flat:n=2:rep=chart"
    assert make_manifold("sphere:rep=chart").dim == 2
    assert make_manifold("flat:n=3:rep=embedded").ambient_dim == 3


def test_sphere_chart_domain_excludes_pole_band():
    assert not SPHERE_CHART.in_domain(np.array([5e-4, 0.0]))
    assert SPHERE_CHART.in_domain(np.array([0.5, 0.0]))
