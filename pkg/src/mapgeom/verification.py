"""Independent numerical oracles for the lifted geometry.

Each oracle re-derives a quantity through a code path separate from the
primary formulas: Christoffel symbols from a five-point metric stencil,
curvature from nested finite differences of the connector, and the
Levi-Civita identification from first variations of the metric.  Nothing
here shares caches or stencils with :mod:`mapgeom.manifold`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ChartBoundaryError
from .manifold import (
    ChartManifold,
    EmbeddedManifold,
    Manifold,
    SecondTangentVector,
    _gamma_pair,
    connector,
    curvature_point,
    integrate_spray,
)
from .mapspace import MapField, QuadratureDomain, TangentField, l2_inner

_ORACLE_STEP = 1e-4  # five-point stencil step, fixed


@dataclass(frozen=True)
class OracleReport:
    """Result of one oracle check; ``passed`` iff the error is in tolerance."""

    check_name: str
    max_abs_error: float
    tolerance: float
    passed: bool
    instance_count: int

    @staticmethod
    def from_error(name: str, err: float, tol: float, count: int) -> "OracleReport":
        err = float(err)
        return OracleReport(name, err, float(tol), err <= tol, int(count))

    def to_json(self) -> dict:
        return {
            "check_name": self.check_name,
            "max_abs_error": self.max_abs_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "instance_count": self.instance_count,
        }


def format_report_table(reports) -> str:
    """Fixed-width pass/fail table for terminal output."""
    name_w = max(len(r.check_name) for r in reports)
    lines = []
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        lines.append(
            f"{r.check_name:<{name_w}}  {status}  max_err={r.max_abs_error:.3e}"
            f"  tol={r.tolerance:.1e}  n={r.instance_count}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Christoffel oracle


def oracle_christoffel(man: ChartManifold, x) -> np.ndarray:
    """Levi-Civita symbols from a five-point stencil of the metric.

    Independent of :func:`mapgeom.manifold.christoffel_from_metric`:
    different stencil (five-point, fixed step 1e-4) and no shared
    intermediate values.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(man.in_domain(x)):
        raise ChartBoundaryError("chart boundary: oracle point outside chart domain")
    n = x.shape[-1]
    step = _ORACLE_STEP
    cols = []
    for m in range(n):
        vals = []
        for mult in (-2.0, -1.0, 1.0, 2.0):
            xs = x.copy()
            xs[..., m] += mult * step
            if not np.all(man.in_domain(xs)):
                raise ChartBoundaryError("chart boundary: oracle stencil leaves chart domain")
            vals.append(np.asarray(man.metric(xs)))
        gm2, gm1, gp1, gp2 = vals
        cols.append((-gp2 + 8.0 * gp1 - 8.0 * gm1 + gm2) / (12.0 * step))
    dg = np.stack(cols, axis=-1)  # (..., a, b, m) = d_m g_ab
    ginv = np.linalg.inv(np.asarray(man.metric(x)))
    t1 = np.einsum("...lkj->...ljk", dg)
    t3 = np.einsum("...jkl->...ljk", dg)
    return 0.5 * np.einsum("...il,...ljk->...ijk", ginv, t1 + dg - t3)


# ---------------------------------------------------------------------------
# curvature commutator oracle


def oracle_curvature_commutator(man: ChartManifold, x, h, k, l) -> np.ndarray:
    """R(h, k) l from nested covariant derivatives.

    Extends h, k, l to constant-coefficient vector fields, so the bracket
    term vanishes, and evaluates nabla_h nabla_k L - nabla_k nabla_h L
    with central finite differences of the connector.
    """
    if not isinstance(man, ChartManifold):
        raise TypeError("the commutator oracle needs a chart representation")
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    if x.ndim != 1:
        raise ValueError("the commutator oracle works one point at a time")

    def covd_const(y, a):
        # nabla_a L at y for the constant extension L == l
        xi = SecondTangentVector(y, l, a, np.zeros_like(l))
        return connector(man, xi).vec

    def covd_of_field(direction, field):
        delta = np.cbrt(np.finfo(float).eps) * max(1.0, float(np.max(np.abs(x))))
        delta /= max(1.0, float(np.max(np.abs(direction))))
        dW = (field(x + delta * direction) - field(x - delta * direction)) / (2.0 * delta)
        xi = SecondTangentVector(x, field(x), direction, dW)
        return connector(man, xi).vec

    inner_k = lambda y: covd_const(y, k)
    inner_h = lambda y: covd_const(y, h)
    return covd_of_field(h, inner_k) - covd_of_field(k, inner_h)


# ---------------------------------------------------------------------------
# first-variation oracle


def oracle_first_variation(q: MapField, h: TangentField, k: TangentField, m: TangentField):
    """Both sides of the Levi-Civita identification of the L2 metric.

    The left side is the first-variation combination
    ``(D_m G(h,k) - D_h G(k,m) - D_k G(m,h)) / 2`` computed by central
    differences of the metric under base-field perturbations; the right
    side is the quadrature of the pointwise Christoffel action on (h, k)
    paired with m, with the sign matching the connector convention.
    Returns ``(lhs, rhs)``.
    """
    man = q.manifold
    if not isinstance(man, ChartManifold):
        raise TypeError("the first-variation oracle needs a chart representation")

    def directional(direction: TangentField, a: TangentField, b: TangentField) -> float:
        scale = np.maximum(1.0, np.max(np.abs(q.values)))
        dscale = np.maximum(1.0, np.max(np.abs(direction.vecs)))
        delta = np.cbrt(np.finfo(float).eps) * scale / dscale
        try:
            qp = MapField(q.domain, man, q.values + delta * direction.vecs)
            qm = MapField(q.domain, man, q.values - delta * direction.vecs)
        except ValueError as exc:
            raise ChartBoundaryError(f"chart exit during perturbation: {exc}") from exc
        gp = l2_inner(qp, TangentField(qp, a.vecs), TangentField(qp, b.vecs))
        gm = l2_inner(qm, TangentField(qm, a.vecs), TangentField(qm, b.vecs))
        return (gp - gm) / (2.0 * delta)

    lhs = 0.5 * (directional(m, h, k) - directional(h, k, m) - directional(k, m, h))
    gamma = man.christoffel_eval(q.values)
    corr = _gamma_pair(gamma, h.vecs, k.vecs)
    g = np.asarray(man.metric(q.values))
    terms = q.domain.weights * np.einsum("sij,si,sj->s", g, corr, m.vecs)
    rhs = -math.fsum(terms.tolist())
    return lhs, rhs


# ---------------------------------------------------------------------------
# connector axiom sweep


def _random_tangents(man: Manifold, rng, points: np.ndarray, count: int) -> np.ndarray:
    raw = rng.uniform(-1.0, 1.0, size=(count,) + points.shape)
    if isinstance(man, EmbeddedManifold):
        return np.stack([man.project(points, r) for r in raw])
    return raw


def _connector_vec(man: Manifold, x, h, k, l) -> np.ndarray:
    return connector(man, SecondTangentVector(x, h, k, l)).vec


def _max_rows(err: np.ndarray) -> float:
    return float(np.max(np.abs(err))) if err.size else 0.0


def run_axiom_sweep(man: Manifold, instances: int = 100, seed: int = 0, threads: int = 1):
    """Evaluate the four connector axioms on seeded random valid inputs.

    Returns one :class:`OracleReport` per axiom (vertical-lift projection,
    linearity for each vector bundle structure, flip symmetry), each at
    tolerance 1e-10.  Identical seeds give bit-identical reports for any
    thread count: inputs are drawn once in a fixed order and the
    evaluation is pure.
    """
    if instances < 1:
        raise ValueError("instances must be >= 1")
    rng = np.random.default_rng(seed)
    x = man.random_points(rng, instances)
    h, k, l, h2, k2, l2 = (_random_tangents(man, rng, x, 1)[0] for _ in range(6))
    a = rng.uniform(-1.0, 1.0, size=(instances, 1))
    b = rng.uniform(-1.0, 1.0, size=(instances, 1))

    def eval_chunk(sl):
        xs, hs, ks, ls = x[sl], h[sl], k[sl], l[sl]
        h2s, k2s, l2s, as_, bs = h2[sl], k2[sl], l2[sl], a[sl], b[sl]
        zero = np.zeros_like(hs)
        e1 = _connector_vec(man, xs, hs, zero, ks) - ks
        lhs2 = _connector_vec(man, xs, hs, as_ * ks + bs * k2s, as_ * ls + bs * l2s)
        rhs2 = as_ * _connector_vec(man, xs, hs, ks, ls) + bs * _connector_vec(
            man, xs, hs, k2s, l2s
        )
        lhs3 = _connector_vec(man, xs, as_ * hs + bs * h2s, ks, as_ * ls + bs * l2s)
        rhs3 = as_ * _connector_vec(man, xs, hs, ks, ls) + bs * _connector_vec(
            man, xs, h2s, ks, l2s
        )
        e4 = _connector_vec(man, xs, ks, hs, ls) - _connector_vec(man, xs, hs, ks, ls)
        return (
            _max_rows(e1),
            _max_rows(lhs2 - rhs2),
            _max_rows(lhs3 - rhs3),
            _max_rows(e4),
        )

    chunk = max(1, math.ceil(instances / max(1, threads)))
    slices = [slice(i, min(i + chunk, instances)) for i in range(0, instances, chunk)]
    if threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(eval_chunk, slices))
    else:
        results = [eval_chunk(sl) for sl in slices]
    errs = [max(r[i] for r in results) for i in range(4)]
    names = [
        "connector_vertical_lift",
        "connector_linear_first_structure",
        "connector_linear_second_structure",
        "connector_flip_symmetry",
    ]
    return [
        OracleReport.from_error(names[i], errs[i], 1e-10, instances) for i in range(4)
    ]


# ---------------------------------------------------------------------------
# full check battery (used by the verify subcommand)


def _speed_drift(man: Manifold, rng, count: int, steps: int = 500) -> float:
    x = man.random_points(rng, count)
    v = _random_tangents(man, rng, x, 1)[0]
    if isinstance(man, ChartManifold):
        g = np.asarray(man.metric(x))
        speed = np.sqrt(np.einsum("sij,si,sj->s", g, v, v))
    else:
        speed = np.linalg.norm(v, axis=-1)
    v = 0.2 * v / np.maximum(speed, 1e-9)[:, None]
    xs, vs = integrate_spray(man, x, v, steps, record_every=steps // 10)
    if isinstance(man, ChartManifold):
        gs = np.asarray(man.metric(xs))
        energies = np.einsum("tsij,tsi,tsj->ts", gs, vs, vs)
    else:
        energies = np.einsum("tsi,tsi->ts", vs, vs)
    e0 = energies[0]
    return float(np.max(np.abs(energies - e0) / e0))


def standard_checks(man: Manifold, instances: int = 100, seed: int = 0, threads: int = 1):
    """The full oracle battery for one registry manifold."""
    reports = list(run_axiom_sweep(man, instances, seed, threads))
    rng = np.random.default_rng(seed + 1)
    if isinstance(man, ChartManifold):
        pts = man.random_points(rng, min(instances, 25))
        err = _max_rows(oracle_christoffel(man, pts) - man.christoffel_eval(pts))
        reports.append(OracleReport.from_error("christoffel_vs_metric_stencil", err, 1e-5, len(pts)))
        count = min(instances, 50)
        xs = man.random_points(rng, count)
        hs = rng.uniform(-1.0, 1.0, size=xs.shape)
        ks = rng.uniform(-1.0, 1.0, size=xs.shape)
        ls = rng.uniform(-1.0, 1.0, size=xs.shape)
        err = 0.0
        for i in range(count):
            com = oracle_curvature_commutator(man, xs[i], hs[i], ks[i], ls[i])
            ref = curvature_point(man, xs[i], hs[i], ks[i], ls[i])
            err = max(err, float(np.max(np.abs(com - ref))))
        reports.append(OracleReport.from_error("curvature_vs_commutator", err, 1e-3, count))
        count = min(instances, 25)
        err = 0.0
        for _ in range(count):
            mq = 8
            dom = QuadratureDomain(rng.uniform(0.05, 1.0, size=mq))
            q = MapField(dom, man, man.random_points(rng, mq))
            fields = [
                TangentField(q, rng.uniform(-1.0, 1.0, size=(mq, man.dim))) for _ in range(3)
            ]
            lhs, rhs = oracle_first_variation(q, *fields)
            err = max(err, abs(lhs - rhs))
        reports.append(OracleReport.from_error("first_variation_identity", err, 1e-4, count))
    else:
        pts = man.random_points(rng, min(instances, 50))
        P = np.asarray(man.tangent_projector(pts))
        err = _max_rows(np.einsum("sij,sjk->sik", P, P) - P)
        reports.append(OracleReport.from_error("projector_idempotent", err, 1e-10, len(pts)))
        err = _max_rows(P - np.swapaxes(P, -1, -2))
        reports.append(OracleReport.from_error("projector_symmetric", err, 1e-10, len(pts)))
        vs = man.project(pts, rng.uniform(-1.0, 1.0, size=pts.shape))
        delta = 1e-6
        resid = (man.residual(pts + delta * vs) - man.residual(pts - delta * vs)) / (2 * delta)
        reports.append(
            OracleReport.from_error("projector_tangency", _max_rows(resid), 1e-4, len(pts))
        )
        err = _max_rows(man.retract(pts) - pts)
        reports.append(OracleReport.from_error("retraction_fixpoint", err, 1e-9, len(pts)))
    reports.append(
        OracleReport.from_error(
            "geodesic_speed_drift", _speed_drift(man, rng, min(instances, 20)), 1e-8,
            min(instances, 20),
        )
    )
    return reports
