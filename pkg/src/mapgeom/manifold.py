"""Finite-dimensional Riemannian targets and their pointwise geometry.

Two representations of a target manifold are supported:

* :class:`ChartManifold` works in local coordinates with a metric callback
  and (optionally analytic) Christoffel symbols.
* :class:`EmbeddedManifold` works with ambient coordinates, an orthogonal
  tangent projector, and a retraction for drift control.

Sign conventions: ``christoffel`` callbacks return the classical
Levi-Civita symbols of the metric, the covariant derivative acts as
``DY.X + Gamma(X, Y)`` in coordinates, geodesics solve
``q'' + Gamma(q', q') = 0``, and the connector maps ``(x, h; k, l)`` to
``(x, l + Gamma(k, h))``.

All manifold callbacks are vectorized: a point argument has shape
``(..., n)`` and results carry the same leading axes.  Use
:func:`from_pointwise` to wrap a plain single-point callback.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import (
    ChartBoundaryError,
    DegenerateMetricError,
    DomainExitError,
    OffManifoldError,
    ShootingError,
)

_EPS = float(np.finfo(float).eps)
_FD_REL_STEP = float(np.cbrt(_EPS))

POLE_BAND = 1e-3  # excluded band around chart singularities


# ---------------------------------------------------------------------------
# tangent containers


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector: base point and vector, in matching coordinates."""

    base: np.ndarray
    vec: np.ndarray


@dataclass(frozen=True)
class SecondTangentVector:
    """An element (x, h; k, l) of the second tangent bundle.

    ``base`` is the point x, ``vec`` the tangent h at x, ``dbase`` the
    variation k of the point, ``dvec`` the variation l of the tangent.
    """

    base: np.ndarray
    vec: np.ndarray
    dbase: np.ndarray
    dvec: np.ndarray


def vertical_lift(h: TangentVector, k: np.ndarray) -> SecondTangentVector:
    """vl(h, k) = (x, h; 0, k)."""
    return SecondTangentVector(h.base, h.vec, np.zeros_like(h.vec), np.asarray(k))


def canonical_flip(xi: SecondTangentVector) -> SecondTangentVector:
    """kappa(x, h; k, l) = (x, k; h, l)."""
    return SecondTangentVector(xi.base, xi.dbase, xi.vec, xi.dvec)


# ---------------------------------------------------------------------------
# manifold representations


@dataclass(frozen=True)
class ChartManifold:
    """Target manifold in a single chart.

    Parameters
    ----------
    dim:
        Coordinate dimension n.
    metric:
        Callback ``x (..., n) -> (..., n, n)``, symmetric positive definite
        on the chart domain.
    christoffel:
        Optional callback ``x -> (..., n, n, n)`` with ``G[..., i, j, k]``
        the classical symbols, symmetric in (j, k).  Derived from ``metric``
        by central differences when omitted.
    christoffel_jacobian:
        Optional callback ``x -> (..., n, n, n, n)``, derivative index last.
        Derived from ``christoffel`` by central differences when omitted.
    chart_domain:
        Optional predicate ``x -> (...) bool``; defaults to all-true.
    embedding / embedding_jacobian:
        Optional maps into an ambient space, used for explicit conversion
        to an embedded representation.
    closed_form_log:
        Optional exact log map ``(x0, x1) -> v`` used to seed shooting.
    sample_box:
        Optional (lo, hi) arrays bounding a safe region for random sweeps.
    name:
        Canonical registry string when built from the registry.
    """

    dim: int
    metric: Callable
    christoffel: Optional[Callable] = None
    christoffel_jacobian: Optional[Callable] = None
    chart_domain: Optional[Callable] = None
    embedding: Optional[Callable] = None
    embedding_jacobian: Optional[Callable] = None
    closed_form_log: Optional[Callable] = None
    sample_box: Optional[tuple] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")

    def in_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.chart_domain is None:
            return np.ones(x.shape[:-1], dtype=bool)
        return np.asarray(self.chart_domain(x), dtype=bool)

    def christoffel_eval(self, x) -> np.ndarray:
        if self.christoffel is not None:
            return np.asarray(self.christoffel(np.asarray(x, dtype=float)))
        return christoffel_from_metric(self, x)

    def christoffel_jacobian_eval(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.christoffel_jacobian is not None:
            return np.asarray(self.christoffel_jacobian(x))
        return _central_diff(self.christoffel_eval, x)

    def random_points(self, rng, m: int) -> np.ndarray:
        if self.sample_box is None:
            raise ValueError("manifold has no sample_box for random sweeps")
        lo, hi = self.sample_box
        return rng.uniform(lo, hi, size=(m, self.dim))


@dataclass(frozen=True)
class EmbeddedManifold:
    """Target manifold given by an embedding into Euclidean space.

    ``embed_check`` returns the residual of the defining constraint
    (scalar or vector per point), ``tangent_projector`` the orthogonal
    projector onto the tangent space, and ``retraction(p, v)`` the closest
    point on the manifold to ``p + v`` (used only to control drift).
    """

    ambient_dim: int
    intrinsic_dim: int
    embed_check: Callable
    tangent_projector: Callable
    retraction: Callable
    sample_points: Optional[Callable] = None
    closed_form_log: Optional[Callable] = None
    name: Optional[str] = None
    on_manifold_tol: float = 1e-6

    def residual(self, p) -> np.ndarray:
        """Max-abs constraint residual per point, shape (...)."""
        r = np.asarray(self.embed_check(np.asarray(p, dtype=float)))
        if r.ndim > np.asarray(p).ndim - 1:
            r = np.max(np.abs(r), axis=-1)
        else:
            r = np.abs(r)
        return r

    def on_manifold(self, p) -> np.ndarray:
        return self.residual(p) <= self.on_manifold_tol

    def project(self, p, v) -> np.ndarray:
        P = np.asarray(self.tangent_projector(np.asarray(p, dtype=float)))
        return np.einsum("...ij,...j->...i", P, np.asarray(v, dtype=float))

    def retract(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.asarray(self.retraction(p, np.zeros_like(p)))

    def tangency_residual(self, p, v) -> np.ndarray:
        return np.max(np.abs(self.project(p, v) - np.asarray(v)), axis=-1)

    def random_points(self, rng, m: int) -> np.ndarray:
        if self.sample_points is None:
            raise ValueError("manifold has no point sampler for random sweeps")
        return self.sample_points(rng, m)


Manifold = ChartManifold | EmbeddedManifold


def from_pointwise(fn: Callable) -> Callable:
    """Wrap a single-point callback so it accepts (..., n) batches."""

    def batched(x, *extra):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return np.asarray(fn(x, *extra))
        lead = x.shape[:-1]
        flat = x.reshape(-1, x.shape[-1])
        out = np.stack([np.asarray(fn(row, *extra)) for row in flat])
        return out.reshape(lead + out.shape[1:])

    return batched


# ---------------------------------------------------------------------------
# finite differences and Christoffel symbols


def _fd_scale(x) -> np.ndarray:
    """Per-point FD step cbrt(eps) * max(1, |x|_inf), shape (...)."""
    x = np.asarray(x, dtype=float)
    return _FD_REL_STEP * np.maximum(1.0, np.max(np.abs(x), axis=-1))


def _central_diff(fn: Callable, x: np.ndarray) -> np.ndarray:
    """Central difference of a batched callback; derivative index appended."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    delta = _fd_scale(x)
    cols = []
    for m in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[..., m] += delta
        xm[..., m] -= delta
        df = (np.asarray(fn(xp)) - np.asarray(fn(xm)))
        cols.append(df / (2.0 * delta[(...,) + (None,) * (df.ndim - delta.ndim)]))
    return np.stack(cols, axis=-1)


def christoffel_from_metric(man: ChartManifold, x) -> np.ndarray:
    """Classical Levi-Civita symbols from metric derivatives.

    Returns ``G[..., i, j, k] = 1/2 g^{il} (d_j g_lk + d_k g_lj - d_l g_jk)``
    using central differences with step ``cbrt(eps) * max(1, |x|)``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(man.in_domain(x)):
        raise ChartBoundaryError("chart boundary: point outside chart domain")
    n = x.shape[-1]
    delta = _fd_scale(x)
    for m in range(n):
        for sign in (+1.0, -1.0):
            xs = x.copy()
            xs[..., m] += sign * delta
            if not np.all(man.in_domain(xs)):
                raise ChartBoundaryError(
                    "chart boundary: finite-difference stencil leaves chart domain"
                )
    g = np.asarray(man.metric(x))
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError(f"degenerate metric: {exc}") from exc
    dg = _central_diff(man.metric, x)  # (..., a, b, m) = d_m g_ab
    t1 = np.einsum("...lkj->...ljk", dg)  # d_j g_lk
    t2 = dg  # d_k g_lj
    t3 = np.einsum("...jkl->...ljk", dg)  # d_l g_jk
    return 0.5 * np.einsum("...il,...ljk->...ijk", ginv, t1 + t2 - t3)


def _gamma_pair(gamma, a, b) -> np.ndarray:
    """Contract Christoffel symbols with two vectors: Gamma(a, b)."""
    return np.einsum("...ijk,...j,...k->...i", gamma, a, b)


# ---------------------------------------------------------------------------
# connector


def connector_apply(man: ChartManifold, xi: SecondTangentVector) -> TangentVector:
    """Connector of the Levi-Civita derivative in chart coordinates.

    Maps (x, h; k, l) to the tangent vector l + Gamma(k, h) at x.
    """
    x = np.asarray(xi.base, dtype=float)
    if not np.all(man.in_domain(x)):
        raise ChartBoundaryError("chart boundary: connector base point outside domain")
    gamma = man.christoffel_eval(x)
    return TangentVector(x, np.asarray(xi.dvec, dtype=float) + _gamma_pair(gamma, xi.dbase, xi.vec))


def connector_apply_embedded(man: EmbeddedManifold, xi: SecondTangentVector) -> TangentVector:
    """Ambient connector followed by the orthogonal tangent projection."""
    p = np.asarray(xi.base, dtype=float)
    if not np.all(man.on_manifold(p)):
        raise OffManifoldError("point off manifold: embedding residual above tolerance")
    return TangentVector(p, man.project(p, xi.dvec))


def connector(man: Manifold, xi: SecondTangentVector) -> TangentVector:
    """Representation-dispatching connector."""
    if isinstance(man, ChartManifold):
        return connector_apply(man, xi)
    return connector_apply_embedded(man, xi)


# ---------------------------------------------------------------------------
# geodesic spray and exponential map


def _chart_accel(man: ChartManifold, x, v) -> np.ndarray:
    return -_gamma_pair(man.christoffel_eval(x), v, v)


def _embedded_accel(man: EmbeddedManifold, x, v) -> np.ndarray:
    """Geodesic acceleration (DP(x)[v]) v from differentiating the projector."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    delta = _fd_scale(x) / np.maximum(1.0, np.max(np.abs(v), axis=-1))
    step = delta[..., None] * v
    Pp = np.asarray(man.tangent_projector(x + step))
    Pm = np.asarray(man.tangent_projector(x - step))
    dP = (Pp - Pm) / (2.0 * delta[..., None, None])
    return np.einsum("...ij,...j->...i", dP, v)


def spray_accel(man: Manifold, x, v) -> np.ndarray:
    """Vertical part of the geodesic spray at (x, v)."""
    if isinstance(man, ChartManifold):
        return _chart_accel(man, x, v)
    return _embedded_accel(man, x, v)


def spray_eval(man: Manifold, v: TangentVector) -> SecondTangentVector:
    """Geodesic spray (x, h; h, a) with a the geodesic acceleration."""
    x = np.asarray(v.base, dtype=float)
    h = np.asarray(v.vec, dtype=float)
    return SecondTangentVector(x, h, h.copy(), spray_accel(man, x, h))


def _first_bad_index(ok: np.ndarray):
    """Index of the first False entry, or None for scalar/empty data."""
    if ok.ndim == 0:
        return None
    bad = np.argwhere(~ok)
    return None if bad.size == 0 else int(bad[0][0])


def _check_state(man: Manifold, x, t: float):
    finite = np.all(np.isfinite(x), axis=-1)
    if isinstance(man, ChartManifold):
        ok = finite & man.in_domain(x)
    else:
        ok = finite & man.on_manifold(x)
    if not np.all(ok):
        raise DomainExitError(
            f"geodesic left domain at t={t:.6g}", time=t, sample=_first_bad_index(ok)
        )


def integrate_spray(man: Manifold, x0, v0, steps: int, record_every: Optional[int] = None):
    """Classical fixed-step RK4 integration of the spray over unit time.

    Returns ``(x, v)`` at t = 1, or the stacked snapshot arrays
    ``(xs, vs)`` (leading time axis) when ``record_every`` is given.
    Embedded targets are retracted after every step and the velocity is
    re-projected onto the tangent space.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    _check_state(man, x, 0.0)
    embedded = isinstance(man, EmbeddedManifold)
    dt = 1.0 / steps
    snaps = None
    if record_every is not None:
        snaps = ([x.copy()], [v.copy()])
    for s in range(steps):
        k1x = v
        k1v = spray_accel(man, x, v)
        k2x = v + (0.5 * dt) * k1v
        k2v = spray_accel(man, x + (0.5 * dt) * k1x, k2x)
        k3x = v + (0.5 * dt) * k2v
        k3v = spray_accel(man, x + (0.5 * dt) * k2x, k3x)
        k4x = v + dt * k3v
        k4v = spray_accel(man, x + dt * k3x, k4x)
        x_new = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        t = (s + 1) * dt
        _check_state(man, x_new, t)
        if embedded:
            # retract only rows that moved, so zero-velocity samples stay
            # bitwise fixed
            moved = np.any(x_new != x, axis=-1)
            retracted = man.retract(x_new)
            x_new = np.where(moved[..., None], retracted, x_new)
            v = np.where(moved[..., None], man.project(x_new, v), v)
        x = x_new
        if snaps is not None and (s + 1) % record_every == 0:
            snaps[0].append(x.copy())
            snaps[1].append(v.copy())
    if snaps is not None:
        return np.stack(snaps[0]), np.stack(snaps[1])
    return x, v


def exp_point(man: Manifold, v: TangentVector, steps: int = 1000) -> np.ndarray:
    """Endpoint of the unit-time geodesic with initial data (x, h)."""
    x, _ = integrate_spray(man, v.base, v.vec, steps)
    return x


# ---------------------------------------------------------------------------
# curvature


def curvature_point(man: ChartManifold, x, h, k, l) -> np.ndarray:
    """Curvature tensor R(h, k) l in chart coordinates.

    Computed from the Christoffel symbols and their derivatives; with the
    classical symbols this is R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y
    nabla_X Z - nabla_[X,Y] Z, so the unit sphere has sectional
    curvature +1.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(man.in_domain(x)):
        raise ChartBoundaryError("chart boundary: curvature base point outside domain")
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    gamma = man.christoffel_eval(x)
    dgamma = man.christoffel_jacobian_eval(x)  # (..., i, j, k, m)
    quad = _gamma_pair(gamma, h, _gamma_pair(gamma, k, l)) - _gamma_pair(
        gamma, k, _gamma_pair(gamma, h, l)
    )
    deriv = np.einsum("...ijkm,...m,...j,...k->...i", dgamma, h, k, l) - np.einsum(
        "...ijkm,...m,...j,...k->...i", dgamma, k, h, l
    )
    return quad + deriv


def sectional_curvature(man: ChartManifold, x, h, k) -> np.ndarray:
    """g(R(h,k)k, h) / (|h|^2 |k|^2 - g(h,k)^2)."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    g = np.asarray(man.metric(x))
    R = curvature_point(man, x, h, k, k)
    num = np.einsum("...ij,...i,...j->...", g, R, h)
    hh = np.einsum("...ij,...i,...j->...", g, h, h)
    kk = np.einsum("...ij,...i,...j->...", g, k, k)
    hk = np.einsum("...ij,...i,...j->...", g, h, k)
    return num / (hh * kk - hk**2)


# ---------------------------------------------------------------------------
# parallel transport


def transport_ode_rhs(man: Manifold, x, xdot, X) -> np.ndarray:
    """Right-hand side of the parallel transport equation d X / ds."""
    if isinstance(man, ChartManifold):
        return -_gamma_pair(man.christoffel_eval(x), xdot, X)
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    delta = _fd_scale(x) / np.maximum(1.0, np.max(np.abs(xdot), axis=-1))
    step = delta[..., None] * xdot
    Pp = np.asarray(man.tangent_projector(x + step))
    Pm = np.asarray(man.tangent_projector(x - step))
    dP = (Pp - Pm) / (2.0 * delta[..., None, None])
    return np.einsum("...ij,...j->...i", dP, X)


def transport_along_samples(man: Manifold, points: np.ndarray, v0: np.ndarray) -> np.ndarray:
    """Parallel transport along a sampled curve, one RK4 step per segment.

    ``points`` has shape (S, ..., n) with the time axis first; accuracy is
    controlled by the sampling density.  Transport does not depend on the
    time parametrization, only on the path.
    """
    points = np.asarray(points, dtype=float)
    X = np.array(v0, dtype=float)
    embedded = isinstance(man, EmbeddedManifold)
    for i in range(points.shape[0] - 1):
        p0 = points[i]
        chord = points[i + 1] - p0

        def rhs(s, Y):
            return transport_ode_rhs(man, p0 + s * chord, chord, Y)

        k1 = rhs(0.0, X)
        k2 = rhs(0.5, X + 0.5 * k1)
        k3 = rhs(0.5, X + 0.5 * k2)
        k4 = rhs(1.0, X + k3)
        X = X + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if embedded:
            # re-project only rows that moved, keeping stationary samples
            # bitwise fixed
            moved = np.any(chord != 0.0, axis=-1)
            X = np.where(moved[..., None], man.project(points[i + 1], X), X)
    return X


def parallel_transport_point(man: Manifold, curve: np.ndarray, v0: np.ndarray) -> np.ndarray:
    """Transport v0 along a time-sampled curve in the target manifold.

    ``curve`` is an (S, n) array of points; a zero-length curve (S = 1 or
    all samples equal) returns v0 unchanged.
    """
    curve = np.asarray(curve, dtype=float)
    if curve.ndim != 2:
        raise ValueError("curve must be a (S, n) array of points")
    if isinstance(man, ChartManifold):
        if not np.all(man.in_domain(curve)):
            raise DomainExitError("curve left domain", sample=None)
    else:
        if not np.all(man.on_manifold(curve)):
            raise DomainExitError("curve left domain", sample=None)
    return transport_along_samples(man, curve, np.asarray(v0, dtype=float))


# ---------------------------------------------------------------------------
# registry of built-in targets


def _flat_chart(n: int, name: str) -> ChartManifold:
    eye = np.eye(n)

    def metric(x):
        return np.broadcast_to(eye, np.shape(x)[:-1] + (n, n)).copy()

    def christoffel(x):
        return np.zeros(np.shape(x)[:-1] + (n, n, n))

    def jacobian(x):
        return np.zeros(np.shape(x)[:-1] + (n, n, n, n))

    return ChartManifold(
        dim=n,
        metric=metric,
        christoffel=christoffel,
        christoffel_jacobian=jacobian,
        closed_form_log=lambda x0, x1: np.asarray(x1, dtype=float) - np.asarray(x0, dtype=float),
        sample_box=(-np.ones(n), np.ones(n)),
        name=name,
    )


def _flat_embedded(n: int, name: str) -> EmbeddedManifold:
    eye = np.eye(n)

    def embed_check(p):
        return np.zeros(np.shape(p)[:-1])

    def projector(p):
        return np.broadcast_to(eye, np.shape(p)[:-1] + (n, n)).copy()

    return EmbeddedManifold(
        ambient_dim=n,
        intrinsic_dim=n,
        embed_check=embed_check,
        tangent_projector=projector,
        retraction=lambda p, v: np.asarray(p, dtype=float) + np.asarray(v, dtype=float),
        sample_points=lambda rng, m: rng.uniform(-1.0, 1.0, size=(m, n)),
        closed_form_log=lambda p0, p1: np.asarray(p1, dtype=float) - np.asarray(p0, dtype=float),
        name=name,
    )


def _sphere_embedded(radius: float, name: str) -> EmbeddedManifold:
    def embed_check(p):
        return np.linalg.norm(p, axis=-1) - radius

    def projector(p):
        p = np.asarray(p, dtype=float)
        pp = np.einsum("...i,...i->...", p, p)
        return np.eye(p.shape[-1]) - p[..., :, None] * p[..., None, :] / pp[..., None, None]

    def retraction(p, v):
        q = np.asarray(p, dtype=float) + np.asarray(v, dtype=float)
        return radius * q / np.linalg.norm(q, axis=-1, keepdims=True)

    def log(p0, p1):
        p0 = np.asarray(p0, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        u0 = p0 / radius
        u1 = p1 / radius
        c = np.clip(np.einsum("...i,...i->...", u0, u1), -1.0, 1.0)
        w = u1 - c[..., None] * u0
        s = np.linalg.norm(w, axis=-1)
        antipodal = (s < 1e-12) & (c < 0.0)
        if np.any(antipodal):
            raise ShootingError(
                "log undefined for antipodal sphere points",
                sample=_first_bad_index(~antipodal),
            )
        theta = np.arctan2(s, c)
        factor = np.where(s > 1e-12, theta / np.where(s > 1e-12, s, 1.0), 1.0)
        return radius * factor[..., None] * w

    def sample(rng, m):
        g = rng.normal(size=(m, 3))
        return radius * g / np.linalg.norm(g, axis=-1, keepdims=True)

    return EmbeddedManifold(
        ambient_dim=3,
        intrinsic_dim=2,
        embed_check=embed_check,
        tangent_projector=projector,
        retraction=retraction,
        sample_points=sample,
        closed_form_log=log,
        name=name,
    )


def _sphere_chart(radius: float, name: str) -> ChartManifold:
    r2 = radius * radius

    def metric(x):
        th = np.asarray(x, dtype=float)[..., 0]
        g = np.zeros(np.shape(x)[:-1] + (2, 2))
        g[..., 0, 0] = r2
        g[..., 1, 1] = r2 * np.sin(th) ** 2
        return g

    def christoffel(x):
        th = np.asarray(x, dtype=float)[..., 0]
        G = np.zeros(np.shape(x)[:-1] + (2, 2, 2))
        G[..., 0, 1, 1] = -np.sin(th) * np.cos(th)
        G[..., 1, 0, 1] = G[..., 1, 1, 0] = 1.0 / np.tan(th)
        return G

    def jacobian(x):
        th = np.asarray(x, dtype=float)[..., 0]
        J = np.zeros(np.shape(x)[:-1] + (2, 2, 2, 2))
        J[..., 0, 1, 1, 0] = -np.cos(2.0 * th)
        J[..., 1, 0, 1, 0] = J[..., 1, 1, 0, 0] = -1.0 / np.sin(th) ** 2
        return J

    def domain(x):
        th = np.asarray(x, dtype=float)[..., 0]
        return (th > POLE_BAND) & (th < np.pi - POLE_BAND)

    def embedding(x):
        x = np.asarray(x, dtype=float)
        th, ph = x[..., 0], x[..., 1]
        return radius * np.stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1
        )

    def embedding_jacobian(x):
        x = np.asarray(x, dtype=float)
        th, ph = x[..., 0], x[..., 1]
        J = np.empty(x.shape[:-1] + (3, 2))
        J[..., 0, 0] = np.cos(th) * np.cos(ph)
        J[..., 0, 1] = -np.sin(th) * np.sin(ph)
        J[..., 1, 0] = np.cos(th) * np.sin(ph)
        J[..., 1, 1] = np.sin(th) * np.cos(ph)
        J[..., 2, 0] = -np.sin(th)
        J[..., 2, 1] = 0.0
        return radius * J

    ambient = _sphere_embedded(radius, name="")

    def log(x0, x1):
        p0 = embedding(x0)
        p1 = embedding(x1)
        va = ambient.closed_form_log(p0, p1)
        J = embedding_jacobian(x0)
        JtJ = np.einsum("...ia,...ib->...ab", J, J)
        Jtv = np.einsum("...ia,...i->...a", J, va)
        return np.linalg.solve(JtJ, Jtv[..., None])[..., 0]

    return ChartManifold(
        dim=2,
        metric=metric,
        christoffel=christoffel,
        christoffel_jacobian=jacobian,
        chart_domain=domain,
        embedding=embedding,
        embedding_jacobian=embedding_jacobian,
        closed_form_log=log,
        sample_box=(np.array([0.5, -2.5]), np.array([np.pi - 0.5, 2.5])),
        name=name,
    )


def _halfplane(name: str) -> ChartManifold:
    def metric(x):
        y = np.asarray(x, dtype=float)[..., 1]
        g = np.zeros(np.shape(x)[:-1] + (2, 2))
        g[..., 0, 0] = 1.0 / y**2
        g[..., 1, 1] = 1.0 / y**2
        return g

    def christoffel(x):
        y = np.asarray(x, dtype=float)[..., 1]
        G = np.zeros(np.shape(x)[:-1] + (2, 2, 2))
        G[..., 0, 0, 1] = G[..., 0, 1, 0] = -1.0 / y
        G[..., 1, 0, 0] = 1.0 / y
        G[..., 1, 1, 1] = -1.0 / y
        return G

    def jacobian(x):
        y = np.asarray(x, dtype=float)[..., 1]
        J = np.zeros(np.shape(x)[:-1] + (2, 2, 2, 2))
        J[..., 0, 0, 1, 1] = J[..., 0, 1, 0, 1] = 1.0 / y**2
        J[..., 1, 0, 0, 1] = -1.0 / y**2
        J[..., 1, 1, 1, 1] = 1.0 / y**2
        return J

    def domain(x):
        return np.asarray(x, dtype=float)[..., 1] > POLE_BAND

    def log(a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        a1, a2 = a[..., 0], a[..., 1]
        b1, b2 = b[..., 0], b[..., 1]
        sq = (a1 - b1) ** 2 + (a2 - b2) ** 2
        dist = np.arccosh(1.0 + sq / (2.0 * a2 * b2))
        dx = b1 - a1
        vertical = np.abs(dx) < 1e-14 * np.maximum(1.0, np.abs(a1))
        safe_dx = np.where(vertical, 1.0, dx)
        center = ((b1**2 + b2**2) - (a1**2 + a2**2)) / (2.0 * safe_dx)
        rad = np.hypot(a1 - center, a2)
        alpha_a = np.arctan2(a2, a1 - center)
        alpha_b = np.arctan2(b2, b1 - center)
        sgn = np.sign(alpha_b - alpha_a)
        circ = (dist * sgn * a2 / rad)[..., None] * np.stack([-a2, a1 - center], axis=-1)
        vert = np.stack([np.zeros_like(a2), a2 * np.log(b2 / a2)], axis=-1)
        return np.where(vertical[..., None], vert, circ)

    return ChartManifold(
        dim=2,
        metric=metric,
        christoffel=christoffel,
        christoffel_jacobian=jacobian,
        chart_domain=domain,
        closed_form_log=log,
        sample_box=(np.array([-1.0, 0.5]), np.array([1.0, 2.0])),
        name=name,
    )


def _paraboloid(name: str) -> EmbeddedManifold:
    def embed_check(p):
        p = np.asarray(p, dtype=float)
        return p[..., 2] - p[..., 0] ** 2 - p[..., 1] ** 2

    def normal(p):
        p = np.asarray(p, dtype=float)
        n = np.stack([-2.0 * p[..., 0], -2.0 * p[..., 1], np.ones_like(p[..., 0])], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def projector(p):
        n = normal(p)
        return np.eye(3) - n[..., :, None] * n[..., None, :]

    def retraction(p, v, iters=12):
        # closest point on z = x^2 + y^2; Newton on the 2-variable stationarity
        # system, fixed iteration count for determinism
        q = np.asarray(p, dtype=float) + np.asarray(v, dtype=float)
        a, b, c = q[..., 0], q[..., 1], q[..., 2]
        u, w = a.copy(), b.copy()
        for _ in range(iters):
            s = u * u + w * w - c
            f1 = (u - a) + 2.0 * u * s
            f2 = (w - b) + 2.0 * w * s
            j11 = 1.0 + 2.0 * s + 4.0 * u * u
            j22 = 1.0 + 2.0 * s + 4.0 * w * w
            j12 = 4.0 * u * w
            det = j11 * j22 - j12 * j12
            u = u - (j22 * f1 - j12 * f2) / det
            w = w - (j11 * f2 - j12 * f1) / det
        return np.stack([u, w, u * u + w * w], axis=-1)

    def sample(rng, m):
        xy = rng.uniform(-0.8, 0.8, size=(m, 2))
        z = np.sum(xy**2, axis=-1, keepdims=True)
        return np.concatenate([xy, z], axis=-1)

    return EmbeddedManifold(
        ambient_dim=3,
        intrinsic_dim=2,
        embed_check=embed_check,
        tangent_projector=projector,
        retraction=retraction,
        sample_points=sample,
        name=name,
    )


_REGISTRY_HELP = [
    ("flat", "Euclidean R^n; keys: n (default 2), rep = chart | embedded (default chart)"),
    ("sphere", "round sphere in R^3; keys: r > 0 (default 1.0), rep = chart | embedded (default embedded)"),
    ("halfplane", "hyperbolic upper half-plane, curvature -1; no keys"),
    ("paraboloid", "z = x^2 + y^2 embedded in R^3; no keys"),
]


def list_manifolds():
    """Registry entries as (name, description) pairs."""
    return list(_REGISTRY_HELP)


def _parse_kv(parts, allowed):
    kv = {}
    for part in parts:
        if "=" not in part:
            raise ValueError(f"invalid parameter {part!r}: expected key=value")
        key, _, value = part.partition("=")
        if key not in allowed:
            raise ValueError(f"invalid parameter {key!r}: allowed keys are {sorted(allowed)}")
        if key in kv:
            raise ValueError(f"invalid parameter {key!r}: given twice")
        kv[key] = value
    return kv


def make_manifold(spec: str) -> Manifold:
    """Build a registry manifold from a string like ``sphere:r=1.0:rep=embedded``.

    The grammar is the registry name followed by colon-separated key=value
    pairs; see :func:`list_manifolds` for the available names and keys.
    """
    parts = [p for p in str(spec).split(":") if p != ""]
    if not parts:
        raise ValueError("empty manifold string")
    head, rest = parts[0], parts[1:]
    if head == "flat":
        kv = _parse_kv(rest, {"n", "rep"})
        try:
            n = int(kv.get("n", "2"))
        except ValueError:
            raise ValueError(f"invalid parameter n={kv['n']!r}: expected an integer") from None
        if n < 1:
            raise ValueError(f"invalid parameter n={n}: must be positive")
        rep = kv.get("rep", "chart")
        name = f"flat:n={n}:rep={rep}"
        if rep == "chart":
            return _flat_chart(n, name)
        if rep == "embedded":
            return _flat_embedded(n, name)
        raise ValueError(f"invalid parameter rep={rep!r}: expected chart or embedded")
    if head == "sphere":
        kv = _parse_kv(rest, {"r", "rep"})
        try:
            r = float(kv.get("r", "1.0"))
        except ValueError:
            raise ValueError(f"invalid parameter r={kv['r']!r}: expected a number") from None
        if not (r > 0.0):
            raise ValueError(f"invalid parameter r={r}: must be positive")
        rep = kv.get("rep", "embedded")
        name = f"sphere:r={r!r}:rep={rep}"
        if rep == "chart":
            return _sphere_chart(r, name)
        if rep == "embedded":
            return _sphere_embedded(r, name)
        raise ValueError(f"invalid parameter rep={rep!r}: expected chart or embedded")
    if head == "halfplane":
        _parse_kv(rest, set())
        return _halfplane("halfplane")
    if head == "paraboloid":
        _parse_kv(rest, set())
        return _paraboloid("paraboloid")
    raise ValueError(f"unknown manifold {head!r}; known: flat, sphere, halfplane, paraboloid")
