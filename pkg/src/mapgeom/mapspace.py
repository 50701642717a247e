"""Discretized mapping spaces: quadrature domains, fields, and lifted geometry.

The source manifold enters only through quadrature: a
:class:`QuadratureDomain` is a list of sample labels with positive weights.
Maps into the target, tangent vectors along them, and second tangents are
stored as per-sample arrays, and every geometric operator of
:mod:`mapgeom.manifold` lifts sample-by-sample.

Field operations are pure; per-sample work is batched and row-independent,
and the quadrature reduction in :func:`l2_inner` always runs in the fixed
index order with exact (error-free) summation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import FieldMismatchError, LiftError, NotVerticalError, OffManifoldError
from .manifold import (
    ChartManifold,
    EmbeddedManifold,
    Manifold,
    _gamma_pair,
    curvature_point,
    integrate_spray,
    make_manifold,
    spray_accel,
)

_TANGENCY_TOL = 1e-6


# ---------------------------------------------------------------------------
# domains and fields


@dataclass(frozen=True)
class QuadratureDomain:
    """Discretized source: m sample labels with positive weights.

    ``points`` optionally records source coordinates for provenance; they
    never enter any computation.
    """

    weights: np.ndarray
    points: Optional[np.ndarray] = None
    ids: Optional[tuple] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-d array")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("all quadrature weights must be positive and finite")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.points is not None:
            pts = np.asarray(self.points, dtype=float)
            if pts.shape[0] != w.size:
                raise ValueError("points and weights must have equal length")
            pts = pts.copy()
            pts.setflags(write=False)
            object.__setattr__(self, "points", pts)
        if self.ids is not None and len(self.ids) != w.size:
            raise ValueError("ids and weights must have equal length")

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights.tolist())


def circle_domain(m: int, total_weight: float = 1.0) -> QuadratureDomain:
    """Uniform grid on the circle.

    Trapezoid weights on a closed loop reduce to the uniform rule, so every
    sample carries ``total_weight / m``.  Sample angles are recorded as
    provenance coordinates.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    angles = 2.0 * np.pi * np.arange(m) / m
    return QuadratureDomain(np.full(m, total_weight / m), points=angles[:, None])


def interval_domain(
    m: int, a: float = 0.0, b: float = 1.0, total_weight: Optional[float] = None
) -> QuadratureDomain:
    """Uniform grid on [a, b] with trapezoid weights (endpoints half-weight)."""
    if m < 2:
        raise ValueError("interval trapezoid rule needs m >= 2")
    if not b > a:
        raise ValueError("need b > a")
    h = (b - a) / (m - 1)
    w = np.full(m, h)
    w[0] = w[-1] = 0.5 * h
    if total_weight is not None:
        w *= total_weight / (b - a)
    xs = np.linspace(a, b, m)
    return QuadratureDomain(w, points=xs[:, None])


def same_manifold(a: Manifold, b: Manifold) -> bool:
    if a is b:
        return True
    return a.name is not None and a.name == b.name


def _same_domain(a: QuadratureDomain, b: QuadratureDomain) -> bool:
    return a is b or np.array_equal(a.weights, b.weights)


@dataclass(frozen=True)
class MapField:
    """A discretized map: one target point per quadrature sample."""

    domain: QuadratureDomain
    manifold: Manifold
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != self.domain.size:
            raise ValueError("values must be an (m, n) array matching the domain")
        man = self.manifold
        if isinstance(man, ChartManifold):
            if vals.shape[1] != man.dim:
                raise ValueError("value dimension does not match the chart dimension")
            if not np.all(man.in_domain(vals)):
                raise ValueError("map values leave the chart domain")
        else:
            if vals.shape[1] != man.ambient_dim:
                raise ValueError("value dimension does not match the ambient dimension")
            if not np.all(man.on_manifold(vals)):
                raise OffManifoldError("point off manifold: map values violate the constraint")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.domain.size


@dataclass(frozen=True)
class TangentField:
    """A tangent vector along a map field: one vector per sample."""

    base: MapField
    vecs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vecs, dtype=float)
        if v.shape != self.base.values.shape:
            raise ValueError("vecs must match the shape of the base values")
        man = self.base.manifold
        if isinstance(man, EmbeddedManifold):
            scale = np.maximum(1.0, np.max(np.abs(v), axis=-1))
            if np.any(man.tangency_residual(self.base.values, v) > _TANGENCY_TOL * scale):
                raise ValueError("vecs are not tangent to the embedded manifold")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vecs", v)

    @property
    def domain(self) -> QuadratureDomain:
        return self.base.domain

    @property
    def manifold(self) -> Manifold:
        return self.base.manifold

    @property
    def size(self) -> int:
        return self.base.size


@dataclass(frozen=True)
class SecondTangentField:
    """A field of second tangents (x, h; k, l), stored as four arrays."""

    domain: QuadratureDomain
    manifold: Manifold
    base: np.ndarray
    vec: np.ndarray
    dbase: np.ndarray
    dvec: np.ndarray

    def __post_init__(self):
        arrays = {}
        shape = None
        for attr in ("base", "vec", "dbase", "dvec"):
            arr = np.asarray(getattr(self, attr), dtype=float)
            if arr.ndim != 2 or arr.shape[0] != self.domain.size:
                raise ValueError(f"{attr} must be an (m, n) array matching the domain")
            if shape is None:
                shape = arr.shape
            elif arr.shape != shape:
                raise ValueError("all four component arrays must share one shape")
            arr = arr.copy()
            arr.setflags(write=False)
            arrays[attr] = arr
        for attr, arr in arrays.items():
            object.__setattr__(self, attr, arr)

    @property
    def size(self) -> int:
        return self.domain.size


def base_map(xi: SecondTangentField) -> MapField:
    return MapField(xi.domain, xi.manifold, xi.base)


# ---------------------------------------------------------------------------
# the L2 metric


def _require_based(q: MapField, h: TangentField):
    if not same_manifold(q.manifold, h.manifold):
        raise FieldMismatchError("field mismatch: different target manifolds")
    if not _same_domain(q.domain, h.domain):
        raise FieldMismatchError("field mismatch: different quadrature domains")
    if not np.array_equal(q.values, h.base.values):
        raise FieldMismatchError("field mismatch: tangent field based at a different map")


def pointwise_inner(q: MapField, h: TangentField, k: TangentField) -> np.ndarray:
    """Per-sample metric values g(h_i, k_i), shape (m,)."""
    _require_based(q, h)
    _require_based(q, k)
    man = q.manifold
    if isinstance(man, ChartManifold):
        g = np.asarray(man.metric(q.values))
        return np.einsum("sij,si,sj->s", g, h.vecs, k.vecs)
    return np.einsum("si,si->s", h.vecs, k.vecs)


def l2_inner(q: MapField, h: TangentField, k: TangentField) -> float:
    """Quadrature of the pointwise metric: sum_i w_i g(h_i, k_i).

    The reduction runs in the fixed index order with exact summation, so
    permutation arguments can assert equalities at machine precision.
    """
    terms = q.domain.weights * pointwise_inner(q, h, k)
    return math.fsum(terms.tolist())


def l2_norm(q: MapField, h: TangentField) -> float:
    return math.sqrt(l2_inner(q, h, h))


# ---------------------------------------------------------------------------
# functorial lift


def lift_left_composition(fn: Callable, field, manifold: Optional[Manifold] = None):
    """Apply a pointwise map to every sample of a field.

    ``fn`` receives the per-sample data of the field: a point for a map
    field, ``(point, vector)`` for a tangent field, and ``(x, h, k, l)``
    for a second tangent field.  It returns either a single point, which
    yields a :class:`MapField` over ``manifold`` (default: the field's own),
    or a tuple of the same arity as its input, which yields a field of the
    input's kind.  A callback failure at sample i raises ``LiftError``
    carrying i.
    """
    target = manifold if manifold is not None else field.manifold

    def per_sample(args_list):
        outs = []
        for i, args in enumerate(args_list):
            try:
                outs.append(fn(*args))
            except Exception as exc:
                raise LiftError(f"pointwise map failed at sample {i}: {exc}", sample=i) from exc
        return outs

    if isinstance(field, MapField):
        outs = per_sample([(v,) for v in field.values])
        return MapField(field.domain, target, np.asarray(outs, dtype=float))
    if isinstance(field, TangentField):
        outs = per_sample(list(zip(field.base.values, field.vecs)))
        if all(isinstance(o, tuple) and len(o) == 2 for o in outs):
            pts = np.asarray([o[0] for o in outs], dtype=float)
            vecs = np.asarray([o[1] for o in outs], dtype=float)
            return TangentField(MapField(field.domain, target, pts), vecs)
        return MapField(field.domain, target, np.asarray(outs, dtype=float))
    if isinstance(field, SecondTangentField):
        outs = per_sample(list(zip(field.base, field.vec, field.dbase, field.dvec)))
        if all(isinstance(o, tuple) and len(o) == 4 for o in outs):
            comps = [np.asarray([o[j] for o in outs], dtype=float) for j in range(4)]
            return SecondTangentField(field.domain, target, *comps)
        return MapField(field.domain, target, np.asarray(outs, dtype=float))
    raise TypeError(f"cannot lift over {type(field).__name__}")


# ---------------------------------------------------------------------------
# lifted geometric operators


def connector_field(xi: SecondTangentField) -> TangentField:
    """Samplewise connector: (x, h; k, l) -> l + Gamma(k, h) at x."""
    man = xi.manifold
    base = MapField(xi.domain, man, xi.base)
    if isinstance(man, ChartManifold):
        gamma = man.christoffel_eval(xi.base)
        vecs = xi.dvec + _gamma_pair(gamma, xi.dbase, xi.vec)
    else:
        vecs = man.project(xi.base, xi.dvec)
    return TangentField(base, vecs)


def spray_field(h: TangentField) -> SecondTangentField:
    """Samplewise geodesic spray (x, h; h, a)."""
    accel = spray_accel(h.manifold, h.base.values, h.vecs)
    return SecondTangentField(h.domain, h.manifold, h.base.values, h.vecs, h.vecs.copy(), accel)


def exp_field(h: TangentField, steps: int = 1000) -> MapField:
    """Samplewise exponential map: unit-time geodesic endpoints."""
    x, _ = integrate_spray(h.manifold, h.base.values, h.vecs, steps)
    return MapField(h.domain, h.manifold, x)


def curvature_field(q: MapField, h: TangentField, k: TangentField, l: TangentField) -> TangentField:
    """Samplewise curvature tensor R(h, k) l along q."""
    for f in (h, k, l):
        _require_based(q, f)
    man = q.manifold
    if not isinstance(man, ChartManifold):
        raise TypeError("curvature_field needs a chart representation")
    vecs = curvature_point(man, q.values, h.vecs, k.vecs, l.vecs)
    return TangentField(q, vecs)


def vertical_lift_field(h: TangentField, k: TangentField) -> SecondTangentField:
    """vl(h, k) = (x, h; 0, k), samplewise."""
    _require_based(h.base, k)
    return SecondTangentField(
        h.domain, h.manifold, h.base.values, h.vecs, np.zeros_like(h.vecs), k.vecs
    )


def vertical_projection_field(xi: SecondTangentField) -> TangentField:
    """vpr(x, h; 0, k) = (x, k); rejects non-vertical input."""
    if np.any(xi.dbase != 0.0):
        raise NotVerticalError("not vertical: dbase component is nonzero")
    return TangentField(MapField(xi.domain, xi.manifold, xi.base), xi.dvec)


def canonical_flip_field(xi: SecondTangentField) -> SecondTangentField:
    """kappa(x, h; k, l) = (x, k; h, l), samplewise."""
    return SecondTangentField(xi.domain, xi.manifold, xi.base, xi.dbase, xi.vec, xi.dvec)


# ---------------------------------------------------------------------------
# representation conversion through an embedding


def embed_map_field(q: MapField, target: EmbeddedManifold) -> MapField:
    """Push a chart-representation map field through the chart's embedding."""
    man = q.manifold
    if not isinstance(man, ChartManifold) or man.embedding is None:
        raise TypeError("source manifold has no embedding")
    return MapField(q.domain, target, man.embedding(q.values))


def embed_tangent_field(h: TangentField, target: EmbeddedManifold) -> TangentField:
    """Push a chart-representation tangent field through the embedding differential."""
    man = h.manifold
    if not isinstance(man, ChartManifold) or man.embedding_jacobian is None:
        raise TypeError("source manifold has no embedding jacobian")
    base = embed_map_field(h.base, target)
    J = np.asarray(man.embedding_jacobian(h.base.values))
    return TangentField(base, np.einsum("sia,sa->si", J, h.vecs))


# ---------------------------------------------------------------------------
# JSON field files


def field_to_json(field) -> dict:
    """Serializable dict for a map or tangent field (registry manifolds only)."""
    if isinstance(field, TangentField):
        base = field.base
        vecs = field.vecs
    elif isinstance(field, MapField):
        base = field
        vecs = None
    else:
        raise TypeError("only map and tangent fields have a file format")
    if base.manifold.name is None:
        raise ValueError("only registry manifolds can be serialized")
    domain = {"weights": base.domain.weights.tolist()}
    if base.domain.points is not None:
        domain["points"] = base.domain.points.tolist()
    doc = {"domain": domain, "manifold": base.manifold.name, "values": base.values.tolist()}
    if vecs is not None:
        doc["vecs"] = vecs.tolist()
    return doc


def field_from_json(doc: dict, manifold: Optional[Manifold] = None):
    """Rebuild a map or tangent field from its JSON dict."""
    try:
        weights = np.asarray(doc["domain"]["weights"], dtype=float)
        name = doc["manifold"]
        values = np.asarray(doc["values"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed field document: missing {exc}") from exc
    points = doc["domain"].get("points")
    domain = QuadratureDomain(
        weights, points=None if points is None else np.asarray(points, dtype=float)
    )
    man = manifold if manifold is not None else make_manifold(name)
    q = MapField(domain, man, values)
    if "vecs" in doc and doc["vecs"] is not None:
        return TangentField(q, np.asarray(doc["vecs"], dtype=float))
    return q


def save_field(field, path):
    with open(path, "w") as fh:
        json.dump(field_to_json(field), fh, sort_keys=True)
        fh.write("\n")


def load_field(path, manifold: Optional[Manifold] = None):
    with open(path) as fh:
        return field_from_json(json.load(fh), manifold=manifold)
