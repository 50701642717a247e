"""Optimal transport at desk scale: push-forwards and Wasserstein-2 distance.

Only the Monge regime is handled: equal atom counts with equal masses, so
an optimal plan is a permutation.  Small instances admit an exact
factorial brute force, which certifies the polynomial assignment solver;
both report costs through one shared evaluation so agreement can be
asserted exactly.  The cost is squared Euclidean distance; squared
geodesic distance on a registry target is available on request.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import GeometryError, MeasureError
from .manifold import ChartManifold, Manifold
from .mapspace import MapField

_BRUTE_LIMIT = 8
_MASS_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atoms with total mass one."""

    atoms: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if atoms.ndim != 2 or masses.ndim != 1 or atoms.shape[0] != masses.size:
            raise ValueError("atoms must be (n, d) with one mass per atom")
        if np.any(masses <= 0.0):
            raise MeasureError("measure not normalized: masses must be positive")
        if abs(math.fsum(masses.tolist()) - 1.0) > _MASS_TOL:
            raise MeasureError("measure not normalized: masses must sum to 1")
        atoms = atoms.copy()
        masses = masses.copy()
        atoms.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)

    @property
    def size(self) -> int:
        return int(self.masses.size)


@dataclass(frozen=True)
class Assignment:
    """An optimal matching: permutation and its transport cost."""

    perm: np.ndarray
    cost: float


def pushforward_measure(q: MapField) -> DiscreteMeasure:
    """Image measure of the quadrature weights under a map field.

    Samples landing on exactly equal points are merged with added mass,
    in first-occurrence order.
    """
    w = q.domain.weights
    if abs(math.fsum(w.tolist()) - 1.0) > _MASS_TOL:
        raise MeasureError("measure not normalized: domain weights must sum to 1")
    atoms = []
    masses = []
    index = {}
    for value, weight in zip(q.values, w):
        key = value.tobytes()
        if key in index:
            masses[index[key]] += weight
        else:
            index[key] = len(atoms)
            atoms.append(value)
            masses.append(float(weight))
    return DiscreteMeasure(np.asarray(atoms), np.asarray(masses))


def _monge_pair(mu: DiscreteMeasure, nu: DiscreteMeasure) -> int:
    if mu.size != nu.size:
        raise MeasureError("Monge regime required: atom counts differ")
    n = mu.size
    uniform = np.full(n, 1.0 / n)
    if np.max(np.abs(mu.masses - uniform)) > _MASS_TOL or np.max(
        np.abs(nu.masses - uniform)
    ) > _MASS_TOL:
        raise MeasureError("Monge regime required: masses must all equal 1/n")
    return n


def _cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, manifold: Optional[Manifold]):
    if manifold is None:
        diff = mu.atoms[:, None, :] - nu.atoms[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    if manifold.closed_form_log is None:
        raise ValueError("geodesic cost needs a target with a closed-form log")
    n = mu.size
    x = np.repeat(mu.atoms, n, axis=0)
    y = np.tile(nu.atoms, (n, 1))
    v = np.asarray(manifold.closed_form_log(x, y))
    if isinstance(manifold, ChartManifold):
        g = np.asarray(manifold.metric(x))
        d2 = np.einsum("sij,si,sj->s", g, v, v)
    else:
        d2 = np.einsum("si,si->s", v, v)
    return d2.reshape(n, n)


def assignment_cost(mu: DiscreteMeasure, nu: DiscreteMeasure, perm,
                    manifold: Optional[Manifold] = None) -> float:
    """Cost of one matching: sum_i m_i d(x_i, y_perm(i))^2, exactly summed."""
    C = _cost_matrix(mu, nu, manifold)
    perm = np.asarray(perm, dtype=int)
    terms = mu.masses * C[np.arange(mu.size), perm]
    return math.fsum(terms.tolist())


def wasserstein2_bruteforce(mu: DiscreteMeasure, nu: DiscreteMeasure,
                            manifold: Optional[Manifold] = None,
                            threads: int = 1) -> Assignment:
    """Exact squared Wasserstein-2 matching by factorial enumeration.

    Requires n <= 8 equal-mass atoms on both sides.  Ties are broken by
    the lexicographically smallest permutation, independent of the thread
    count.
    """
    n = _monge_pair(mu, nu)
    if n > _BRUTE_LIMIT:
        raise MeasureError(f"use assignment solver: n={n} exceeds the brute-force limit")
    C = _cost_matrix(mu, nu, manifold)
    mass = 1.0 / n
    rows = np.arange(n)
    perms = list(itertools.permutations(range(n)))

    def scan(block):
        best_perm, best_cost = None, np.inf
        for p in block:
            c = math.fsum((mass * C[rows, p]).tolist())
            if c < best_cost:
                best_perm, best_cost = p, c
        return best_perm, best_cost

    if threads > 1 and len(perms) > 1024:
        chunk = math.ceil(len(perms) / threads)
        blocks = [perms[i : i + chunk] for i in range(0, len(perms), chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(scan, blocks))
    else:
        results = [scan(perms)]
    best_perm, best_cost = None, np.inf
    for p, c in results:  # in block order, so ties keep the lex-smallest
        if c < best_cost:
            best_perm, best_cost = p, c
    return Assignment(np.asarray(best_perm, dtype=int), best_cost)


def wasserstein2_assignment(mu: DiscreteMeasure, nu: DiscreteMeasure,
                            manifold: Optional[Manifold] = None) -> Assignment:
    """Squared Wasserstein-2 matching via an augmenting-path assignment solver."""
    n = _monge_pair(mu, nu)
    C = _cost_matrix(mu, nu, manifold)
    _, cols = linear_sum_assignment(C)
    perm = np.asarray(cols, dtype=int)
    terms = (1.0 / n) * C[np.arange(n), perm]
    return Assignment(perm, math.fsum(terms.tolist()))


@dataclass(frozen=True)
class SubmersionResult:
    """Both sides of the transport bound for one rearrangement."""

    l2_cost: float
    w2_cost: float
    equality: bool
    assignment: Assignment


def submersion_check(base: MapField, rearranged: MapField,
                     manifold: Optional[Manifold] = None) -> SubmersionResult:
    """Compare the squared L2 displacement cost with the transport cost.

    ``base`` plays the role of the identity configuration; the rearranged
    field induces the matching i -> i, whose cost can only exceed the
    optimal assignment between the two atom clouds:
    w2_cost <= l2_cost, with equality iff that matching is optimal.
    """
    if base.size != rearranged.size:
        raise MeasureError("Monge regime required: configurations differ in size")
    w = base.domain.weights
    n = base.size
    if np.max(np.abs(w - 1.0 / n)) > _MASS_TOL:
        raise MeasureError("Monge regime required: weights must all equal 1/n")
    mu = DiscreteMeasure(base.values, w)
    nu = DiscreteMeasure(rearranged.values, w)
    l2_cost = assignment_cost(mu, nu, np.arange(n), manifold)
    best = (
        wasserstein2_bruteforce(mu, nu, manifold)
        if n <= _BRUTE_LIMIT
        else wasserstein2_assignment(mu, nu, manifold)
    )
    if l2_cost < best.cost - 1e-12:
        raise GeometryError(f"transport bound violated: l2={l2_cost!r} < w2={best.cost!r}")
    return SubmersionResult(l2_cost, best.cost, abs(l2_cost - best.cost) <= 1e-12, best)


# ---------------------------------------------------------------------------
# measure files


def measure_to_json(mu: DiscreteMeasure) -> dict:
    return {"atoms": mu.atoms.tolist(), "masses": mu.masses.tolist()}


def measure_from_json(doc: dict) -> DiscreteMeasure:
    try:
        return DiscreteMeasure(
            np.asarray(doc["atoms"], dtype=float), np.asarray(doc["masses"], dtype=float)
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed measure document: {exc}") from exc


def save_measure(mu: DiscreteMeasure, path):
    with open(path, "w") as fh:
        json.dump(measure_to_json(mu), fh, sort_keys=True)
        fh.write("\n")


def load_measure(path) -> DiscreteMeasure:
    with open(path) as fh:
        return measure_from_json(json.load(fh))
