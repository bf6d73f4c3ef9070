"""Numerical validation of the metric axioms on a carrier."""
from __future__ import annotations

import numpy as np

from .._numeric import leq, make_rng
from ..errors import ParameterError
from .report import Check, ValidationReport
from .spaces import MetricSpace

__all__ = ["validate_metric_axioms", "EXHAUSTIVE_PAIRS", "EXHAUSTIVE_TRIPLES"]

EXHAUSTIVE_PAIRS = 10**6
EXHAUSTIVE_TRIPLES = 10**8
_STREAM = 1


def _first(mask):
    idx = np.flatnonzero(~np.asarray(mask))
    return None if idx.size == 0 else int(idx[0])


def _finite_checks(space, n_samples, rng):
    D = space.table
    n = space.size
    lab = space.labels
    checks = []
    if n * n <= EXHAUSTIVE_PAIRS:
        i, j = np.divmod(np.arange(n * n), n)
        exhaustive = True
    else:
        i = rng.integers(0, n, n_samples)
        j = rng.integers(0, n, n_samples)
        exhaustive = False
    d = D[i, j]

    k = _first(d >= 0)
    checks.append(Check("nonnegativity", k is None, None if k is None else [lab[i[k]], lab[j[k]]]))
    diag = np.diag(D)
    k = _first(diag == 0)
    checks.append(Check("reflexivity", k is None, None if k is None else [lab[k]]))
    k = _first(d == D[j, i])
    checks.append(Check("symmetry", k is None, None if k is None else [lab[i[k]], lab[j[k]]],
                        "" if k is None else f"d={d[k]!r} vs {D[j[k], i[k]]!r}"))
    k = _first((i == j) | (d > 0))
    checks.append(Check("sufficiency", k is None, None if k is None else [lab[i[k]], lab[j[k]]]))

    witness = None
    if n ** 3 <= EXHAUSTIVE_TRIPLES:
        for x in range(n):
            # rows: y, columns: z; need d(x,z) <= d(x,y) + d(y,z)
            bad = ~leq(D[x][None, :], D[x][:, None] + D)
            if bad.any():
                y, z = np.argwhere(bad)[0]
                witness = [lab[x], lab[int(y)], lab[int(z)]]
                break
        exhaustive_tri = True
    else:
        x, y, z = (rng.integers(0, n, n_samples) for _ in range(3))
        k = _first(leq(D[x, z], D[x, y] + D[y, z]))
        if k is not None:
            witness = [lab[x[k]], lab[y[k]], lab[z[k]]]
        exhaustive_tri = False
    checks.append(Check("triangle", witness is None, witness,
                        "exhaustive" if exhaustive_tri else "sampled"))
    return checks, exhaustive


def _box_checks(space, n_samples, rng):
    X = space.sample(n_samples, rng)
    Y = space.sample(n_samples, rng)
    Z = space.sample(n_samples, rng)
    key = space.point_key
    dxy = space.dist(X, Y)
    checks = []
    k = _first(dxy >= 0)
    checks.append(Check("nonnegativity", k is None, None if k is None else [key(X[k]), key(Y[k])]))
    k = _first(space.dist(X, X) == 0)
    checks.append(Check("reflexivity", k is None, None if k is None else [key(X[k])]))
    k = _first(dxy == space.dist(Y, X))
    checks.append(Check("symmetry", k is None, None if k is None else [key(X[k]), key(Y[k])]))
    distinct = np.any(X != Y, axis=1)
    k = _first(~distinct | (dxy > 0))
    checks.append(Check("sufficiency", k is None, None if k is None else [key(X[k]), key(Y[k])]))
    k = _first(leq(space.dist(X, Z), dxy + space.dist(Y, Z)))
    checks.append(Check("triangle", k is None,
                        None if k is None else [key(X[k]), key(Y[k]), key(Z[k])], "sampled"))
    return checks, False


def validate_metric_axioms(space: MetricSpace, n_samples: int, seed: int | None = None
                           ) -> ValidationReport:
    """Check nonnegativity, reflexivity, symmetry, sufficiency and the triangle law.

    Finite spaces are enumerated exhaustively when cheap enough; boxes are
    sampled.  Failures carry the lexicographically first witness.  The report
    is a pure function of ``space``, ``n_samples`` and the seed.
    """
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    seed = space.seed if seed is None else seed
    rng = make_rng(seed, _STREAM)
    if space.kind == "finite":
        checks, exhaustive = _finite_checks(space, n_samples, rng)
    else:
        checks, exhaustive = _box_checks(space, n_samples, rng)
    return ValidationReport("metric_axioms", checks, samples=n_samples, seed=seed,
                            subject=space.describe(),
                            extra={"evidence": "exact" if exhaustive else "sampled evidence, not proof"})
