"""Metric spaces (finite tables and boxes in R^n) and self-maps on them.

Points of a :class:`BoxSpace` are float arrays of shape ``(dim,)`` and
batches have shape ``(n, dim)``.  Points of a :class:`FiniteSpace` are
integer indices into the distance table; batches are 1-d int arrays.
"""
from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .._numeric import make_rng
from ..errors import DomainError, ParameterError
from ..expr import evaluate_expression, free_names, parse_expression_list

__all__ = ["MetricSpace", "BoxSpace", "FiniteSpace", "SelfMap", "distance", "real_line"]

DEFAULT_SEED = 42
_METRICS = ("euclid", "max", "taxicab")


class MetricSpace:
    """Common interface of the carriers; see :class:`BoxSpace`, :class:`FiniteSpace`."""

    kind: str
    seed: int

    def rng(self, *stream: int) -> np.random.Generator:
        return make_rng(self.seed, *stream)

    def distance(self, x, y) -> float:
        X = self.coerce_batch([x])
        Y = self.coerce_batch([y])
        return float(self.dist(X, Y)[0])

    def point_key(self, p):
        """A JSON-friendly, orderable rendering of one point."""
        raise NotImplementedError

    def points(self, batch) -> list:
        return [self.point_key(p) for p in batch]


class BoxSpace(MetricSpace):
    """Axis-aligned box ``[lo, hi]`` in R^dim with a formula metric.

    Bounds may be infinite, which gives all of R^dim; such a carrier
    cannot be sampled uniformly but still supports orbits and balls.
    """

    kind = "box"

    def __init__(self, lo, hi, metric: str = "euclid", seed: int = DEFAULT_SEED):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ParameterError("lo and hi must have the same length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ParameterError("box bounds must satisfy lo <= hi")
        if metric not in _METRICS:
            raise ParameterError(f"unknown metric {metric!r}; expected one of {_METRICS}")
        self.lo = lo
        self.hi = hi
        self.lo.setflags(write=False)
        self.hi.setflags(write=False)
        self.metric = metric
        self.seed = int(seed)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def __repr__(self):
        return f"BoxSpace(lo={self.lo.tolist()}, hi={self.hi.tolist()}, metric={self.metric!r})"

    def contains_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.all((X >= self.lo) & (X <= self.hi), axis=-1)

    def coerce(self, x) -> np.ndarray:
        return self.coerce_batch([x])[0]

    def coerce_batch(self, xs) -> np.ndarray:
        X = np.asarray(xs, dtype=float)
        if X.ndim == 1 and self.dim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DomainError(f"expected points of dimension {self.dim}, got shape {np.shape(xs)}")
        inside = self.contains_batch(X)
        if not np.all(inside):
            bad = X[int(np.argmin(inside))]
            raise DomainError(f"point {bad.tolist()} lies outside the box carrier")
        return X

    def dist(self, X, Y) -> np.ndarray:
        diff = np.asarray(X, dtype=float) - np.asarray(Y, dtype=float)
        if self.dim == 1:
            return np.abs(diff[..., 0])
        if self.metric == "euclid":
            return np.sqrt(np.sum(diff * diff, axis=-1))
        if self.metric == "max":
            return np.max(np.abs(diff), axis=-1)
        return np.sum(np.abs(diff), axis=-1)

    def diam_estimate(self) -> float:
        return float(self.dist(self.lo[None, :], self.hi[None, :])[0])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if not self.bounded:
            raise DomainError("cannot sample uniformly from an unbounded box")
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def lattice(self, n: int) -> np.ndarray:
        """Deterministic ``n``-point lattice covering the box (corners included)."""
        if not self.bounded:
            raise DomainError("cannot build a lattice on an unbounded box")
        per_axis = max(2, math.ceil(n ** (1.0 / self.dim))) if n > 1 else 1
        axes = [np.linspace(self.lo[k], self.hi[k], per_axis) for k in range(self.dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return grid[:n]

    def sample_ball(self, center, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform samples from the open ball ``{y : d(center, y) < radius}`` within the box.

        Uses rejection from the bounding cube clipped to the box.
        """
        c = self.coerce(center)
        lo = np.maximum(self.lo, c - radius)
        hi = np.minimum(self.hi, c + radius)
        if np.any(lo > hi):
            raise DomainError("ball does not meet the box carrier")
        out = []
        have = 0
        for _ in range(10_000):
            if have >= n:
                break
            cand = rng.uniform(lo, hi, size=(max(2 * (n - have), 16), self.dim))
            keep = cand[self.dist(cand, c[None, :]) < radius]
            out.append(keep)
            have += len(keep)
        if have < n:
            raise DomainError("rejection sampling of the ball did not produce enough points")
        return np.concatenate(out)[:n]

    def point_key(self, p):
        return [float(v) for v in np.asarray(p, dtype=float).ravel()]

    def describe(self) -> dict:
        from .._numeric import jlist

        return {"kind": "box", "dim": self.dim, "lo": jlist(self.lo), "hi": jlist(self.hi),
                "metric": self.metric}


def real_line(seed: int = DEFAULT_SEED) -> BoxSpace:
    return BoxSpace(-math.inf, math.inf, seed=seed)


class FiniteSpace(MetricSpace):
    """Finite carrier ``{0, ..., n-1}`` with an explicit distance table.

    The table is stored as given; whether it is actually a metric is the
    business of :func:`validate_metric_axioms`.
    """

    kind = "finite"

    def __init__(self, table, labels: Sequence[str] | None = None, seed: int = DEFAULT_SEED):
        D = np.array(table, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] == 0:
            raise ParameterError("distance table must be a non-empty square matrix")
        D.setflags(write=False)
        self.table = D
        n = D.shape[0]
        self.labels = tuple(labels) if labels is not None else tuple(f"p{i}" for i in range(n))
        if len(self.labels) != n or len(set(self.labels)) != n:
            raise ParameterError("labels must be unique and match the table size")
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self.seed = int(seed)

    @property
    def size(self) -> int:
        return self.table.shape[0]

    def __repr__(self):
        return f"FiniteSpace(size={self.size})"

    def index_of(self, x) -> int:
        if isinstance(x, str):
            if x not in self._index:
                raise DomainError(f"unknown point label {x!r}")
            return self._index[x]
        if isinstance(x, (int, np.integer)) and 0 <= int(x) < self.size:
            return int(x)
        raise DomainError(f"point {x!r} is not in the finite carrier")

    def coerce(self, x) -> int:
        return self.index_of(x)

    def coerce_batch(self, xs) -> np.ndarray:
        return np.array([self.index_of(x) for x in xs], dtype=np.int64)

    def contains_batch(self, X) -> np.ndarray:
        X = np.asarray(X)
        return (X >= 0) & (X < self.size)

    def dist(self, X, Y) -> np.ndarray:
        return self.table[np.asarray(X, dtype=np.int64), np.asarray(Y, dtype=np.int64)]

    def diam_estimate(self) -> float:
        return float(np.max(self.table))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.size, size=n)

    def lattice(self, n: int) -> np.ndarray:
        return np.arange(min(n, self.size))

    def sample_ball(self, center, radius: float, n: int | None = None, rng=None) -> np.ndarray:
        """All points of the ball; finite balls are enumerated, not sampled."""
        c = self.coerce(center)
        return np.flatnonzero(self.table[c] < radius)

    def point_key(self, p):
        return self.labels[int(p)]

    def describe(self) -> dict:
        return {"kind": "finite", "labels": list(self.labels),
                "table": [[float(v) for v in row] for row in self.table]}


def distance(space: MetricSpace, x, y) -> float:
    """``d(x, y)`` on ``space``; raises :class:`DomainError` for foreign points."""
    return space.distance(x, y)


class SelfMap:
    """An operator ``T`` from a carrier to itself.

    ``func`` acts on a batch of points (``(n, dim)`` floats for boxes,
    int indices for finite spaces).  Use the ``from_*`` constructors
    rather than calling this directly.
    """

    def __init__(self, func: Callable, *, kind: str = "formula", name: str = "T",
                 parameters: Mapping[str, float] | None = None, source=None):
        self.func = func
        self.kind = kind
        self.name = name
        self.parameters = dict(parameters or {})
        self.source = source

    def __repr__(self):
        return f"SelfMap({self.name}, kind={self.kind!r}, source={self.source!r})"

    @classmethod
    def from_table(cls, table: Sequence[int], name: str = "T") -> "SelfMap":
        tab = np.asarray(table, dtype=np.int64)
        return cls(lambda X: tab[np.asarray(X, dtype=np.int64)], kind="table", name=name,
                   source=[int(v) for v in tab])

    @classmethod
    def from_callable(cls, f: Callable, name: str = "T", **parameters) -> "SelfMap":
        """Wrap a vectorized Python callable acting on a batch of points."""
        return cls(f, kind="callable", name=name, parameters=parameters,
                   source=getattr(f, "__name__", "callable"))

    @classmethod
    def from_expression(cls, text_or_exprs, dim: int = 1, name: str = "T",
                        parameters: Mapping[str, float] | None = None) -> "SelfMap":
        """Formula map over coordinates ``x`` (dim 1) or ``x1..xdim``."""
        exprs = (parse_expression_list(text_or_exprs) if isinstance(text_or_exprs, str)
                 else tuple(text_or_exprs))
        if len(exprs) != dim:
            raise ParameterError(f"map has {len(exprs)} components but the space has dim {dim}")
        params = dict(parameters or {})
        coords = {f"x{k + 1}" for k in range(dim)} | ({"x"} if dim == 1 else set())
        for e in exprs:
            unbound = free_names(e) - coords - set(params)
            if unbound:
                raise ParameterError(f"map refers to undeclared name(s) {sorted(unbound)}")

        def func(X):
            X = np.asarray(X, dtype=float)
            env = dict(params)
            for k in range(dim):
                env[f"x{k + 1}"] = X[:, k]
            if dim == 1:
                env["x"] = X[:, 0]
            cols = [np.broadcast_to(evaluate_expression(e, env), (X.shape[0],)) for e in exprs]
            return np.stack(cols, axis=-1)

        return cls(func, kind="formula", name=name, parameters=params, source=exprs)

    def apply_batch(self, space: MetricSpace, X, check: bool = True) -> np.ndarray:
        """Apply ``T`` to a batch; with ``check`` every image must lie in the carrier."""
        if space.kind == "finite":
            out = np.asarray(self.func(np.asarray(X, dtype=np.int64)), dtype=np.int64).reshape(-1)
        else:
            X = np.asarray(X, dtype=float)
            out = np.asarray(self.func(X), dtype=float)
            if out.ndim == 1 and space.dim == 1:
                out = out[:, None]
            out = out.reshape(X.shape[0], space.dim)
        if check:
            inside = space.contains_batch(out)
            if not np.all(inside):
                i = int(np.argmin(inside))
                raise DomainError(
                    f"{self.name} maps {space.point_key(X[i])} outside the carrier "
                    f"(to {np.asarray(out[i]).tolist()})")
        return out

    def __call__(self, space: MetricSpace, x):
        """Image of a single point (validated on input and output)."""
        X = space.coerce_batch([x])
        return self.apply_batch(space, X)[0]
