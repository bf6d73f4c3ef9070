"""Picard orbits, geometric rate and a-priori error bounds, operator classification."""
from __future__ import annotations

import csv
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._numeric import jnum
from .errors import DomainError, ParameterError
from .metric_core import AlteringFunction, MetricSpace, SelfMap

__all__ = [
    "IterationTrace", "PicardClassification", "picard_orbit", "geometric_rate",
    "apriori_error_bound", "iterations_needed", "classify_picard", "cluster_points",
    "DIVERGENCE_CAP", "CLUSTER_FACTOR",
]

DIVERGENCE_CAP = 1e12
CLUSTER_FACTOR = 10.0


def geometric_rate(a: float, b: float) -> float:
    """Per-step contraction factor ``(a + b) / (1 - b)``; needs ``a, b >= 0``, ``a + 2b < 1``."""
    if a < 0 or b < 0 or not a + 2 * b < 1:
        raise ParameterError(f"need a, b >= 0 and a + 2b < 1, got a={a!r}, b={b!r}")
    # single rounding of the exact rational, so e.g. (0.5, 0.2) gives 0.875
    return float((Fraction(a) + Fraction(b)) / (1 - Fraction(b)))


def apriori_error_bound(lam: float, d0: float, n: int) -> float:
    """Bound ``lam**n / (1 - lam) * d0`` on the distance from the n-th iterate to the limit."""
    if not 0 <= lam < 1:
        raise ParameterError(f"rate must lie in [0, 1), got {lam!r}")
    if d0 < 0 or n < 0:
        raise ParameterError("d0 and n must be nonnegative")
    return lam ** n / (1 - lam) * d0


def iterations_needed(lam: float, d0: float, eps: float) -> int:
    """Smallest ``n >= 0`` with ``apriori_error_bound(lam, d0, n) <= eps``.

    The logarithmic estimate is only a starting point; the answer is fixed
    by evaluating the bound itself on either side.
    """
    if not 0 < lam < 1:
        raise ParameterError(f"rate must lie in (0, 1), got {lam!r}")
    if not (d0 > 0 and eps > 0):
        raise ParameterError("d0 and eps must be positive")
    if apriori_error_bound(lam, d0, 0) <= eps:
        return 0
    n = max(0, math.ceil(math.log(eps * (1 - lam) / d0) / math.log(lam)))
    while n > 0 and apriori_error_bound(lam, d0, n - 1) <= eps:
        n -= 1
    while apriori_error_bound(lam, d0, n) > eps:
        n += 1
    return n


@dataclass
class IterationTrace:
    """One Picard orbit ``u, Tu, T^2 u, ...`` with per-step diagnostics.

    ``rho[k] = d(x_k, x_{k+1})``, so ``len(rho) == len(orbit) - 1``.
    ``sigma`` is ``phi(rho)`` when an altering function was attached.
    """

    start: object
    orbit: np.ndarray
    rho: np.ndarray
    stop_reason: str
    limit: object = None
    sigma: np.ndarray | None = None
    rate: float | None = None
    bound_curve: np.ndarray | None = None
    message: str = ""

    @property
    def steps(self) -> int:
        return len(self.rho)

    @property
    def converged(self) -> bool:
        return self.stop_reason in ("converged", "fixed-point-hit")

    def to_dict(self, space: MetricSpace, include_orbit: bool = False) -> dict:
        d = {
            "start": space.point_key(self.start),
            "stop_reason": self.stop_reason,
            "steps": self.steps,
            "limit": None if self.limit is None else space.point_key(self.limit),
            "last_rho": jnum(self.rho[-1]) if len(self.rho) else None,
        }
        if self.rate is not None:
            d["rate"] = jnum(self.rate)
        if self.message:
            d["message"] = self.message
        if include_orbit:
            d["orbit"] = space.points(self.orbit)
            d["rho"] = [jnum(r) for r in self.rho]
            if self.sigma is not None:
                d["sigma"] = [jnum(s) for s in self.sigma]
            if self.bound_curve is not None:
                d["bound"] = [jnum(b) for b in self.bound_curve]
        return d

    def write_csv(self, path, space: MetricSpace) -> None:
        """Columns: step, coordinates, rho, [sigma], bound; 17 significant digits."""
        if space.kind == "finite":
            coords = ["point"]
        elif space.dim == 1:
            coords = ["x"]
        else:
            coords = [f"x{k + 1}" for k in range(space.dim)]
        header = ["step", *coords, "rho"] + (["sigma"] if self.sigma is not None else []) + ["bound"]

        def g(v):
            return format(float(v), ".17g")

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k, p in enumerate(self.orbit):
                pt = [space.point_key(p)] if space.kind == "finite" else [g(c) for c in p]
                row = [k, *pt, g(self.rho[k]) if k < len(self.rho) else ""]
                if self.sigma is not None:
                    row.append(g(self.sigma[k]) if k < len(self.sigma) else "")
                row.append(g(self.bound_curve[k]) if self.bound_curve is not None else "")
                w.writerow(row)


def picard_orbit(space: MetricSpace, T: SelfMap, u, max_iters: int = 10**6, tol: float = 1e-9,
                 phi: AlteringFunction | None = None, rate: float | None = None,
                 divergence_cap: float = DIVERGENCE_CAP) -> IterationTrace:
    """Iterate ``x_{k+1} = T(x_k)`` from ``u``.

    Stops with ``fixed-point-hit`` when an iterate repeats exactly,
    ``converged`` when ``rho_k <= tol``, ``diverged`` when ``rho_k`` exceeds
    ``divergence_cap`` or an iterate leaves the carrier, and ``max-iters``
    otherwise.  A start outside the carrier raises :class:`DomainError`; an
    iterate leaving it ends the trace at the last valid point.

    With ``rate`` given, ``bound_curve[k] = rate**k / (1 - rate) * d(u, Tu)``.
    """
    if max_iters < 1:
        raise ParameterError("max_iters must be >= 1")
    if not tol > 0:
        raise ParameterError("tol must be positive")
    x = space.coerce_batch([u])
    orbit = [x[0]]
    rho = []
    stop, message = "max-iters", ""
    for k in range(max_iters):
        try:
            y = T.apply_batch(space, x, check=False)
        except (DomainError, IndexError) as exc:
            stop, message = "diverged", f"step {k + 1}: {exc}"
            break
        finite = space.kind == "finite" or bool(np.all(np.isfinite(y)))
        if not finite or not bool(space.contains_batch(y)[0]):
            stop = "diverged"
            message = f"step {k + 1}: iterate left the carrier"
            break
        r = float(space.dist(x, y)[0])
        orbit.append(y[0])
        rho.append(r)
        if np.array_equal(x, y):
            stop = "fixed-point-hit"
            break
        if r <= tol:
            stop = "converged"
            break
        if not r <= divergence_cap:
            stop = "diverged"
            message = f"step {k + 1}: rho exceeded {divergence_cap:g}"
            break
        x = y
    orbit_arr = np.asarray(orbit)
    rho_arr = np.asarray(rho, dtype=float)
    trace = IterationTrace(start=orbit_arr[0], orbit=orbit_arr, rho=rho_arr, stop_reason=stop,
                           message=message)
    if trace.converged:
        trace.limit = orbit_arr[-1]
    if phi is not None:
        trace.sigma = phi(rho_arr)
    if rate is not None:
        if not 0 <= rate < 1:
            raise ParameterError(f"rate must lie in [0, 1), got {rate!r}")
        trace.rate = rate
        d0 = rho_arr[0] if len(rho_arr) else 0.0
        ks = np.arange(len(orbit_arr))
        trace.bound_curve = rate ** ks / (1 - rate) * d0
    return trace


def cluster_points(space: MetricSpace, points: Sequence, radius: float) -> list:
    """Single-linkage clusters of ``points`` (indices), linking pairs within ``radius``.

    The result does not depend on input order: clusters are sorted by their
    lexicographically smallest member.
    """
    n = len(points)
    if n == 0:
        return []
    P = space.coerce_batch(points) if space.kind == "finite" else np.asarray(points, dtype=float)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        d = space.dist(np.repeat(P[i:i + 1], n, axis=0), P)
        for j in np.flatnonzero(d <= radius):
            ri, rj = find(i), find(int(j))
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    def key(members):
        return min(_sort_key(space.point_key(P[m])) for m in members)

    return sorted(groups.values(), key=key)


def _sort_key(k):
    return tuple(k) if isinstance(k, list) else (k,)


@dataclass
class PicardClassification:
    """Empirical operator class from orbits started at several points."""

    verdict: str
    per_start: list
    distinct_limits: int
    fixed_points: list
    detail: str = ""
    traces: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "distinct_limits": self.distinct_limits,
                "fixed_points": self.fixed_points, "per_start": self.per_start,
                "detail": self.detail}


def classify_picard(space: MetricSpace, T: SelfMap, starts: Sequence, max_iters: int = 10**6,
                    tol: float = 1e-9) -> PicardClassification:
    """Classify ``T`` as picard / strong-picard / globally-strong-picard / inconclusive.

    A limit ``z`` counts as fixed when ``d(z, Tz) <= tol``.  Limits closer
    than ``10 * tol`` are merged before counting distinct limits.
    """
    if len(starts) == 0:
        raise ParameterError("starts must be nonempty")
    traces = [picard_orbit(space, T, u, max_iters, tol) for u in starts]
    per_start = []
    limits, fixed = [], []
    for tr in traces:
        rec = tr.to_dict(space)
        if tr.limit is not None:
            z = np.asarray([tr.limit]) if space.kind == "finite" else tr.limit[None, :]
            resid = float(space.dist(z, T.apply_batch(space, z, check=False))[0])
            rec["residual"] = jnum(resid)
            rec["limit_fixed"] = bool(resid <= tol)
            limits.append(tr.limit)
            fixed.append(resid <= tol)
        else:
            rec["limit_fixed"] = False
        per_start.append(rec)

    clusters = cluster_points(space, limits, CLUSTER_FACTOR * tol) if limits else []
    reps = [space.point_key(limits[c[0]]) for c in clusters]
    bad = [i for i, tr in enumerate(traces) if not tr.converged]
    if bad:
        reasons = sorted({traces[i].stop_reason for i in bad})
        return PicardClassification("inconclusive", per_start, len(clusters), [],
                                    f"{len(bad)} of {len(traces)} starts did not converge "
                                    f"({', '.join(reasons)})", traces)
    if not all(fixed):
        return PicardClassification("picard", per_start, len(clusters), [],
                                    "some orbit limits are not fixed under T", traces)
    verdict = "globally-strong-picard" if len(clusters) == 1 else "strong-picard"
    return PicardClassification(verdict, per_start, len(clusters), reps,
                                f"{len(clusters)} distinct fixed limit(s)", traces)
