"""Sequence predicates on finite prefixes and the rank-sequence construction.

A finite prefix can never prove a limit statement; every report produced
here says so.  The rank-sequence extraction, in contrast, is an exact
finite computation and is tested against a brute-force double loop.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._numeric import jnum, leq
from .errors import ExtractionError, ParameterError
from .metric_core import BoxSpace, MetricSpace

__all__ = [
    "SequencePrefix", "RankSequenceResult", "harmonic_prefix", "geometric_prefix",
    "is_semi_cauchy", "is_cauchy", "extract_rank_sequences", "verify_prop1_trends",
    "FINITE_PREFIX_NOTE",
]

FINITE_PREFIX_NOTE = "finite-prefix evidence, not proof"


class SequencePrefix:
    """Points ``x_0 .. x_N`` (N >= 2) of a sequence in a metric space."""

    def __init__(self, points, space: MetricSpace | None = None):
        if space is None:
            space = BoxSpace(-np.inf, np.inf)
        self.space = space
        self.points = space.coerce_batch(points)
        if len(self.points) < 3:
            raise ParameterError("a sequence prefix needs at least x_0, x_1, x_2")

    def __len__(self):
        return len(self.points)

    @property
    def N(self) -> int:
        return len(self.points) - 1

    def rho(self) -> np.ndarray:
        """Consecutive distances ``d(x_n, x_{n+1})``."""
        return self.space.dist(self.points[:-1], self.points[1:])

    def dist_from(self, m: int, start: int, stop: int | None = None) -> np.ndarray:
        """``d(x_m, x_n)`` for ``n`` in ``range(start, stop)``."""
        P = self.points[start:stop]
        ref = np.repeat(self.points[m:m + 1], len(P), axis=0)
        return self.space.dist(ref, P)

    def d(self, m: int, n: int) -> float:
        return float(self.space.dist(self.points[m:m + 1], self.points[n:n + 1])[0])


def harmonic_prefix(N: int) -> SequencePrefix:
    """Partial sums ``H_0 = 0, H_n = 1 + 1/2 + ... + 1/n`` on the real line."""
    terms = np.concatenate([[0.0], 1.0 / np.arange(1, N + 1)])
    return SequencePrefix(np.cumsum(terms))


def geometric_prefix(N: int, start: float = 1.0, limit: float = 2.0, ratio: float = 0.5):
    """``limit - (limit - start) * ratio**n``."""
    n = np.arange(N + 1)
    return SequencePrefix(limit - (limit - start) * ratio ** n)


def is_semi_cauchy(seq: SequencePrefix, window: int, tol: float) -> dict:
    """Consecutive distances tending to 0, read off the prefix tail.

    Passes when the last ``window`` values of ``rho`` are all ``<= tol`` and
    the maxima over the three thirds of ``rho`` do not increase.
    """
    if window < 1:
        raise ParameterError("window must be >= 1")
    rho = seq.rho()
    tail_max = float(np.max(rho[-window:]))
    thirds = [float(np.max(part)) for part in np.array_split(rho, 3) if len(part)]
    non_increasing = all(b <= a for a, b in zip(thirds, thirds[1:]))
    return {
        "property": "semi-cauchy",
        "passed": bool(tail_max <= tol and non_increasing),
        "tail_max_rho": jnum(tail_max),
        "thirds_max_rho": [jnum(t) for t in thirds],
        "window": window, "tol": tol, "N": seq.N,
        "note": FINITE_PREFIX_NOTE,
    }


def is_cauchy(seq: SequencePrefix, tail: int, tol: float) -> dict:
    """Every pair ``m < n`` among the last ``tail`` entries lies within ``tol``."""
    if tail < 2:
        raise ParameterError("tail must be >= 2")
    start = max(0, len(seq) - tail)
    worst, pair = 0.0, None
    for m in range(start, len(seq) - 1):
        d = seq.dist_from(m, m + 1)
        k = int(np.argmax(d))
        if d[k] > worst:
            worst, pair = float(d[k]), [m, m + 1 + k]
    return {
        "property": "cauchy",
        "passed": bool(worst <= tol),
        "max_pair_distance": jnum(worst),
        "witness": pair if worst > tol else None,
        "tail_start": start, "tol": tol, "N": seq.N,
        "note": FINITE_PREFIX_NOTE,
    }


@dataclass
class RankSequenceResult:
    """Rank sequences ``m(j) < n(j)`` witnessing the failure of the Cauchy property at ``eta``.

    ``alpha[j] = d(x_m, x_n)``, ``beta[j] = d(x_m, x_{n-1})`` and
    ``alpha_pq[(p, q)][j] = d(x_{m+p}, x_{n+q})`` (NaN past the prefix end).
    ``j_eta`` is the first index after which every observed ``rho_k < eta``,
    or ``None`` when the prefix has no such tail.

    Per-j flags: ``flags_above`` is ``j <= m < n`` with ``alpha > eta``;
    ``flags_gap`` is ``n - m >= 2`` with ``beta <= eta`` (vacuously true for
    ``j < j_eta``).
    """

    eta: float
    j_eta: int | None
    m: np.ndarray
    n: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha_pq: dict
    rho: np.ndarray = field(repr=False)
    flags_above: np.ndarray = field(repr=False, default=None)
    flags_gap: np.ndarray = field(repr=False, default=None)

    @property
    def J(self) -> int:
        return len(self.m) - 1

    def squeeze(self) -> np.ndarray:
        """Per-j ``eta < alpha(j) <= eta + rho_{n(j)-1}``."""
        upper = self.eta + self.rho[self.n - 1]
        return (self.alpha > self.eta) & leq(self.alpha, upper)

    def to_dict(self) -> dict:
        return {
            "eta": jnum(self.eta),
            "j_eta": self.j_eta,
            "J": self.J,
            "m": [int(v) for v in self.m],
            "n": [int(v) for v in self.n],
            "alpha": [jnum(v) for v in self.alpha],
            "beta": [jnum(v) for v in self.beta],
            "alpha01": [jnum(v) for v in self.alpha_pq[(0, 1)]],
            "alpha10": [jnum(v) for v in self.alpha_pq[(1, 0)]],
            "alpha11": [jnum(v) for v in self.alpha_pq[(1, 1)]],
            "flags_above": bool(np.all(self.flags_above)),
            "flags_gap": bool(np.all(self.flags_gap)),
            "squeeze": bool(np.all(self.squeeze())),
            "note": FINITE_PREFIX_NOTE,
        }

    def write_csv(self, path) -> None:
        """Columns j, m, n, alpha, beta, alpha01, alpha10, alpha11."""
        def g(v):
            return "" if np.isnan(v) else format(float(v), ".17g")

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["j", "m", "n", "alpha", "beta", "alpha01", "alpha10", "alpha11"])
            for j in range(len(self.m)):
                w.writerow([j, int(self.m[j]), int(self.n[j]), g(self.alpha[j]), g(self.beta[j]),
                            g(self.alpha_pq[(0, 1)][j]), g(self.alpha_pq[(1, 0)][j]),
                            g(self.alpha_pq[(1, 1)][j])])


def _tail_index(rho, eta):
    above = np.flatnonzero(~(rho < eta))
    if above.size == 0:
        return 0
    k = int(above[-1]) + 1
    return k if k < len(rho) else None


def extract_rank_sequences(seq: SequencePrefix, eta: float, J: int) -> RankSequenceResult:
    """Build ``m(j)``, ``n(j)`` for ``j = 0..J`` from the prefix.

    ``A(j) = {(m, n) : j <= m < n <= N, d(x_m, x_n) > eta}``; ``m(j)`` is
    the least first coordinate in ``A(j)`` and ``n(j)`` the least ``n``
    paired with it.

    Raises
    ------
    ExtractionError
        If ``A(j)`` is empty for some ``j <= J``.
    """
    if not eta > 0:
        raise ParameterError("eta must be positive")
    if J < 0:
        raise ParameterError("J must be >= 0")
    N = seq.N
    first_above = {}

    def first_n(m):
        # least n > m with d(x_m, x_n) > eta, or None
        if m not in first_above:
            d = seq.dist_from(m, m + 1)
            hit = np.flatnonzero(d > eta)
            first_above[m] = None if hit.size == 0 else m + 1 + int(hit[0])
        return first_above[m]

    ms, ns = [], []
    m = 0
    for j in range(J + 1):
        m = max(m, j)
        while m < N and first_n(m) is None:
            m += 1
        if m >= N:
            raise ExtractionError(
                f"A({j}) is empty: no pair j <= m < n <= {N} with d(x_m, x_n) > {eta!r}", j)
        ms.append(m)
        ns.append(first_n(m))

    ms = np.asarray(ms)
    ns = np.asarray(ns)
    P = seq.points
    sp = seq.space

    def pair_dist(a, b):
        ok = (a <= N) & (b <= N)
        out = np.full(len(a), np.nan)
        if ok.any():
            out[ok] = sp.dist(P[a[ok]], P[b[ok]])
        return out

    alpha = pair_dist(ms, ns)
    beta = pair_dist(ms, ns - 1)
    apq = {(p, q): pair_dist(ms + p, ns + q) for p in (0, 1) for q in (0, 1)}
    rho = seq.rho()
    j_eta = _tail_index(rho, eta)
    js = np.arange(J + 1)
    flags_above = (js <= ms) & (ms < ns) & (alpha > eta)
    late = js >= (j_eta if j_eta is not None else J + 1)
    flags_gap = ~late | (((ns - ms) >= 2) & (beta <= eta))
    return RankSequenceResult(eta, j_eta, ms, ns, alpha, beta, apq, rho, flags_above, flags_gap)


def verify_prop1_trends(res: RankSequenceResult, tail_fraction: float = 0.5,
                        trend_tol: float = 1e-2) -> dict:
    """Trend diagnostics for ``alpha(j) -> eta+`` and ``alpha_pq(j) -> eta``.

    Strictness ``alpha(j) > eta`` is checked for every j; the convergence
    claims are read over the trailing ``tail_fraction`` of the j's against
    ``trend_tol`` and are diagnostics, not theorems.
    """
    if len(res.m) < 10:
        raise ParameterError("need at least 10 recorded j values")
    if not 0 < tail_fraction <= 1:
        raise ParameterError("tail_fraction must lie in (0, 1]")
    eta = res.eta
    start = len(res.m) - max(1, int(round(tail_fraction * len(res.m))))
    strict = bool(np.all(res.alpha > eta))
    dev = {"alpha": np.abs(res.alpha - eta)}
    for (p, q), v in res.alpha_pq.items():
        dev[f"alpha{p}{q}"] = np.abs(v - eta)
    tail_max = {k: float(np.nanmax(v[start:])) if np.any(~np.isnan(v[start:])) else float("nan")
                for k, v in dev.items()}
    trends_ok = all(v < trend_tol for v in tail_max.values() if not np.isnan(v))
    # triangle-inequality neighbourhood |alpha01(j) - alpha(j)| <= rho_{n(j)}
    N = len(res.rho)
    has_next = res.n < N
    neigh = leq(np.abs(res.alpha_pq[(0, 1)][has_next] - res.alpha[has_next]), res.rho[res.n[has_next]])
    return {
        "strict_above_eta": strict,
        "trend_tol": trend_tol,
        "tail_start_j": start,
        "tail_max_deviation": {k: jnum(v) for k, v in tail_max.items()},
        "trends_ok": bool(trends_ok),
        "alpha01_within_rho": bool(np.all(neigh)),
        "deviation_curves": {k: [jnum(x) for x in v] for k, v in dev.items()},
        "passed": bool(strict and trends_ok),
        "note": FINITE_PREFIX_NOTE,
    }
