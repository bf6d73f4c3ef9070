"""Ball supremum of the displacement, local-global bound, Hyers-Ulam probe."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._numeric import jnum, make_rng
from .errors import DomainError, ParameterError
from .iteration import CLUSTER_FACTOR, cluster_points, picard_orbit
from .metric_core import MetricSpace, SelfMap

__all__ = ["StabilityVerdict", "estimate_mu", "local_global_bound", "hyers_ulam_probe"]

_MU_STREAM = 3
_PROBE_STREAM = 4


def _displacement(space, T, X):
    return space.dist(X, T.apply_batch(space, X))


def estimate_mu(space: MetricSpace, T: SelfMap, u0, delta: float, n_samples: int,
                seed: int | None = None, extra_points=None) -> float:
    """Sampled lower estimate of ``sup { d(x, Tx) : d(u0, x) < delta }``.

    ``u0`` itself and any ``extra_points`` inside the ball are always part of
    the sample, so appending points can only raise the estimate.  Finite
    carriers enumerate the ball exactly.
    """
    if not delta > 0:
        raise ParameterError("delta must be positive")
    seed = space.seed if seed is None else seed
    c = space.coerce_batch([u0])
    X = space.sample_ball(u0, delta, n_samples, make_rng(seed, _MU_STREAM))
    parts = [c, X]
    if extra_points is not None and len(extra_points):
        E = space.coerce_batch(extra_points)
        parts.append(E[space.dist(np.repeat(c, len(E), axis=0), E) < delta])
    return float(np.max(_displacement(space, T, np.concatenate(parts))))


def local_global_bound(lam: float, mu: float, n: int) -> float:
    """``lam**n / (1 - lam) * mu``, uniform over starts in the ball."""
    if not 0 <= lam < 1:
        raise ParameterError(f"rate must lie in [0, 1), got {lam!r}")
    if mu < 0 or n < 0:
        raise ParameterError("mu and n must be nonnegative")
    return lam ** n / (1 - lam) * mu


@dataclass
class StabilityVerdict:
    verdict: str
    fix_estimate: list
    trials: list
    delta: float
    mu: float | None
    rate: float | None
    detail: str = ""
    traces: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "fix_estimate": self.fix_estimate,
            "delta": jnum(self.delta),
            "mu": jnum(self.mu),
            "mu_note": "sampled lower estimate",
            "rate": jnum(self.rate),
            "detail": self.detail,
            "trials": self.trials,
        }


def _bound_holds(space, trace, z, lam, mu, tol):
    if trace.limit is None:
        return None
    zz = np.asarray([z]) if space.kind == "finite" else np.asarray(z, dtype=float)[None, :]
    d = space.dist(trace.orbit, np.repeat(zz, len(trace.orbit), axis=0))
    bounds = lam ** np.arange(len(d)) / (1 - lam) * mu
    return bool(np.all(d <= bounds + tol))


def hyers_ulam_probe(space: MetricSpace, T: SelfMap, u0, delta: float, trials: int,
                     max_iters: int = 10**6, tol: float = 1e-9, lam: float | None = None,
                     mu: float | None = None, n_mu_samples: int = 10_000,
                     seed: int | None = None) -> StabilityVerdict:
    """Run orbits from ``u0`` and ``trials`` perturbed starts in the open ball.

    Verdict ``unstable`` needs at least two distinct limits, each fixed
    (``d(z, Tz) <= tol``); ``stable`` needs every limit in one cluster and
    fixed; anything else, including a non-convergent orbit, is
    ``inconclusive``.  Limits within ``10 * tol`` are merged.

    When ``lam`` is supplied, every converged trial also records whether
    ``d(T^n v0, z) <= lam**n/(1-lam) * mu + tol`` holds along the orbit,
    against its own limit and (for a single cluster) the common one.  If
    ``mu`` is omitted it is estimated over the ball including the trial
    starts.
    """
    if trials < 2:
        raise ParameterError("trials must be >= 2")
    seed = space.seed if seed is None else seed
    starts = np.concatenate([space.coerce_batch([u0]),
                             space.sample_ball(u0, delta, trials, make_rng(seed, _PROBE_STREAM))])
    if space.kind == "finite":
        # finite balls are enumerated; cycle through them to fill the trials
        ball = starts[1:]
        starts = np.concatenate([starts[:1], np.resize(ball, trials)])
    if lam is not None and mu is None:
        mu = estimate_mu(space, T, u0, delta, n_mu_samples, seed, extra_points=starts)
    traces = [picard_orbit(space, T, v, max_iters, tol) for v in starts]

    converged = [tr.converged for tr in traces]
    limits = [tr.limit for tr in traces if tr.limit is not None]
    fixed = []
    for z in limits:
        zz = np.asarray([z]) if space.kind == "finite" else z[None, :]
        fixed.append(float(space.dist(zz, T.apply_batch(space, zz, check=False))[0]) <= tol)
    clusters = cluster_points(space, limits, CLUSTER_FACTOR * tol) if limits else []
    reps = [space.point_key(limits[c[0]]) for c in clusters]
    fixed_reps = [space.point_key(limits[c[0]]) for c in clusters if all(fixed[i] for i in c)]

    common = limits[clusters[0][0]] if len(clusters) == 1 else None
    records = []
    for idx, tr in enumerate(traces):
        rec = {"role": "center" if idx == 0 else "perturbed",
               "start": space.point_key(tr.start),
               "stop_reason": tr.stop_reason,
               "limit": None if tr.limit is None else space.point_key(tr.limit),
               "distance_to_center_limit": None}
        if tr.limit is not None and traces[0].limit is not None:
            a = np.asarray([tr.limit]) if space.kind == "finite" else tr.limit[None, :]
            b = np.asarray([traces[0].limit]) if space.kind == "finite" else traces[0].limit[None, :]
            rec["distance_to_center_limit"] = jnum(space.dist(a, b)[0])
        if lam is not None:
            rec["bound_own_limit"] = _bound_holds(space, tr, tr.limit, lam, mu, tol)
            if common is not None:
                rec["bound_common_limit"] = _bound_holds(space, tr, common, lam, mu, tol)
        records.append(rec)

    if not all(converged):
        verdict, detail = "inconclusive", (
            f"{converged.count(False)} of {len(traces)} orbits did not converge")
    elif len(fixed_reps) >= 2:
        verdict, detail = "unstable", f"{len(fixed_reps)} distinct fixed points reached"
    elif len(clusters) == 1 and all(fixed):
        verdict, detail = "stable", "all limits coincide"
    else:
        verdict, detail = "inconclusive", "limits are not all fixed under T"
    return StabilityVerdict(verdict, reps, records, delta, mu, lam, detail, traces)
