"""Pairwise numerical certificates for the contractive conditions.

Every checker evaluates an inequality ``LHS(x, y) <= RHS(x, y)`` over a set
of point pairs and reports the worst margin ``RHS - LHS`` together with the
pair attaining it.  Finite carriers are paired exhaustively when that is
cheap, which makes the verdict exact; boxes get i.i.d. pairs plus a
deterministic lattice, which is evidence only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._numeric import EPS_ABS, jnum, leq, make_rng
from .errors import ParameterError, PreconditionError
from .iteration import geometric_rate
from .metric_core import (
    BoundedDecayFunction,
    ComparisonFunction,
    MetricSpace,
    SelfMap,
    SymmetricE,
    as_comparison,
    default_grid,
    m_functionals_batch,
    psi_sum,
    validate_comparison,
    validate_decay,
)
from .metric_core.axioms import EXHAUSTIVE_PAIRS

__all__ = [
    "CertificateReport", "check_banach", "check_weak_contraction",
    "check_altering_contraction", "check_abc_contraction", "check_theorem5",
    "pair_set", "CONDITIONS",
]

CONDITIONS = {
    "banach": "a01",
    "weak": "a03",
    "altering": "c04",
    "abc": "c08",
    "theorem5": "d01",
}
COMPLETENESS = "completeness of (X,d) is assumed, not checked"
_STREAM = 2


@dataclass(frozen=True)
class CertificateReport:
    condition: str
    name: str
    verdict: str
    worst_margin: float
    witness: tuple
    pairs_checked: int
    pairs_skipped: int = 0
    failures: int = 0
    witness_lhs: float = 0.0
    witness_rhs: float = 0.0
    parameters: dict = field(default_factory=dict)
    seed: int | None = None
    evidence: str = ""
    assumptions: tuple = (COMPLETENESS,)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def merge(self, other: "CertificateReport") -> "CertificateReport":
        """Combine reports from disjoint pair sets of the same condition.

        Associative and order independent: the smaller margin wins, ties go
        to the lexicographically smaller witness.
        """
        if (self.condition, self.parameters) != (other.condition, other.parameters):
            raise ValueError("can only merge reports of the same condition and parameters")
        mine = (self.worst_margin, _order_key(self.witness))
        theirs = (other.worst_margin, _order_key(other.witness))
        best = self if mine <= theirs else other
        failures = self.failures + other.failures
        evidence = self.evidence if self.evidence == other.evidence else "sampled evidence, not proof"
        return replace(best, verdict="pass" if failures == 0 else "fail", failures=failures,
                       pairs_checked=self.pairs_checked + other.pairs_checked,
                       pairs_skipped=self.pairs_skipped + other.pairs_skipped,
                       evidence=evidence)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "name": self.name,
            "verdict": self.verdict,
            "worst_margin": jnum(self.worst_margin),
            "witness": list(self.witness),
            "witness_lhs": jnum(self.witness_lhs),
            "witness_rhs": jnum(self.witness_rhs),
            "pairs_checked": self.pairs_checked,
            "pairs_skipped": self.pairs_skipped,
            "failures": self.failures,
            "parameters": self.parameters,
            "seed": self.seed,
            "evidence": self.evidence,
            "assumptions": list(self.assumptions),
            **self.extra,
        }


def _order_key(witness):
    return tuple(tuple(w) if isinstance(w, list) else (w,) for w in witness)


def pair_set(space: MetricSpace, n_samples: int, rng: np.random.Generator, points=None):
    """Return ``(X, Y, evidence)`` with the pairs a checker will evaluate.

    * ``points`` given: all ordered pairs of those points.
    * finite carrier with ``|X|^2 <= 10^6``: all ordered pairs (exact).
    * otherwise: ``n_samples`` i.i.d. pairs, plus for boxes all pairs of a
      ``ceil(sqrt(n_samples))``-point lattice.
    """
    if points is not None:
        P = space.coerce_batch(points)
        i, j = np.divmod(np.arange(len(P) ** 2), len(P))
        label = "exact" if space.kind == "finite" else "exhaustive over supplied points"
        return P[i], P[j], label
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    if space.kind == "finite":
        n = space.size
        if n * n <= EXHAUSTIVE_PAIRS:
            i, j = np.divmod(np.arange(n * n), n)
            return i, j, "exact"
        return space.sample(n_samples, rng), space.sample(n_samples, rng), "sampled evidence, not proof"
    X = space.sample(n_samples, rng)
    Y = space.sample(n_samples, rng)
    g = math.isqrt(n_samples - 1) + 1
    L = space.lattice(g)
    i, j = np.divmod(np.arange(len(L) ** 2), len(L))
    return (np.concatenate([X, L[i]]), np.concatenate([Y, L[j]]),
            "sampled evidence, not proof")


def _certify(name, space, X, Y, lhs, rhs, skip, parameters, seed, evidence, extra=None):
    valid = ~skip
    n_valid = int(np.count_nonzero(valid))
    if n_valid == 0:
        raise PreconditionError("no admissible pairs to check (all pairs have x = y)")
    margin = rhs - lhs
    ok = leq(lhs, rhs)
    failures = int(np.count_nonzero(valid & ~ok))
    m = np.where(valid, margin, np.inf)
    worst = float(np.min(m))
    ties = np.flatnonzero(m == worst)
    if ties.size > 1:
        keys = [(_order_key([space.point_key(X[t]), space.point_key(Y[t])]), t) for t in ties]
        k = min(keys)[1]
    else:
        k = int(ties[0])
    return CertificateReport(
        condition=CONDITIONS[name], name=name, verdict="pass" if failures == 0 else "fail",
        worst_margin=worst, witness=(space.point_key(X[k]), space.point_key(Y[k])),
        pairs_checked=n_valid, pairs_skipped=int(np.count_nonzero(skip)), failures=failures,
        witness_lhs=float(lhs[k]), witness_rhs=float(rhs[k]), parameters=parameters, seed=seed,
        evidence=evidence, extra=dict(extra or {}),
    )


def _setup(space, T, n_samples, seed, points):
    seed = space.seed if seed is None else int(seed)
    X, Y, evidence = pair_set(space, n_samples, make_rng(seed, _STREAM), points)
    TX = T.apply_batch(space, X)
    TY = T.apply_batch(space, Y)
    return seed, X, Y, TX, TY, evidence


def _unit_interval(name, value):
    if not (0 <= value < 1):
        raise ParameterError(f"{name} must lie in [0, 1), got {value!r}")


def check_banach(space: MetricSpace, T: SelfMap, alpha: float, n_samples: int = 10_000,
                 seed: int | None = None, points=None) -> CertificateReport:
    """Certify ``d(Tx, Ty) <= alpha * d(x, y)`` with ``alpha`` in ``[0, 1)``."""
    _unit_interval("alpha", alpha)
    seed, X, Y, TX, TY, evidence = _setup(space, T, n_samples, seed, points)
    lhs = space.dist(TX, TY)
    rhs = alpha * space.dist(X, Y)
    return _certify("banach", space, X, Y, lhs, rhs, np.zeros(len(lhs), bool),
                    {"alpha": alpha}, seed, evidence)


def check_weak_contraction(space: MetricSpace, T: SelfMap, alpha: float, lam: float,
                           n_samples: int = 10_000, seed: int | None = None,
                           points=None) -> CertificateReport:
    """Certify ``d(Tx, Ty) <= alpha * d(x, y) + lam * d(Tx, y)``."""
    _unit_interval("alpha", alpha)
    if not lam >= 0:
        raise ParameterError(f"lambda must be >= 0, got {lam!r}")
    seed, X, Y, TX, TY, evidence = _setup(space, T, n_samples, seed, points)
    lhs = space.dist(TX, TY)
    rhs = alpha * space.dist(X, Y) + lam * space.dist(TX, Y)
    return _certify("weak", space, X, Y, lhs, rhs, np.zeros(len(lhs), bool),
                    {"alpha": alpha, "lambda": lam}, seed, evidence)


def _psi_precondition(psi, space, what):
    grid = psi.grid if psi.grid is not None else default_grid(space.diam_estimate())[1:]
    rep = validate_comparison(psi, grid)
    if not rep.check("strictly subunitary").passed:
        w = rep.check("strictly subunitary").witness
        raise PreconditionError(f"{what} is not strictly subunitary (witness s = {w[0]!r})")
    return {"psi_validation": rep.to_dict()}


def check_altering_contraction(es: SymmetricE, T: SelfMap, psi: ComparisonFunction,
                               n_samples: int = 10_000, seed: int | None = None,
                               points=None) -> CertificateReport:
    """Certify ``e(Tx, Ty) <= psi(d(x, y)) * M(x, y)`` over pairs with ``x != y``.

    Raises :class:`PreconditionError` when ``psi`` fails the pointwise
    ``psi(s) < 1`` check.  Pairs with ``d(x, y) <= 1e-12`` are skipped and
    counted in ``pairs_skipped``.
    """
    space = es.space
    extra = _psi_precondition(psi, space, "psi")
    seed, X, Y, TX, TY, evidence = _setup(space, T, n_samples, seed, points)
    d = space.dist(X, Y)
    M = m_functionals_batch(es, T, X, Y, TX, TY).M
    lhs = es.batch(TX, TY)
    rhs = psi(d) * M
    params = {"phi": es.phi.describe(), "psi": psi.describe()}
    return _certify("altering", space, X, Y, lhs, rhs, d <= EPS_ABS, params, seed, evidence, extra)


def check_abc_contraction(es: SymmetricE, T: SelfMap, a, b, c, n_samples: int = 10_000,
                          seed: int | None = None, points=None) -> CertificateReport:
    """Certify the three-coefficient altering condition over pairs with ``x != y``.

    ``a``, ``b``, ``c`` are comparison functions or plain numbers.  The sum
    ``a + 2b + c`` must be strictly subunitary on the grid.
    """
    a, b, c = as_comparison(a), as_comparison(b), as_comparison(c)
    space = es.space
    psi = psi_sum(a, b, c)
    extra = _psi_precondition(psi, space, "a+2b+c")
    seed, X, Y, TX, TY, evidence = _setup(space, T, n_samples, seed, points)
    d = space.dist(X, Y)
    lhs = es.batch(TX, TY)
    rhs = (a(d) * es.batch(X, Y)
           + b(d) * (es.batch(X, TX) + es.batch(Y, TY))
           + c(d) * np.minimum(es.batch(X, TY), es.batch(TX, Y)))
    params = {"phi": es.phi.describe(), "a": a.describe(), "b": b.describe(), "c": c.describe()}
    return _certify("abc", space, X, Y, lhs, rhs, d <= EPS_ABS, params, seed, evidence, extra)


def check_theorem5(space: MetricSpace, T: SelfMap, a: float, b: float, K: BoundedDecayFunction,
                   n_samples: int = 10_000, seed: int | None = None,
                   points=None) -> CertificateReport:
    """Certify ``d(Tx,Ty) <= a d(x,y) + b [d(x,Tx) + d(y,Ty)] + K(d(Tx,y))``.

    Requires ``a, b >= 0``, ``a + 2b < 1`` and a decay term with ``K(0) = 0``
    that shrinks towards 0; the report carries the rate ``(a+b)/(1-b)``.
    """
    if a < 0 or b < 0 or not a + 2 * b < 1:
        raise ParameterError(f"need a, b >= 0 and a + 2b < 1, got a={a!r}, b={b!r}")
    krep = validate_decay(K)
    if not krep.check("K(0)=0").passed:
        raise ParameterError(f"decay term must vanish at 0: {krep.check('K(0)=0').detail}")
    if not krep.passed:
        raise ParameterError("decay term does not shrink to 0 along 1e-1 .. 1e-8")
    seed, X, Y, TX, TY, evidence = _setup(space, T, n_samples, seed, points)
    lhs = space.dist(TX, TY)
    rhs = (a * space.dist(X, Y) + b * (space.dist(X, TX) + space.dist(Y, TY))
           + K(space.dist(TX, Y)))
    extra = {"rate": geometric_rate(a, b), "decay_validation": krep.to_dict()}
    return _certify("theorem5", space, X, Y, lhs, rhs, np.zeros(len(lhs), bool),
                    {"a": a, "b": b, "K": K.describe()}, seed, evidence, extra)
