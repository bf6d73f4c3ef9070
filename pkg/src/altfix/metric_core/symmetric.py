"""The symmetric e = phi(d) and the M-functionals built from it."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .functions import AlteringFunction
from .spaces import MetricSpace, SelfMap

__all__ = ["SymmetricE", "MValues", "symmetric_e", "m_functionals", "m_functionals_batch"]


class SymmetricE:
    """``e(x, y) = phi(d(x, y))``: symmetric and reflexive sufficient, not triangular."""

    def __init__(self, space: MetricSpace, phi: AlteringFunction):
        self.space = space
        self.phi = phi

    def __repr__(self):
        return f"SymmetricE({self.space!r}, {self.phi!r})"

    def batch(self, X, Y) -> np.ndarray:
        return self.phi(self.space.dist(X, Y))

    def __call__(self, x, y) -> float:
        return self.phi(self.space.distance(x, y))


def symmetric_e(es: SymmetricE, x, y) -> float:
    return es(x, y)


class MValues(NamedTuple):
    M1: object
    M2: object
    M3: object
    M: object


def m_functionals_batch(es: SymmetricE, T: SelfMap, X, Y, TX=None, TY=None) -> MValues:
    """Vectorized M-functionals over paired batches ``X``, ``Y``.

    Images ``TX``/``TY`` may be passed in when the caller already has them.
    """
    space = es.space
    if TX is None:
        TX = T.apply_batch(space, X)
    if TY is None:
        TY = T.apply_batch(space, Y)
    m1 = es.batch(X, Y)
    m2 = 0.5 * (es.batch(X, TX) + es.batch(Y, TY))
    m3 = np.minimum(es.batch(X, TY), es.batch(TX, Y))
    m = np.maximum(np.maximum(m1, m2), m3)
    return MValues(m1, m2, m3, m)


def m_functionals(es: SymmetricE, T: SelfMap, x, y) -> MValues:
    """``(M1, M2, M3, M)`` at the pair ``(x, y)``.

    M1 = e(x,y); M2 = (e(x,Tx) + e(y,Ty)) / 2; M3 = min(e(x,Ty), e(Tx,y));
    M = max(M1, M2, M3).
    """
    X = es.space.coerce_batch([x])
    Y = es.space.coerce_batch([y])
    vals = m_functionals_batch(es, T, X, Y)
    return MValues(*(float(v[0]) for v in vals))
