"""Tolerance rule, seeded generators and JSON-safe scalar conversion."""
from __future__ import annotations

import math

import numpy as np

EPS_ABS = 1e-12
EPS_REL = 1e-9


def tolerance(a, b):
    """Allowed slack for comparing ``a`` against ``b``."""
    return EPS_ABS + EPS_REL * np.maximum(np.abs(a), np.abs(b))


def leq(a, b):
    """Tolerant ``a <= b``; works elementwise on arrays."""
    return a <= b + tolerance(a, b)


def close(a, b):
    return np.abs(a - b) <= tolerance(a, b)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``seed`` and a stream id."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), *[int(s) for s in stream]])
    return np.random.Generator(np.random.Philox(ss))


def jnum(x):
    """Convert a scalar to something ``json`` writes as strict JSON."""
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def jlist(values):
    return [jnum(v) for v in np.asarray(values, dtype=float).ravel()]
