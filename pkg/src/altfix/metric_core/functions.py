"""Scalar functions on R_+: altering functions, comparison functions, decay terms.

Each family carries a formula id and parameters so reports can echo exactly
what was checked.  All instances are vectorized: calling one with an array
returns an array.
"""
from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .._numeric import EPS_ABS, jlist, jnum, leq
from ..errors import ParameterError
from ..expr import evaluate_expression, free_names, parse_expression, to_source
from .report import Check, ValidationReport

__all__ = [
    "ScalarFunction", "AlteringFunction", "ComparisonFunction", "BoundedDecayFunction",
    "default_grid", "validate_altering", "validate_comparison", "validate_decay",
    "as_comparison", "psi_sum", "BOYD_WONG_WINDOWS", "DECAY_GRID",
]

BOYD_WONG_WINDOWS = (1e-2, 1e-3, 1e-4)
BOYD_WONG_MARGIN = 1e-9
_WINDOW_POINTS = 64
DECAY_GRID = tuple(10.0 ** -k for k in range(1, 9))
DEFAULT_T_MAX = 10.0
# stand-in diameter for unbounded carriers
UNBOUNDED_DIAM = 100.0


def default_grid(diam: float | None = None, n: int = 1001) -> np.ndarray:
    """``n`` points on ``[0, 10 * diam]``; ``diam=None`` gives ``[0, 10]``."""
    if diam is None:
        t_max = DEFAULT_T_MAX
    else:
        if not math.isfinite(diam):
            diam = UNBOUNDED_DIAM
        t_max = 10.0 * diam if diam > 0 else DEFAULT_T_MAX
    return np.linspace(0.0, t_max, n)


class ScalarFunction:
    """A vectorized function ``R_+ -> R_+`` with a formula id and parameters."""

    var = "t"

    def __init__(self, func: Callable, formula: str, params: Mapping[str, float] | None = None,
                 grid: Sequence[float] | None = None, source: str | None = None):
        self._func = func
        self.formula = formula
        self.params = dict(params or {})
        self.grid = None if grid is None else np.asarray(grid, dtype=float)
        self.source = source

    def __call__(self, t):
        with np.errstate(over="ignore", invalid="ignore"):
            out = self._func(np.asarray(t, dtype=float))
        if np.ndim(t) == 0:
            return float(np.asarray(out).reshape(()))
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(t)).copy()

    def __repr__(self):
        return f"{type(self).__name__}({self.formula}, {self.params})"

    def describe(self) -> dict:
        d = {"formula": self.formula,
             "params": {k: v if isinstance(v, dict) else jnum(v) for k, v in self.params.items()}}
        if self.source is not None:
            d["source"] = self.source
        return d

    def with_grid(self, grid):
        return type(self)(self._func, self.formula, self.params, grid, self.source)

    @classmethod
    def from_expression(cls, text, params: Mapping[str, float] | None = None, grid=None):
        """Build from an expression in the family's variable (``t`` or ``s``)."""
        node = parse_expression(text) if isinstance(text, str) else text
        params = dict(params or {})
        unbound = free_names(node) - {cls.var} - set(params)
        if unbound:
            raise ParameterError(f"function refers to undeclared name(s) {sorted(unbound)}")

        def f(t):
            env = dict(params)
            env[cls.var] = t
            return evaluate_expression(node, env)

        return cls(f, "expression", params, grid, source=to_source(node))


class AlteringFunction(ScalarFunction):
    """phi: continuous, increasing, phi(t) = 0 iff t = 0."""

    var = "t"

    @classmethod
    def identity(cls):
        return cls(lambda t: t, "identity")

    @classmethod
    def power(cls, p: float):
        if not p > 0:
            raise ParameterError("power altering function needs p > 0")
        return cls(lambda t: np.power(t, p), "power", {"p": p})

    @classmethod
    def log1p(cls):
        return cls(np.log1p, "log1p")

    @classmethod
    def saturating(cls):
        return cls(lambda t: t / (1.0 + t), "saturating")


class ComparisonFunction(ScalarFunction):
    """psi: the factor in front of M(x, y) in the altering contraction."""

    var = "s"

    @classmethod
    def constant(cls, alpha: float):
        return cls(lambda s: np.full(np.shape(s), float(alpha)), "constant", {"alpha": alpha})

    @classmethod
    def piecewise(cls, breaks: Sequence[float], values: Sequence[float]):
        """Right-continuous step function: ``values[i]`` on ``[breaks[i-1], breaks[i])``."""
        breaks = np.asarray(breaks, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(values) != len(breaks) + 1 or np.any(np.diff(breaks) <= 0):
            raise ParameterError("piecewise needs sorted breaks and len(values) == len(breaks) + 1")
        return cls(lambda s: values[np.searchsorted(breaks, s, side="right")], "piecewise",
                   {f"break{i}": float(b) for i, b in enumerate(breaks)}
                   | {f"value{i}": float(v) for i, v in enumerate(values)})

    @classmethod
    def reciprocal(cls):
        return cls(lambda s: 1.0 / (1.0 + s), "reciprocal")

    @classmethod
    def exp_decay(cls, c: float, cap: float = 0.999):
        """``min(c * exp(-s), cap)`` with ``cap < 1``."""
        if not cap < 1:
            raise ParameterError("exp_decay cap must be below 1")
        return cls(lambda s: np.minimum(c * np.exp(-s), cap), "exp_decay", {"c": c, "cap": cap})


class BoundedDecayFunction(ScalarFunction):
    """K: the additive term with K(0) = 0 and K(t) -> 0 as t -> 0."""

    var = "t"

    @classmethod
    def linear(cls, lam: float):
        return cls(lambda t: lam * t, "linear", {"lambda": lam})

    @classmethod
    def sqrt(cls, lam: float):
        return cls(lambda t: lam * np.sqrt(t), "sqrt", {"lambda": lam})

    @classmethod
    def saturating(cls, lam: float):
        return cls(lambda t: lam * t / (1.0 + t), "saturating", {"lambda": lam})


def as_comparison(f) -> ComparisonFunction:
    """Accept a number as shorthand for a constant comparison function."""
    if isinstance(f, ScalarFunction):
        return f if isinstance(f, ComparisonFunction) else ComparisonFunction(
            f._func, f.formula, f.params, f.grid, f.source)
    return ComparisonFunction.constant(float(f))


def psi_sum(a, b, c) -> ComparisonFunction:
    """The pointwise combination ``a + 2b + c``."""
    a, b, c = as_comparison(a), as_comparison(b), as_comparison(c)
    return ComparisonFunction(lambda s: a(s) + 2.0 * b(s) + c(s), "a+2b+c",
                              {"a": a.describe(), "b": b.describe(), "c": c.describe()})


def _grid_info(grid):
    return {"points": int(len(grid)), "t_min": jnum(grid[0]), "t_max": jnum(grid[-1])}


def validate_altering(phi: AlteringFunction, grid=None) -> ValidationReport:
    """Check phi(0) = 0, strict increase, positivity and a continuity proxy on a grid.

    The grid must start at 0 and be sorted ascending.
    """
    grid = np.asarray(grid if grid is not None else (phi.grid if phi.grid is not None
                                                     else default_grid()), dtype=float)
    if grid.size == 0 or grid[0] != 0 or np.any(np.diff(grid) <= 0):
        raise ParameterError("altering grid must be non-empty, strictly ascending and start at 0")
    v = phi(grid)
    checks = []

    checks.append(Check("phi(0)=0", bool(abs(v[0]) <= EPS_ABS),
                        None if abs(v[0]) <= EPS_ABS else [0.0], f"phi(0) = {float(v[0])!r}"))

    inc = np.diff(v) > 0
    bad = np.flatnonzero(~inc)
    checks.append(Check("strictly increasing", bad.size == 0,
                        None if bad.size == 0 else [float(grid[bad[0]]), float(grid[bad[0] + 1])]))

    pos = v[1:] > 0
    badp = np.flatnonzero(~pos)
    checks.append(Check("positive for t>0", badp.size == 0,
                        None if badp.size == 0 else [float(grid[badp[0] + 1])]))

    # |phi(t+h) - phi(t)| must shrink by at least half when h shrinks 10^4-fold
    scale = np.maximum(1.0, grid)
    big = np.abs(phi(grid + 1e-4 * scale) - v)
    small = np.abs(phi(grid + 1e-8 * scale) - v)
    ok = (small <= 0.5 * big) | (small <= EPS_ABS)
    badc = np.flatnonzero(~ok)
    checks.append(Check("continuity proxy", badc.size == 0,
                        None if badc.size == 0 else [float(grid[badc[0]])],
                        "shrinking-difference heuristic", heuristic=True))

    return ValidationReport("altering", checks, grid=_grid_info(grid), subject=phi.describe())


def right_limsup(psi: ComparisonFunction, s, windows=BOYD_WONG_WINDOWS) -> dict:
    """Window maxima of ``psi`` over ``(s, s + w]`` for each ``w`` in ``windows``.

    The limsup estimate at ``s`` is the entry for the smallest window.
    """
    s = np.asarray(s, dtype=float)
    steps = np.arange(1, _WINDOW_POINTS + 1) / _WINDOW_POINTS
    return {w: np.max(psi(s[:, None] + w * steps[None, :]), axis=1) for w in windows}


def _limsup_estimate(windows: dict) -> np.ndarray:
    """Smallest-window maximum, raised by a linear extrapolation to width 0.

    When the window maxima still grow as the window shrinks, the two
    smallest windows are extended linearly to ``w = 0``; this catches
    functions creeping up to 1 from the right, which no finite window sees.
    """
    ws = sorted(windows)
    est = windows[ws[0]]
    if len(ws) < 2:
        return est
    w1, w2 = ws[0], ws[1]
    m1, m2 = windows[w1], windows[w2]
    growing = m1 > m2
    extrap = m1 + (m1 - m2) * w1 / (w2 - w1)
    return np.where(growing, np.maximum(est, extrap), est)


def validate_comparison(psi: ComparisonFunction, grid=None) -> ValidationReport:
    """Pointwise ``psi(s) < 1`` and the right-window limsup estimate on a positive grid.

    The limsup verdict is flagged heuristic in the report; see
    :func:`_limsup_estimate` for how the window maxima are combined.
    """
    if grid is None:
        grid = psi.grid if psi.grid is not None else default_grid()[1:]
    grid = np.asarray(grid, dtype=float)
    grid = grid[grid > 0] if grid.size and grid[0] == 0 else grid
    if grid.size == 0 or np.any(grid <= 0):
        raise ParameterError("comparison grid must contain strictly positive points")
    v = psi(grid)
    bad = np.flatnonzero(~(v < 1))
    sub = Check("strictly subunitary", bad.size == 0,
                None if bad.size == 0 else [float(grid[bad[0]])],
                "" if bad.size == 0 else f"psi({float(grid[bad[0]])!r}) = {float(v[bad[0]])!r}")

    windows = right_limsup(psi, grid)
    est = _limsup_estimate(windows)
    badw = np.flatnonzero(~(est <= 1 - BOYD_WONG_MARGIN))
    bw = Check("right Boyd-Wong", badw.size == 0,
               None if badw.size == 0 else [float(grid[badw[0]])],
               f"windows {list(BOYD_WONG_WINDOWS)}, max estimate {float(np.max(est))!r}",
               heuristic=True)
    return ValidationReport("comparison", [sub, bw], grid=_grid_info(grid),
                            subject=psi.describe(), extra={"limsup_max": jnum(np.max(est)),
                                   "window_max": {repr(w): jnum(np.max(m))
                                                  for w, m in windows.items()}})


def validate_decay(K: BoundedDecayFunction) -> ValidationReport:
    """``K(0) = 0`` and ``|K(t)|`` decreasing to 0 along ``t = 10^-1 .. 10^-8``."""
    k0 = K(0.0)
    zero = Check("K(0)=0", bool(abs(k0) <= EPS_ABS), None if abs(k0) <= EPS_ABS else [0.0],
                 f"K(0) = {float(k0)!r}")
    grid = np.asarray(DECAY_GRID)
    v = np.abs(K(grid))
    mono = leq(v[1:], v[:-1])
    bad = np.flatnonzero(~mono)
    shrinks = bool(v[-1] <= EPS_ABS or v[-1] < v[0])
    decay = Check("K(t)->0 as t->0", bad.size == 0 and shrinks,
                  None if bad.size == 0 and shrinks else
                  [float(grid[bad[0] + 1]) if bad.size else float(grid[-1])],
                  f"|K| on grid: {jlist(v)}")
    return ValidationReport("decay", [zero, decay], grid={"points": len(grid), "t_min": float(grid[-1]),
                                                          "t_max": float(grid[0])},
                            subject=K.describe())
