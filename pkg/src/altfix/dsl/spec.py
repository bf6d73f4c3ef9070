"""Problem-specification files: parsing, validation and canonical printing.

A spec is line oriented::

    altfix-spec v1
    # comments run to end of line
    set seed=42 tol=1e-9
    space box dim=1 lo=-10 hi=10 metric=euclid
    param c = 1
    map T = x/2 + c
    altering phi = t^2
    comparison psi = 1/(1+s)
    decay K = t
    experiment banach alpha=0.5
    experiment iterate start=0 rate=0.5

Finite carriers use ``space finite points=p0,p1,p2 table=0,1,2;1,0,1;2,1,0``
and ``map T = table p1,p1,p2``.  Multi-dimensional maps are tuples
``map T = (x1/2, x2/3)``; points are written ``1,2`` and point lists
``1,2;3,4``.  In one dimension a point list is just ``-5,0,7``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any

from ..errors import AltfixError
from ..expr import ExprSyntaxError, free_names, parse_expression, parse_expression_list, to_source

__all__ = [
    "SpecError", "ProblemSpec", "SpaceDecl", "MapDecl", "FunctionDecl", "ExperimentDecl",
    "parse_problem_spec", "format_problem_spec", "HEADER", "DEFAULTS", "EXPERIMENT_KINDS",
]

HEADER = "altfix-spec v1"
DEFAULTS = {"seed": 42, "tol": 1e-9, "max_iters": 10**6, "n_samples": 10**4}
ROLES = ("altering", "comparison", "decay")
ROLE_VAR = {"altering": "t", "comparison": "s", "decay": "t"}
METRICS = ("euclid", "max", "taxicab")


class SpecError(AltfixError):
    """Syntax or semantic problem in a spec, with a 1-based line/column."""

    def __init__(self, kind: str, line: int, col: int, message: str, expected=()):
        self.kind = kind
        self.line = line
        self.col = col
        self.message = message
        self.expected = tuple(expected)
        text = f"{kind} error at line {line}, column {col}: {message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        super().__init__(text)


# ---------------------------------------------------------------------------
# Structured spec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceDecl:
    kind: str
    lo: tuple = ()
    hi: tuple = ()
    metric: str = "euclid"
    labels: tuple = ()
    table: tuple = ()

    @property
    def dim(self) -> int:
        return len(self.lo) if self.kind == "box" else 0


@dataclass(frozen=True)
class MapDecl:
    name: str
    exprs: tuple | None = None
    table: tuple | None = None


@dataclass(frozen=True)
class FunctionDecl:
    role: str
    name: str
    expr: Any


@dataclass(frozen=True)
class ExperimentDecl:
    kind: str
    params: tuple
    line: int = field(default=0, compare=False)

    def get(self, key, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def __contains__(self, key):
        return any(k == key for k, _ in self.params)


@dataclass(frozen=True)
class ProblemSpec:
    space: SpaceDecl
    map: MapDecl
    params: tuple = ()
    functions: tuple = ()
    experiments: tuple = ()
    settings: tuple = tuple(DEFAULTS.items())
    version: str = HEADER

    @property
    def setting(self) -> dict:
        return dict(self.settings)

    def function(self, name) -> FunctionDecl:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def with_settings(self, **overrides) -> "ProblemSpec":
        s = dict(self.settings)
        s.update({k: v for k, v in overrides.items() if v is not None})
        return ProblemSpec(self.space, self.map, self.params, self.functions, self.experiments,
                           tuple((k, s[k]) for k in DEFAULTS), self.version)


# ---------------------------------------------------------------------------
# Experiment schemas: key -> (value type, required)
#   num, int: scalars; point / points / starts: carrier points;
#   ref:<role>: a declared function; coef: number or comparison name;
#   enum:<a|b>: one of the listed words
# ---------------------------------------------------------------------------

_COMMON = {"n_samples": ("int", False), "tol": ("num", False), "max_iters": ("int", False)}

EXPERIMENT_KINDS = {
    "axioms": {},
    "validate_altering": {"phi": ("ref:altering", True)},
    "validate_comparison": {"psi": ("ref:comparison", True)},
    "banach": {"alpha": ("num", True)},
    "weak": {"alpha": ("num", True), "lambda": ("num", True)},
    "altering": {"phi": ("ref:altering", True), "psi": ("ref:comparison", True)},
    "abc": {"phi": ("ref:altering", True), "a": ("coef", True), "b": ("coef", True),
            "c": ("coef", True)},
    "theorem5": {"a": ("num", True), "b": ("num", True), "K": ("ref:decay", True)},
    "iterate": {"start": ("point", True), "rate": ("num", False), "phi": ("ref:altering", False)},
    "classify": {"starts": ("starts", True)},
    "cauchy": {"source": ("enum:harmonic|geometric|orbit", True), "N": ("int", True),
               "eta": ("num", True), "J": ("int", True), "start": ("point", False),
               "window": ("int", False), "tail": ("int", False),
               "tail_fraction": ("num", False), "trend_tol": ("num", False)},
    "stability": {"u0": ("point", True), "delta": ("num", True), "trials": ("int", True),
                  "rate": ("num", False)},
}
for _schema in EXPERIMENT_KINDS.values():
    for _k, _v in _COMMON.items():
        _schema.setdefault(_k, _v)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")
_KV = re.compile(r"(\S+?)=(\S*)")


def _num(text, line, col, what="number"):
    t = text.strip()
    try:
        v = float(t)
    except ValueError:
        raise SpecError("syntax", line, col, f"invalid {what} {t!r}", (what,)) from None
    if math.isnan(v):
        raise SpecError("syntax", line, col, f"invalid {what} {t!r}", (what,))
    return v


def _int(text, line, col):
    try:
        return int(text)
    except ValueError:
        raise SpecError("syntax", line, col, f"invalid integer {text!r}", ("integer",)) from None


def _fmt_num(v) -> str:
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _split_kv(rest, line, col0):
    """``key=value`` tokens of a statement tail, with their columns."""
    out = []
    pos = 0
    for tok in rest.split():
        start = rest.index(tok, pos)
        pos = start + len(tok)
        col = col0 + start
        m = _KV.fullmatch(tok)
        if m is None:
            raise SpecError("syntax", line, col, f"expected key=value, found {tok!r}", ("key=value",))
        key, val = m.group(1), m.group(2)
        if val == "":
            raise SpecError("syntax", line, col + len(key) + 1, f"missing value for {key!r}", ("value",))
        out.append((key, val, col, col + len(key) + 1))
    keys = [k for k, *_ in out]
    for i, k in enumerate(keys):
        if k in keys[:i]:
            raise SpecError("semantic", line, out[i][2], f"duplicate key {k!r}")
    return out


class _Builder:
    def __init__(self):
        self.space = None
        self.space_line = 0
        self.map = None
        self.map_line = (0, 0)
        self.params = {}
        self.functions = {}
        self.function_pos = {}
        self.raw_experiments = []
        self.settings = {}


def _parse_space(rest, line, col0):
    parts = rest.split(None, 1)
    if not parts:
        raise SpecError("syntax", line, col0, "missing space kind", ("box", "finite"))
    kind = parts[0]
    kv = _split_kv(parts[1] if len(parts) > 1 else "", line,
                   col0 + (rest.index(parts[1]) if len(parts) > 1 else len(rest)))
    vals = {k: (v, c, vc) for k, v, c, vc in kv}
    if kind == "box":
        allowed = {"dim", "lo", "hi", "metric"}
        for k, (_, c, _) in vals.items():
            if k not in allowed:
                raise SpecError("semantic", line, c, f"unknown key {k!r} for box space", sorted(allowed))
        for req in ("lo", "hi"):
            if req not in vals:
                raise SpecError("semantic", line, col0, f"box space needs {req}=", (req,))
        lo = tuple(_num(x, line, vals["lo"][2]) for x in vals["lo"][0].split(","))
        hi = tuple(_num(x, line, vals["hi"][2]) for x in vals["hi"][0].split(","))
        dim = _int(vals["dim"][0], line, vals["dim"][2]) if "dim" in vals else max(len(lo), len(hi))
        if dim < 1:
            raise SpecError("semantic", line, vals["dim"][2], "dim must be >= 1")
        if len(lo) == 1:
            lo = lo * dim
        if len(hi) == 1:
            hi = hi * dim
        if len(lo) != dim or len(hi) != dim:
            raise SpecError("semantic", line, vals["lo"][2], f"lo/hi must have 1 or {dim} entries")
        if any(a > b for a, b in zip(lo, hi)):
            raise SpecError("semantic", line, vals["lo"][2], "box bounds need lo <= hi")
        metric = vals["metric"][0] if "metric" in vals else "euclid"
        if metric not in METRICS:
            raise SpecError("semantic", line, vals["metric"][2], f"unknown metric {metric!r}", METRICS)
        return SpaceDecl("box", lo=lo, hi=hi, metric=metric)
    if kind == "finite":
        allowed = {"points", "table"}
        for k, (_, c, _) in vals.items():
            if k not in allowed:
                raise SpecError("semantic", line, c, f"unknown key {k!r} for finite space",
                                sorted(allowed))
        if "table" not in vals:
            raise SpecError("semantic", line, col0, "finite space needs table=", ("table",))
        rows = tuple(tuple(_num(x, line, vals["table"][2]) for x in r.split(","))
                     for r in vals["table"][0].split(";"))
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise SpecError("semantic", line, vals["table"][2], "distance table must be square")
        if "points" in vals:
            labels = tuple(vals["points"][0].split(","))
            for lab in labels:
                if not _NAME.match(lab):
                    raise SpecError("syntax", line, vals["points"][2], f"invalid point label {lab!r}",
                                    ("identifier",))
            if len(labels) != n or len(set(labels)) != n:
                raise SpecError("semantic", line, vals["points"][2],
                                f"need {n} distinct point labels, got {len(labels)}")
        else:
            labels = tuple(f"p{i}" for i in range(n))
        return SpaceDecl("finite", labels=labels, table=rows)
    raise SpecError("syntax", line, col0, f"unknown space kind {kind!r}", ("box", "finite"))


def _parse_assignment(rest, line, col0, what):
    m = re.match(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*=", rest)
    if m is None:
        raise SpecError("syntax", line, col0, f"expected '<name> = <expression>' after {what}",
                        ("name", "="))
    body = rest[m.end():]
    if not body.strip():
        raise SpecError("syntax", line, col0 + m.end(), "missing expression", ("expression",))
    return m.group(1), body, col0 + m.end()


def _parse_expr(text, line, col, many=False):
    try:
        return parse_expression_list(text) if many else parse_expression(text)
    except ExprSyntaxError as exc:
        raise SpecError("syntax", line, col + exc.pos, str(exc), exc.expected) from None


def _locate_name(node, name):
    """Offset of the first occurrence of ``name`` in an expression tree."""
    from ..expr import Binary, Call, Unary, Var

    if isinstance(node, Var):
        return node.pos if node.name == name else None
    kids = ()
    if isinstance(node, Unary):
        kids = (node.operand,)
    elif isinstance(node, Binary):
        kids = (node.left, node.right)
    elif isinstance(node, Call):
        kids = node.args
    for k in kids:
        p = _locate_name(k, name)
        if p is not None:
            return p
    return None


def parse_problem_spec(text: str) -> ProblemSpec:
    """Parse and validate a spec; raises :class:`SpecError` with line/column."""
    b = _Builder()
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        stripped = line.strip()
        col0 = indent + 1
        if not header_seen:
            if stripped != HEADER:
                raise SpecError("syntax", lineno, col0, f"first line must be {HEADER!r}", (HEADER,))
            header_seen = True
            continue
        word, _, rest = stripped.partition(" ")
        rest_col = col0 + len(word) + 1
        if word == "space":
            if b.space is not None:
                raise SpecError("semantic", lineno, col0, "space declared twice")
            b.space = _parse_space(rest, lineno, rest_col)
            b.space_line = lineno
        elif word == "set":
            for k, v, c, vc in _split_kv(rest, lineno, rest_col):
                if k not in DEFAULTS:
                    raise SpecError("semantic", lineno, c, f"unknown setting {k!r}", sorted(DEFAULTS))
                if k in b.settings:
                    raise SpecError("semantic", lineno, c, f"setting {k!r} given twice")
                b.settings[k] = (_int(v, lineno, vc) if k in ("seed", "max_iters", "n_samples")
                                 else _num(v, lineno, vc), lineno, vc)
        elif word == "param":
            name, body, bcol = _parse_assignment(rest, lineno, rest_col, "param")
            if name in b.params:
                raise SpecError("semantic", lineno, rest_col, f"param {name!r} declared twice")
            b.params[name] = _num(body, lineno, bcol)
        elif word == "map":
            if b.map is not None:
                raise SpecError("semantic", lineno, col0, "map declared twice")
            name, body, bcol = _parse_assignment(rest, lineno, rest_col, "map")
            bs = body.strip()
            if bs.startswith("table ") or bs == "table":
                entries = tuple(e.strip() for e in bs[5:].split(","))
                b.map = MapDecl(name, table=entries)
            else:
                b.map = MapDecl(name, exprs=_parse_expr(body, lineno, bcol, many=True))
            b.map_line = (lineno, bcol)
        elif word in ROLES:
            name, body, bcol = _parse_assignment(rest, lineno, rest_col, word)
            if name in b.functions:
                raise SpecError("semantic", lineno, rest_col, f"function {name!r} declared twice")
            b.functions[name] = FunctionDecl(word, name, _parse_expr(body, lineno, bcol))
            b.function_pos[name] = (lineno, bcol)
        elif word == "experiment":
            parts = rest.split(None, 1)
            if not parts:
                raise SpecError("syntax", lineno, rest_col, "missing experiment kind",
                                sorted(EXPERIMENT_KINDS))
            kind = parts[0]
            if kind not in EXPERIMENT_KINDS:
                raise SpecError("semantic", lineno, rest_col, f"unknown experiment kind {kind!r}",
                                sorted(EXPERIMENT_KINDS))
            tail = parts[1] if len(parts) > 1 else ""
            tail_col = rest_col + (rest.index(tail) if tail else len(rest))
            b.raw_experiments.append((kind, _split_kv(tail, lineno, tail_col), lineno, rest_col))
        else:
            raise SpecError("syntax", lineno, col0, f"unknown statement {word!r}",
                            ("space", "set", "param", "map", "altering", "comparison", "decay",
                             "experiment"))
    if not header_seen:
        raise SpecError("syntax", 1, 1, "empty spec", (HEADER,))
    if b.space is None:
        raise SpecError("semantic", 1, 1, "no space declared", ("space",))
    if b.map is None:
        raise SpecError("semantic", 1, 1, "no map declared", ("map",))
    return _finish(b)


def _check_map(b):
    sp, mp = b.space, b.map
    line, col = b.map_line
    if sp.kind == "finite":
        if mp.table is None:
            raise SpecError("semantic", line, col, "finite spaces need 'map T = table ...'", ("table",))
        if len(mp.table) != len(sp.labels):
            raise SpecError("semantic", line, col,
                            f"map table has {len(mp.table)} entries for {len(sp.labels)} points")
        out = []
        for e in mp.table:
            if e in sp.labels:
                out.append(e)
            elif e.isdigit() and int(e) < len(sp.labels):
                out.append(sp.labels[int(e)])
            else:
                raise SpecError("semantic", line, col, f"map table entry {e!r} is not a point")
        return MapDecl(mp.name, table=tuple(out))
    if mp.exprs is None:
        raise SpecError("semantic", line, col, "box spaces need an expression map", ("expression",))
    if len(mp.exprs) != sp.dim:
        raise SpecError("semantic", line, col,
                        f"map has {len(mp.exprs)} component(s) but the space has dim {sp.dim}")
    coords = {f"x{k + 1}" for k in range(sp.dim)} | ({"x"} if sp.dim == 1 else set())
    for e in mp.exprs:
        for name in sorted(free_names(e) - coords - set(b.params)):
            raise SpecError("semantic", line, col + (_locate_name(e, name) or 0),
                            f"undeclared identifier {name!r} in map")
    return mp


def _check_functions(b):
    for name, f in b.functions.items():
        line, col = b.function_pos[name]
        allowed = {ROLE_VAR[f.role]} | set(b.params)
        for n in sorted(free_names(f.expr) - allowed):
            raise SpecError("semantic", line, col + (_locate_name(f.expr, n) or 0),
                            f"undeclared identifier {n!r} in {f.role} {name!r}")


def _parse_point(text, sp, line, col):
    if sp.kind == "finite":
        if text in sp.labels:
            return text
        if text.isdigit() and int(text) < len(sp.labels):
            return sp.labels[int(text)]
        raise SpecError("semantic", line, col, f"{text!r} is not a point of the finite space")
    coords = tuple(_num(c, line, col, "coordinate") for c in text.split(","))
    if len(coords) != sp.dim:
        raise SpecError("semantic", line, col, f"point needs {sp.dim} coordinate(s)")
    if any(not (lo <= c <= hi) for c, lo, hi in zip(coords, sp.lo, sp.hi)):
        raise SpecError("semantic", line, col, f"point {text} lies outside the box")
    return coords if sp.dim > 1 else coords[0]


def _parse_points(text, sp, line, col):
    if sp.kind == "finite" or sp.dim == 1:
        items = text.split(",")
    else:
        items = text.split(";")
    return tuple(_parse_point(t, sp, line, col) for t in items)


def _parse_value(typ, key, text, b, line, col):
    sp = b.space
    if typ == "num":
        return _num(text, line, col)
    if typ == "int":
        return _int(text, line, col)
    if typ == "point":
        return _parse_point(text, sp, line, col)
    if typ == "points":
        return _parse_points(text, sp, line, col)
    if typ == "starts":
        m = re.fullmatch(r"(grid|random):(\d+)", text)
        if m:
            count = int(m.group(2))
            if count < 1:
                raise SpecError("semantic", line, col, "need at least one start")
            if sp.kind == "box" and not all(math.isfinite(v) for v in sp.lo + sp.hi):
                raise SpecError("semantic", line, col, f"{m.group(1)}: starts need a bounded box")
            return (m.group(1), count)
        return _parse_points(text, sp, line, col)
    if typ.startswith("enum:"):
        options = typ[5:].split("|")
        if text not in options:
            raise SpecError("semantic", line, col, f"invalid value {text!r} for {key}", options)
        return text
    if typ.startswith("ref:") or typ == "coef":
        role = "comparison" if typ == "coef" else typ[4:]
        if typ == "coef":
            try:
                return float(text)
            except ValueError:
                pass
        if not _NAME.match(text):
            raise SpecError("syntax", line, col, f"invalid identifier {text!r}", ("identifier",))
        if text not in b.functions:
            raise SpecError("semantic", line, col, f"undeclared identifier {text!r}",
                            (f"a declared {role} function",))
        if b.functions[text].role != role:
            raise SpecError("semantic", line, col,
                            f"{text!r} is a {b.functions[text].role} function, expected {role}")
        return text
    raise AssertionError(typ)


def _range(cond, line, col, message):
    if not cond:
        raise SpecError("semantic", line, col, message)


def _check_ranges(kind, vals, cols, line, kcol):
    def c(key):
        return cols.get(key, kcol)

    if "n_samples" in vals:
        _range(vals["n_samples"] >= 1, line, c("n_samples"), "n_samples must be >= 1")
    if "tol" in vals:
        _range(vals["tol"] > 0, line, c("tol"), "tol must be > 0")
    if "max_iters" in vals:
        _range(vals["max_iters"] >= 1, line, c("max_iters"), "max_iters must be >= 1")
    if kind in ("banach", "weak"):
        _range(0 <= vals["alpha"] < 1, line, c("alpha"),
               f"alpha={vals['alpha']!r} is out of range: the condition requires alpha in [0,1)")
    if kind == "weak":
        _range(vals["lambda"] >= 0, line, c("lambda"), "lambda must be >= 0")
    if kind == "theorem5":
        _range(vals["a"] >= 0 and vals["b"] >= 0, line, c("a"), "a and b must be >= 0")
        _range(vals["a"] + 2 * vals["b"] < 1, line, c("b"),
               f"a + 2b = {vals['a'] + 2 * vals['b']!r} must be < 1")
    if kind == "abc":
        coefs = [vals[k] for k in "abc"]
        if all(isinstance(v, float) for v in coefs):
            _range(min(coefs) >= 0, line, c("a"), "a, b, c must be >= 0")
            _range(coefs[0] + 2 * coefs[1] + coefs[2] < 1, line, c("a"),
                   f"a + 2b + c = {coefs[0] + 2 * coefs[1] + coefs[2]!r} must be < 1")
    if kind in ("iterate", "stability") and "rate" in vals:
        _range(0 <= vals["rate"] < 1, line, c("rate"), "rate must lie in [0,1)")
    if kind == "cauchy":
        _range(vals["N"] >= 2, line, c("N"), "N must be >= 2")
        _range(vals["eta"] > 0, line, c("eta"), "eta must be > 0")
        _range(vals["J"] >= 0, line, c("J"), "J must be >= 0")
        if vals["source"] == "orbit":
            _range("start" in vals, line, kcol, "source=orbit needs start=")
        if "window" in vals:
            _range(vals["window"] >= 1, line, c("window"), "window must be >= 1")
        if "tail" in vals:
            _range(vals["tail"] >= 2, line, c("tail"), "tail must be >= 2")
        if "tail_fraction" in vals:
            _range(0 < vals["tail_fraction"] <= 1, line, c("tail_fraction"),
                   "tail_fraction must lie in (0,1]")
    if kind == "stability":
        _range(vals["delta"] > 0, line, c("delta"), "delta must be > 0")
        _range(vals["trials"] >= 2, line, c("trials"), "trials must be >= 2")


def _finish(b) -> ProblemSpec:
    mp = _check_map(b)
    _check_functions(b)
    experiments = []
    for kind, kvs, line, kcol in b.raw_experiments:
        schema = EXPERIMENT_KINDS[kind]
        vals, cols = {}, {}
        for key, text, col, vcol in kvs:
            if key not in schema:
                raise SpecError("semantic", line, col, f"unknown key {key!r} for experiment {kind}",
                                sorted(schema))
            vals[key] = _parse_value(schema[key][0], key, text, b, line, vcol)
            cols[key] = vcol
        for key, (_, required) in schema.items():
            if required and key not in vals:
                raise SpecError("semantic", line, kcol, f"experiment {kind} needs {key}=", (key,))
        _check_ranges(kind, vals, cols, line, kcol)
        ordered = tuple((k, vals[k]) for k in schema if k in vals)
        experiments.append(ExperimentDecl(kind, ordered, line))
    settings = {k: v[0] for k, v in b.settings.items()}
    if "tol" in settings and not settings["tol"] > 0:
        raise SpecError("semantic", b.settings["tol"][1], b.settings["tol"][2], "tol must be > 0")
    for k in ("max_iters", "n_samples"):
        if k in settings and settings[k] < 1:
            raise SpecError("semantic", b.settings[k][1], b.settings[k][2], f"{k} must be >= 1")
    if "seed" in settings and not 0 <= settings["seed"] < 2**64:
        raise SpecError("semantic", b.settings["seed"][1], b.settings["seed"][2],
                        "seed must be a 64-bit unsigned integer")
    merged = {k: settings.get(k, v) for k, v in DEFAULTS.items()}
    functions = tuple(b.functions[n] for n in b.functions)
    return ProblemSpec(b.space, mp, tuple(b.params.items()), functions, tuple(experiments),
                       tuple(merged.items()))


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _fmt_point(p):
    if isinstance(p, str):
        return p
    if isinstance(p, tuple):
        return ",".join(_fmt_num(c) for c in p)
    return _fmt_num(p)


def _fmt_value(v, dim):
    if isinstance(v, str):
        return v
    if isinstance(v, tuple) and len(v) == 2 and v[0] in ("grid", "random"):
        return f"{v[0]}:{v[1]}"
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ";".join(_fmt_point(p) for p in v)
        return ",".join(_fmt_point(p) for p in v) if dim <= 1 or not v or isinstance(v[0], str) \
            else _fmt_point(v)
    return _fmt_num(v)


def format_problem_spec(spec: ProblemSpec) -> str:
    """Canonical text for ``spec``; parsing it back yields an equal spec."""
    lines = [HEADER]
    lines.append("set " + " ".join(f"{k}={_fmt_num(v)}" for k, v in spec.settings))
    sp = spec.space
    if sp.kind == "box":
        lines.append(f"space box dim={sp.dim} lo={','.join(_fmt_num(v) for v in sp.lo)} "
                     f"hi={','.join(_fmt_num(v) for v in sp.hi)} metric={sp.metric}")
    else:
        table = ";".join(",".join(_fmt_num(v) for v in row) for row in sp.table)
        lines.append(f"space finite points={','.join(sp.labels)} table={table}")
    for name, value in spec.params:
        lines.append(f"param {name} = {_fmt_num(value)}")
    mp = spec.map
    if mp.table is not None:
        lines.append(f"map {mp.name} = table {','.join(mp.table)}")
    elif len(mp.exprs) == 1:
        lines.append(f"map {mp.name} = {to_source(mp.exprs[0])}")
    else:
        lines.append(f"map {mp.name} = ({', '.join(to_source(e) for e in mp.exprs)})")
    for f in spec.functions:
        lines.append(f"{f.role} {f.name} = {to_source(f.expr)}")
    dim = sp.dim
    for ex in spec.experiments:
        kv = " ".join(f"{k}={_fmt_value(v, dim)}" for k, v in ex.params)
        lines.append(f"experiment {ex.kind}" + (f" {kv}" if kv else ""))
    return "\n".join(lines) + "\n"
