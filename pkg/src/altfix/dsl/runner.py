"""Execute the experiments of a parsed spec and assemble a deterministic report."""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from .._numeric import jnum, leq, make_rng
from ..cauchy import (
    SequencePrefix,
    extract_rank_sequences,
    geometric_prefix,
    harmonic_prefix,
    is_cauchy,
    is_semi_cauchy,
    verify_prop1_trends,
)
from ..certificates import (
    CONDITIONS,
    check_abc_contraction,
    check_altering_contraction,
    check_banach,
    check_theorem5,
    check_weak_contraction,
)
from ..errors import AltfixError, DomainError, ExtractionError
from ..iteration import classify_picard, picard_orbit
from ..metric_core import (
    AlteringFunction,
    BoundedDecayFunction,
    BoxSpace,
    ComparisonFunction,
    FiniteSpace,
    SelfMap,
    SymmetricE,
    validate_altering,
    validate_comparison,
    validate_metric_axioms,
)
from ..stability import hyers_ulam_probe
from .spec import ProblemSpec, format_problem_spec

__all__ = ["ExperimentReport", "RunAbort", "run_experiments", "build_context", "strip_wall_time",
           "STATUS_ORDER"]

STATUS_ORDER = ("pass", "inconclusive", "fail", "error")
_START_STREAM = 5
_ROLE_CLASS = {"altering": AlteringFunction, "comparison": ComparisonFunction,
               "decay": BoundedDecayFunction}


class RunAbort(AltfixError):
    """A spec that parses but cannot be executed (e.g. its map leaves the carrier)."""

    def __init__(self, index, line, message):
        self.index = index
        self.line = line
        super().__init__(f"experiment {index} (line {line}): {message}")


@dataclass
class _Context:
    spec: ProblemSpec
    space: object
    T: SelfMap
    functions: dict
    settings: dict


def build_context(spec: ProblemSpec) -> _Context:
    """Instantiate the carrier, the map and the named functions of ``spec``."""
    st = spec.setting
    seed = int(st["seed"])
    sd = spec.space
    params = dict(spec.params)
    if sd.kind == "box":
        space = BoxSpace(sd.lo, sd.hi, sd.metric, seed=seed)
        T = SelfMap.from_expression(spec.map.exprs, dim=sd.dim, name=spec.map.name,
                                    parameters=params)
    else:
        space = FiniteSpace(sd.table, sd.labels, seed=seed)
        T = SelfMap.from_table([sd.labels.index(e) for e in spec.map.table], name=spec.map.name)
    functions = {f.name: _ROLE_CLASS[f.role].from_expression(f.expr, params)
                 for f in spec.functions}
    return _Context(spec, space, T, functions, st)


# ---------------------------------------------------------------------------
# Individual experiment kinds: each returns (status, result, files)
# ---------------------------------------------------------------------------

def _knobs(ctx, ex):
    st = ctx.settings
    return (int(ex.get("n_samples", st["n_samples"])), float(ex.get("tol", st["tol"])),
            int(ex.get("max_iters", st["max_iters"])), int(st["seed"]))


def _verdict(ok):
    return "pass" if ok else "fail"


def _run_axioms(ctx, ex, i, out):
    n, _, _, seed = _knobs(ctx, ex)
    rep = validate_metric_axioms(ctx.space, n, seed)
    return _verdict(rep.passed), rep.to_dict(), []


def _run_validate_altering(ctx, ex, i, out):
    rep = validate_altering(ctx.functions[ex.get("phi")])
    return _verdict(rep.passed), rep.to_dict(), []


def _run_validate_comparison(ctx, ex, i, out):
    rep = validate_comparison(ctx.functions[ex.get("psi")])
    return _verdict(rep.passed), rep.to_dict(), []


def _run_certificate(ctx, ex, i, out):
    n, _, _, seed = _knobs(ctx, ex)
    sp, T, fn = ctx.space, ctx.T, ctx.functions
    kind = ex.kind
    if kind == "banach":
        rep = check_banach(sp, T, ex.get("alpha"), n, seed)
    elif kind == "weak":
        rep = check_weak_contraction(sp, T, ex.get("alpha"), ex.get("lambda"), n, seed)
    elif kind == "altering":
        rep = check_altering_contraction(SymmetricE(sp, fn[ex.get("phi")]), T, fn[ex.get("psi")],
                                         n, seed)
    elif kind == "abc":
        coef = [fn[v] if isinstance(v, str) else v for v in (ex.get("a"), ex.get("b"), ex.get("c"))]
        rep = check_abc_contraction(SymmetricE(sp, fn[ex.get("phi")]), T, *coef, n, seed)
    else:
        rep = check_theorem5(sp, T, ex.get("a"), ex.get("b"), fn[ex.get("K")], n, seed)
    return rep.verdict, rep.to_dict(), []


def _fmt_start(space, p):
    return p if isinstance(p, str) else (list(p) if isinstance(p, tuple) else [p])


def _run_iterate(ctx, ex, i, out):
    _, tol, max_iters, _ = _knobs(ctx, ex)
    sp = ctx.space
    phi = ctx.functions[ex.get("phi")] if "phi" in ex else None
    tr = picard_orbit(sp, ctx.T, _fmt_start(sp, ex.get("start")), max_iters, tol, phi=phi,
                      rate=ex.get("rate"))
    res = tr.to_dict(sp)
    rho = tr.rho[tr.rho > 0]
    res["rho_strictly_decreasing"] = bool(np.all(np.diff(rho) < 0))
    if tr.sigma is not None:
        sig = tr.sigma[tr.sigma > 0]
        res["sigma_strictly_decreasing"] = bool(np.all(np.diff(sig) < 0))
    status = {"converged": "pass", "fixed-point-hit": "pass", "max-iters": "inconclusive"}.get(
        tr.stop_reason, "fail")
    if tr.bound_curve is not None and tr.limit is not None:
        z = np.repeat(np.asarray(tr.limit)[None, ...], len(tr.orbit), axis=0)
        err = sp.dist(tr.orbit, z)
        holds = leq(err, tr.bound_curve + tol)
        res["bound_holds"] = bool(np.all(holds))
        res["bound_worst_slack"] = jnum(np.min(tr.bound_curve + tol - err))
        if not res["bound_holds"]:
            status = "fail"
    files = []
    if out is not None:
        name = f"trace_{i}.csv"
        tr.write_csv(os.path.join(out, name), sp)
        files.append(name)
    return status, res, files


def _starts(ctx, spec_value):
    sp = ctx.space
    if isinstance(spec_value, tuple) and len(spec_value) == 2 and spec_value[0] in ("grid", "random"):
        how, n = spec_value
        if how == "grid":
            P = sp.lattice(n)
        else:
            P = sp.sample(n, make_rng(int(ctx.settings["seed"]), _START_STREAM))
        return list(P)
    return [_fmt_start(sp, p) for p in spec_value]


def _run_classify(ctx, ex, i, out):
    _, tol, max_iters, _ = _knobs(ctx, ex)
    res = classify_picard(ctx.space, ctx.T, _starts(ctx, ex.get("starts")), max_iters, tol)
    status = "inconclusive" if res.verdict == "inconclusive" else "pass"
    return status, res.to_dict(), []


def _run_cauchy(ctx, ex, i, out):
    _, tol, max_iters, _ = _knobs(ctx, ex)
    N = ex.get("N")
    src = ex.get("source")
    if src == "harmonic":
        seq = harmonic_prefix(N)
    elif src == "geometric":
        seq = geometric_prefix(N)
    else:
        tr = picard_orbit(ctx.space, ctx.T, _fmt_start(ctx.space, ex.get("start")), N, tol)
        if len(tr.orbit) < 3:
            return "inconclusive", {"source": src, "detail":
                                    f"orbit stopped after {tr.steps} step(s) ({tr.stop_reason})"}, []
        seq = SequencePrefix(tr.orbit, ctx.space)
    window = ex.get("window", max(1, seq.N // 10))
    tail = min(ex.get("tail", 1000), len(seq))
    res = {"source": src, "N": seq.N,
           "semi_cauchy": is_semi_cauchy(seq, window, tol),
           "cauchy": is_cauchy(seq, tail, tol)}
    try:
        ranks = extract_rank_sequences(seq, ex.get("eta"), ex.get("J"))
    except ExtractionError as exc:
        res["rank_sequences"] = {"error": str(exc), "first_failing_j": exc.first_failing_j}
        return "inconclusive", res, []
    res["rank_sequences"] = ranks.to_dict()
    if ranks.J + 1 >= 10:
        res["trends"] = verify_prop1_trends(ranks, ex.get("tail_fraction", 0.5),
                                            ex.get("trend_tol", 1e-2))
        res["trends"].pop("deviation_curves")
    rd = res["rank_sequences"]
    status = _verdict(rd["flags_above"] and rd["flags_gap"] and rd["squeeze"])
    files = []
    if out is not None:
        name = f"ranks_{i}.csv"
        ranks.write_csv(os.path.join(out, name))
        files.append(name)
    return status, res, files


def _run_stability(ctx, ex, i, out):
    n, tol, max_iters, seed = _knobs(ctx, ex)
    res = hyers_ulam_probe(ctx.space, ctx.T, _fmt_start(ctx.space, ex.get("u0")), ex.get("delta"),
                           ex.get("trials"), max_iters, tol, lam=ex.get("rate"),
                           n_mu_samples=n, seed=seed)
    d = res.to_dict()
    status = "inconclusive" if res.verdict == "inconclusive" else "pass"
    if res.rate is not None:
        own = [t.get("bound_own_limit") for t in res.trials]
        d["bound_holds"] = all(v is not False for v in own)
        if not d["bound_holds"]:
            status = "fail"
    return status, d, []


_RUNNERS = {
    "axioms": _run_axioms,
    "validate_altering": _run_validate_altering,
    "validate_comparison": _run_validate_comparison,
    "banach": _run_certificate,
    "weak": _run_certificate,
    "altering": _run_certificate,
    "abc": _run_certificate,
    "theorem5": _run_certificate,
    "iterate": _run_iterate,
    "classify": _run_classify,
    "cauchy": _run_cauchy,
    "stability": _run_stability,
}


def _run_one(ctx, ex, i, out):
    t0 = time.perf_counter()
    try:
        status, result, files = _RUNNERS[ex.kind](ctx, ex, i, out)
    except DomainError as exc:
        raise RunAbort(i, ex.line, str(exc)) from exc
    except AltfixError as exc:
        status, result, files = "error", {"error": type(exc).__name__, "message": str(exc)}, []
    section = {"index": i, "kind": ex.kind}
    if ex.kind in CONDITIONS:
        section["condition"] = CONDITIONS[ex.kind]
    section.update({"line": ex.line, "parameters": _clean(dict(ex.params)), "status": status,
                    "result": _clean(result), "files": files,
                    "wall_time_s": round(time.perf_counter() - t0, 6)})
    return section


def _clean(obj):
    """Recursively convert numpy values and tuples into strict-JSON friendly objects."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer, float, np.floating)):
        return jnum(obj)
    return obj


def worst_status(statuses) -> str:
    statuses = list(statuses)
    if not statuses:
        return "pass"
    return max(statuses, key=STATUS_ORDER.index)


@dataclass
class ExperimentReport:
    """Structured outcome of a spec run; JSON with a fixed key order."""

    spec_text: str
    settings: dict
    sections: list
    status: str
    artifact_version: str = __version__
    wall_time_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        counts = {s: sum(1 for sec in self.sections if sec["status"] == s) for s in STATUS_ORDER}
        return {
            "artifact": "altfix",
            "artifact_version": self.artifact_version,
            "spec": {"text": self.spec_text, "settings": self.settings},
            "status": self.status,
            "counts": counts,
            "sections": self.sections,
            "wall_time_s": self.wall_time_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(spec_text=d["spec"]["text"], settings=d["spec"]["settings"],
                   sections=d["sections"], status=d["status"],
                   artifact_version=d["artifact_version"], wall_time_s=d["wall_time_s"])

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls.from_dict(json.loads(text))

    @property
    def exit_code(self) -> int:
        """0 all pass, 1 any fail or error, 2 inconclusive without failures."""
        return {"pass": 0, "inconclusive": 2, "fail": 1, "error": 1}[self.status]


def strip_wall_time(obj):
    """Copy of a report dict (or JSON text) with every ``wall_time_s`` removed."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    return _drop_wall_time(obj)


def _drop_wall_time(obj):
    if isinstance(obj, dict):
        return {k: _drop_wall_time(v) for k, v in obj.items() if k != "wall_time_s"}
    if isinstance(obj, list):
        return [_drop_wall_time(v) for v in obj]
    return obj


def run_experiments(spec: ProblemSpec, out_dir=None, kinds=None, jobs: int = 1) -> ExperimentReport:
    """Run the experiments of ``spec`` in declaration order.

    ``kinds`` restricts the run to a subset of experiment kinds (indices in
    the report still refer to the full experiment list).  With ``jobs > 1``
    experiments run on a thread pool; sections keep declaration order.
    Module errors are embedded as ``status: error`` sections; a
    :class:`DomainError` raised while evaluating the spec file's own map aborts
    the run with :class:`RunAbort`.
    """
    t0 = time.perf_counter()
    ctx = build_context(spec)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    todo = [(i, ex) for i, ex in enumerate(spec.experiments) if kinds is None or ex.kind in kinds]
    if jobs > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            sections = list(pool.map(lambda p: _run_one(ctx, p[1], p[0], out_dir), todo))
    else:
        sections = [_run_one(ctx, ex, i, out_dir) for i, ex in todo]
    settings = {k: jnum(v) for k, v in spec.settings}
    report = ExperimentReport(format_problem_spec(spec), settings, sections,
                              worst_status(s["status"] for s in sections),
                              wall_time_s=round(time.perf_counter() - t0, 6))
    return report

