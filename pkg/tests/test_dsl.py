import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altfix.dsl import (
    ExperimentReport,
    SpecError,
    evaluate_expression,
    format_problem_spec,
    parse_expression,
    parse_problem_spec,
    run_experiments,
    strip_wall_time,
)
from altfix.dsl.cli import main, resolve_seed
from altfix.dsl.spec import DEFAULTS

SPECS = Path(__file__).resolve().parent.parent / "specs"

MINIMAL = """altfix-spec v1
space box dim=1 lo=-10 hi=10 metric=euclid
map T = x/2
experiment banach alpha=0.5
"""


def spec_with(*lines, space="space box dim=1 lo=-10 hi=10", mp="map T = x/2"):
    return "\n".join(["altfix-spec v1", space, mp, *lines]) + "\n"


# --- expressions through the DSL surface -------------------------------------

def test_evaluate_expression_reexport():
    assert evaluate_expression(parse_expression("x/2 + 1"), {"x": 0}) == 1


# --- parsing ------------------------------------------------------------------

def test_minimal_spec_gets_defaults():
    spec = parse_problem_spec(MINIMAL)
    assert spec.setting == DEFAULTS
    assert spec.space.lo == (-10.0,) and spec.space.metric == "euclid"
    assert [e.kind for e in spec.experiments] == ["banach"]
    assert spec.experiments[0].get("alpha") == 0.5


def test_comments_blank_lines_and_settings():
    spec = parse_problem_spec("# leading comment\n\naltfix-spec v1  # header\n"
                              "set seed=7 tol=1e-6\nspace box lo=0 hi=1\nmap T = x/2 # half\n")
    assert spec.setting["seed"] == 7 and spec.setting["tol"] == 1e-6
    assert spec.setting["max_iters"] == DEFAULTS["max_iters"]


def test_undeclared_function_is_located():
    text = spec_with("comparison psi = 0.25", "altering phi = t^2",
                     "experiment altering phi=phi psi=psi1")
    with pytest.raises(SpecError) as exc:
        parse_problem_spec(text)
    e = exc.value
    assert e.kind == "semantic" and "psi1" in e.message
    assert (e.line, e.col) == (6, text.splitlines()[5].index("psi1") + 1)


def test_alpha_range_cites_interval():
    with pytest.raises(SpecError) as exc:
        parse_problem_spec(spec_with("experiment banach alpha=1.0"))
    assert exc.value.kind == "semantic" and "[0,1)" in exc.value.message


@pytest.mark.parametrize("text, kind, line", [
    ("space box lo=0 hi=1\nmap T = x", "syntax", 1),
    ("altfix-spec v2\nspace box lo=0 hi=1\nmap T = x", "syntax", 1),
    (spec_with("experiment banach alpha=0.5 beta=1"), "semantic", 4),
    (spec_with("experiment banach"), "semantic", 4),
    (spec_with("experiment nosuch"), "semantic", 4),
    (spec_with("experiment banach alpha"), "syntax", 4),
    (spec_with("experiment banach alpha=abc"), "syntax", 4),
    (spec_with(mp="map T = x/ * 2"), "syntax", 3),
    (spec_with(mp="map T = x + q"), "semantic", 3),
    (spec_with(mp="map T = (x, x)"), "semantic", 3),
    (spec_with("altering phi = s"), "semantic", 4),
    (spec_with("decay K = t", "experiment validate_altering phi=K"), "semantic", 5),
    (spec_with("decay K = t", "experiment theorem5 a=0.5 b=0.25 K=K"), "semantic", 5),
    (spec_with("experiment cauchy source=harmonic N=100 eta=0 J=5"), "semantic", 4),
    (spec_with("experiment iterate start=11"), "semantic", 4),
    (spec_with("set speed=1"), "semantic", 4),
    (spec_with("bogus line"), "syntax", 4),
    (spec_with(space="space box dim=2 lo=0,0,0 hi=1"), "semantic", 2),
    (spec_with(space="space box lo=0 hi=1 metric=l7"), "semantic", 2),
    (spec_with(space="space finite table=0,1;1,0", mp="map T = x"), "semantic", 3),
    (spec_with(space="space finite table=0,1;1,0", mp="map T = table p0,p9"), "semantic", 3),
    ("altfix-spec v1\nmap T = x\n", "semantic", 1),
])
def test_spec_errors(text, kind, line):
    with pytest.raises(SpecError) as exc:
        parse_problem_spec(text)
    assert exc.value.kind == kind
    assert exc.value.line == line
    assert exc.value.col >= 1


def test_syntax_error_lists_expected_tokens():
    with pytest.raises(SpecError) as exc:
        parse_problem_spec(spec_with("bogus line"))
    assert "experiment" in exc.value.expected


def test_finite_spec_and_points():
    text = spec_with("experiment iterate start=b", "experiment classify starts=a,b,c",
                     space="space finite points=a,b,c table=0,1,2;1,0,1;2,1,0",
                     mp="map T = table b,c,c")
    spec = parse_problem_spec(text)
    assert spec.map.table == ("b", "c", "c")
    assert spec.experiments[1].get("starts") == ("a", "b", "c")


def test_vector_points():
    spec = parse_problem_spec(spec_with("experiment classify starts=1,1;0,-1",
                                        space="space box dim=2 lo=-1 hi=1 metric=max",
                                        mp="map T = (x1/2, x2/2)"))
    assert spec.experiments[0].get("starts") == ((1.0, 1.0), (0.0, -1.0))


# --- parse -> print -> parse ----------------------------------------------------

@pytest.mark.parametrize("path", sorted(SPECS.glob("*.altfix")), ids=lambda p: p.name)
def test_shipped_specs_roundtrip(path):
    spec = parse_problem_spec(path.read_text())
    text = format_problem_spec(spec)
    again = parse_problem_spec(text)
    assert again == spec
    assert format_problem_spec(again) == text


_num = st.floats(-5, 5, allow_nan=False).map(lambda v: round(v, 3))


@st.composite
def random_spec(draw):
    lines = [f"set seed={draw(st.integers(0, 2**32))} tol={draw(st.sampled_from(['1e-9', '1e-6']))}"]
    c = draw(_num)
    lines.append(f"param c = {c}")
    lines.append("altering phi = t^2 + c*0")
    lines.append("comparison psi = 1/(2 + s)")
    lines.append("decay K = t*abs(c)")
    kinds = draw(st.lists(st.sampled_from([
        f"experiment banach alpha={draw(st.floats(0, 0.99)):.4f}",
        f"experiment weak alpha=0.5 lambda={abs(draw(_num))}",
        "experiment altering phi=phi psi=psi n_samples=10",
        "experiment abc phi=phi a=psi b=0.1 c=0",
        "experiment theorem5 a=0.25 b=0.125 K=K",
        f"experiment iterate start={draw(st.floats(-10, 10)):.6f} rate=0.5",
        "experiment classify starts=grid:5",
        "experiment cauchy source=geometric N=30 eta=0.1 J=2 window=3",
        "experiment stability u0=0 delta=1 trials=3 rate=0.5",
        "experiment axioms n_samples=20",
    ]), max_size=6))
    return spec_with(*lines, *kinds, mp=f"map T = x/2 + min(c, 1) - max(c, 0)")


@settings(max_examples=60, deadline=None)
@given(random_spec())
def test_print_parse_idempotent(text):
    spec = parse_problem_spec(text)
    printed = format_problem_spec(spec)
    assert parse_problem_spec(printed) == spec
    assert format_problem_spec(parse_problem_spec(printed)) == printed


# --- running ------------------------------------------------------------------

def run_file(name, **kw):
    return run_experiments(parse_problem_spec((SPECS / name).read_text()), **kw)


def test_affine_spec_all_pass(tmp_path):
    rep = run_file("affine.altfix", out_dir=str(tmp_path))
    d = rep.to_dict()
    assert d["status"] == "pass"
    kinds = [s["kind"] for s in d["sections"]]
    assert kinds == ["axioms", "banach", "theorem5", "iterate", "classify", "stability"]
    it = d["sections"][3]
    assert it["result"]["limit"][0] == pytest.approx(2, abs=1e-8)
    assert it["result"]["bound_holds"]
    assert it["files"] == ["trace_3.csv"]
    assert (tmp_path / "trace_3.csv").exists()
    assert [s.get("condition") for s in d["sections"][1:3]] == ["a01", "d01"]


def test_identity_spec_unstable():
    d = run_file("identity.altfix").to_dict()
    weak, cls, stab = d["sections"]
    assert weak["condition"] == "a03" and weak["result"]["verdict"] == "pass"
    assert cls["result"]["verdict"] == "strong-picard"
    assert stab["result"]["verdict"] == "unstable"


def test_harmonic_spec_ranks(tmp_path):
    d = run_file("harmonic.altfix", out_dir=str(tmp_path)).to_dict()
    rs = d["sections"][0]["result"]["rank_sequences"]
    assert rs["m"][0] == 0 and rs["n"][0] == 2
    rows = list(csv.reader(open(tmp_path / "ranks_0.csv")))
    assert rows[1][:3] == ["0", "0", "2"]


def test_module_errors_are_embedded():
    text = spec_with("comparison psi = 1", "altering phi = t", "experiment altering phi=phi psi=psi",
                     "experiment banach alpha=0.5")
    d = run_experiments(parse_problem_spec(text)).to_dict()
    assert d["sections"][0]["status"] == "error"
    assert d["sections"][0]["result"]["error"] == "PreconditionError"
    assert d["sections"][1]["status"] == "pass"
    assert d["status"] == "error"


def test_report_roundtrip_and_determinism():
    spec = parse_problem_spec((SPECS / "affine.altfix").read_text())
    a = run_experiments(spec).to_json()
    b = run_experiments(spec, jobs=4).to_json()
    assert ExperimentReport.from_json(a).to_json() == a
    assert strip_wall_time(a) == strip_wall_time(b)
    c = run_experiments(spec.with_settings(seed=43)).to_json()
    assert strip_wall_time(a) != strip_wall_time(c)


def test_report_key_order_is_stable():
    d = json.loads(run_file("identity.altfix").to_json())
    assert list(d) == ["artifact", "artifact_version", "spec", "status", "counts", "sections",
                       "wall_time_s"]
    assert list(d["sections"][0])[:4] == ["index", "kind", "condition", "line"]


# --- CLI ------------------------------------------------------------------------

def write(tmp_path, text, name="s.altfix"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "--spec", str(SPECS / "affine.altfix"), "--quiet"]) == 0
    assert main(["run", "--spec", str(SPECS / "finite_broken.altfix"), "--quiet"]) == 1
    incon = write(tmp_path, spec_with("experiment iterate start=1 max_iters=5", mp="map T = -x"))
    assert main(["run", "--spec", incon, "--quiet"]) == 2
    bad = write(tmp_path, spec_with("experiment banach alpha=1.0"))
    assert main(["run", "--spec", bad, "--quiet"]) == 3
    assert "[0,1)" in capsys.readouterr().err
    leaves = write(tmp_path, spec_with("experiment banach alpha=0.5", mp="map T = 2*x"))
    assert main(["run", "--spec", leaves, "--quiet"]) == 3
    assert main(["verify", "--spec", incon, "--quiet"]) == 3
    assert main(["run", "--spec", str(tmp_path / "missing"), "--quiet"]) == 3


def test_cli_subcommand_filters(capsys):
    assert main(["iterate", "--spec", str(SPECS / "affine.altfix")]) == 0
    d = json.loads(capsys.readouterr().out)
    assert [s["kind"] for s in d["sections"]] == ["iterate"]
    assert d["sections"][0]["index"] == 3


def test_cli_out_dir_and_seed(tmp_path, monkeypatch):
    monkeypatch.delenv("ALTFIX_SEED", raising=False)
    out = tmp_path / "o"
    assert main(["verify", "--spec", str(SPECS / "affine.altfix"), "--out", str(out),
                 "--seed", "5", "--quiet"]) == 0
    d = json.loads((out / "report.json").read_text())
    assert d["spec"]["settings"]["seed"] == 5
    assert "set seed=5" in d["spec"]["text"]


def test_seed_precedence():
    assert resolve_seed(9, {"ALTFIX_SEED": "3"}) == 9
    assert resolve_seed(None, {"ALTFIX_SEED": "3"}) == 3
    assert resolve_seed(None, {}) is None


def test_env_seed_applies(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ALTFIX_SEED", "77")
    main(["verify", "--spec", str(SPECS / "affine.altfix")])
    assert json.loads(capsys.readouterr().out)["spec"]["settings"]["seed"] == 77
    monkeypatch.setenv("ALTFIX_SEED", "nope")
    assert main(["verify", "--spec", str(SPECS / "affine.altfix"), "--quiet"]) == 3


def test_console_script_runs(tmp_path):
    env = dict(os.environ)
    env.pop("ALTFIX_SEED", None)
    outs = []
    for k in range(2):
        r = subprocess.run([sys.executable, "-m", "altfix.dsl.cli", "run", "--spec",
                            str(SPECS / "altering.altfix"), "--out", str(tmp_path / str(k))],
                           capture_output=True, text=True, env=env)
        assert r.returncode == 0, r.stderr
        outs.append(r.stdout)
    assert strip_wall_time(outs[0]) == strip_wall_time(outs[1])
    assert (tmp_path / "0" / "trace_4.csv").read_bytes() == (tmp_path / "1" / "trace_4.csv").read_bytes()
