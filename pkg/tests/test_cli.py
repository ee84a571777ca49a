import json
import subprocess
import sys

import numpy as np
import pytest

from tubenv.cli import EXIT_INPUT, EXIT_MATH, EXIT_OK, main, parse_point, ConfigError
from tubenv.tolerances import TOL

BALL2 = {"kind": "ball", "center": [0, 0], "radius": 2.0}
Y05 = {"kind": "ball", "center": [0, 0], "radius": 0.5}
SHELL = {"n": 2, "seed": 0, "sample_count": 2000, "shell": {"r1": 1.0, "r2": 2.0, "r3": 0.5}}


def lit(*rows):
    return [{"exponents": list(e), "coeff_re": c} for e, c in rows]


@pytest.fixture
def run(tmp_path):
    def _run(cfg, *args):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
        out = tmp_path / "out"
        return main([args[0], "--config", str(path), "--out", str(out), *args[1:]]), out
    return _run


def load(path):
    return json.loads(path.read_text())


def test_check_barrier_constant(run):
    code, out = run({"n": 2, "barrier": {"alpha": lit(((0, 0), 1.0))}, "Y": Y05}, "check-barrier")
    assert code == EXIT_OK
    assert load(out / "barrier_verdict.json")["status"] == "CertifiedExact"


def test_check_barrier_refuted(run):
    code, out = run({"n": 2, "barrier": {"alpha": lit(((2, 0), 2.0))}, "Y": Y05}, "check-barrier")
    assert code == EXIT_MATH
    rec = load(out / "barrier_verdict.json")
    assert rec["status"] == "Refuted" and abs(rec["min_eigenvalue"] + 2) < 1e-12 and "witness" in rec


@pytest.mark.parametrize("cfg", [
    {"n": 2, "barrier": {"alpha": lit(((0, 0), 1.0))}},           # no Y anywhere
    "{not json",
    {"n": 1, "shell": {"r1": 1, "r2": 2, "r3": 0.5}},
    {"n": 2, "X": {"kind": "ball", "center": [0, 0, 0], "radius": 1}, "shell": {"r1": 1, "r2": 2, "r3": 0.5}},
    {"n": 2, "barrier": {"alpha": lit(((0, 0, 1), 1.0))}, "Y": Y05},
], ids=["missing-Y", "bad-json", "n<2", "dim-mismatch", "bad-literal"])
def test_input_errors(run, cfg):
    code, _ = run(cfg, "check-barrier")
    assert code == EXIT_INPUT


def test_unknown_tolerance_key_is_input_error(run):
    code, _ = run(SHELL, "check-barrier", "--tolerance-overrides", "nonsense=1")
    assert code == EXIT_INPUT


def test_tolerance_override_is_scoped(run):
    before = TOL.pd_threshold
    code, _ = run(SHELL, "check-barrier", "--tolerance-overrides", "pd_threshold=5")
    assert code == EXIT_MATH  # min eigenvalue 2 no longer counts as positive definite
    assert TOL.pd_threshold == before


def test_envelope_shell_cloud(run):
    code, out = run(SHELL, "envelope", "--sample", "1000")
    assert code == EXIT_OK
    lines = (out / "cloud.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,y1,y2,label" and len(lines) == 1001
    rows = [l.split(",") for l in lines[1:]]
    labels = {r[-1] for r in rows}
    assert labels <= {"in_domain", "in_envelope", "in_hull", "outside"}
    assert {"in_domain", "in_envelope", "in_hull"} <= labels
    W = np.array([[float(v) for v in r[:-1]] for r in rows])
    lab = np.array([r[-1] for r in rows])
    x2, y2 = (W[:, :2] ** 2).sum(1), (W[:, 2:] ** 2).sum(1)
    envelope_formula = (x2 < 4) & (y2 < 0.25) & (y2 < x2 - 0.75)
    # every domain row is also an envelope row
    assert np.all(envelope_formula[lab == "in_domain"])
    assert load(out / "envelope.json")["samples"]["domain_outside_envelope"] == 0


def test_envelope_is_deterministic(run, tmp_path):
    _, out = run(SHELL, "envelope", "--sample", "300")
    first = (out / "cloud.csv").read_bytes(), (out / "envelope.json").read_bytes()
    _, out = run(SHELL, "envelope", "--sample", "300")
    assert ((out / "cloud.csv").read_bytes(), (out / "envelope.json").read_bytes()) == first


def test_envelope_special_x1x2_serialises_delta(run):
    cfg = {"n": 2, "X": BALL2, "Y": Y05, "barrier": {"alpha": lit(((1, 1), 1.0))}, "envelope": {"kind": "special"}}
    code, out = run(cfg, "envelope")
    assert code == EXIT_OK
    delta = load(out / "envelope.json")["envelope"]["delta"]
    terms = {tuple(r["exponents"]): r["coeff_re"] for r in delta}
    assert terms == {(0, 0, 0, 0): 0.25, (2, 0, 0, 0): 1.0, (0, 2, 0, 0): 1.0, (1, 1, 0, 0): -1.0,
                     (0, 0, 1, 1): 1.0, (0, 0, 2, 0): -1.0, (0, 0, 0, 2): -1.0}


def test_envelope_linear_radius_failure(run):
    cfg = {"n": 2, "envelope": {"kind": "linear", "params": {"delta": [1, 0], "r2": 1.05, "r3": 0.5, "eps": 0.1}}}
    code, _ = run(cfg, "envelope")
    assert code == EXIT_MATH


def test_envelope_rational_flagged(run):
    cfg = {"n": 3, "shell": {"r1": 0.5, "r2": 2.0, "r3": 0.5}, "envelope": {"kind": "rational"}}
    code, out = run(cfg, "envelope")
    assert code == EXIT_MATH
    assert "levi_flat" in load(out / "envelope.json")["failed_checks"]


def test_envelope_halfspaces(run):
    cfg = dict(SHELL, envelope={"kind": "halfspaces"})
    code, out = run(cfg, "envelope", "--sample", "200")
    assert code == EXIT_OK
    assert load(out / "envelope.json")["envelope"]["constraints"][0]["sign"] == 1


def test_certify_separation(run):
    code, out = run(SHELL, "certify", "--kind", "separation", "--point", "1.2,0;0.4,0")
    assert code == EXIT_OK
    assert abs(load(out / "certificate_separation.json")["margin"] - 0.41139503) < 1e-8


def test_certify_variety(run):
    code, out = run(SHELL, "certify", "--kind", "variety", "--point", "0,0;0,0")
    assert code == EXIT_OK
    assert load(out / "certificate_variety.json")["status"] == "VALID"


def test_certify_separation_at_hull_point_fails(run):
    code, out = run(SHELL, "certify", "--kind", "separation", "--point", "0.5,0;0,0")
    assert code == EXIT_MATH
    assert load(out / "certificate_separation.json")["valid"] is False


@pytest.mark.parametrize("kind, point", [("maxprinciple", "0,0;0,0"), ("odbar", "1.5,0;0.2,0"),
                                         ("hyperplane", "3,0;0,0")])
def test_certify_other_kinds(run, kind, point):
    code, out = run(SHELL, "certify", "--kind", kind, "--point", point)
    assert code == EXIT_OK
    assert (out / f"certificate_{kind}.json").exists()


def test_certify_bad_point_text(run):
    code, _ = run(SHELL, "certify", "--kind", "separation", "--point", "1,2,3")
    assert code == EXIT_INPUT


def test_parse_point():
    p = parse_point("1,2;3,4", 2)
    assert p.x.tolist() == [1, 2] and p.y.tolist() == [3, 4]
    with pytest.raises(ConfigError):
        parse_point("1;2", 2)


def test_verify_suite_shell(run):
    code, out = run(dict(SHELL, sample_count=5000), "verify-suite")
    assert code == EXIT_OK
    rec = load(out / "suite_summary.json")
    assert rec["passed"]
    assert set(rec["suites"]) >= {"convex_initial", "hull_in_fence", "envelope_contains_domain", "levi_flat",
                                  "pluriharmonicity", "block_identities", "certificate_soundness"}


def test_verify_suite_broken_initial_domain(run):
    cfg = {"n": 2, "X": {"kind": "ball", "center": [0, 0], "radius": 0.9}, "Y": Y05,
           "barrier": {"alpha": lit(((0, 0), 1.0))}}
    code, out = run(cfg, "verify-suite")
    assert code == EXIT_MATH
    ci = load(out / "suite_summary.json")["suites"]["convex_initial"]
    assert not ci["passed"] and abs(np.linalg.norm(ci["argmin"]["x"]) - 0.9) < 1e-9


def test_verify_suite_n3(run):
    cfg = {"n": 3, "seed": 1, "sample_count": 20000, "shell": {"r1": 1.0, "r2": 2.0, "r3": 0.5}}
    code, _ = run(cfg, "verify-suite")
    assert code == EXIT_OK


def test_verify_suite_skips_block_identities_for_mixed_f(run):
    cfg = {"n": 2, "X": BALL2, "Y": Y05, "barrier": {"alpha": lit(((2, 1), 0.05))}, "sample_count": 2000}
    code, out = run(cfg, "verify-suite")
    assert load(out / "suite_summary.json")["suites"]["block_identities"]["skipped"]


def test_out_dir_from_environment(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SHELL))
    monkeypatch.setenv("TUBENV_OUT_DIR", str(tmp_path / "env_out"))
    assert main(["check-barrier", "--config", str(cfg)]) == EXIT_OK
    assert (tmp_path / "env_out" / "barrier_verdict.json").exists()


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SHELL))
    res = subprocess.run([sys.executable, "-m", "tubenv", "check-barrier", "--config", str(cfg),
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == EXIT_OK, res.stderr


def test_argparse_error_is_input_error():
    assert main(["certify", "--config", "x.json"]) == EXIT_INPUT
