"""Alternating bound driver: configuration, the bounds ledger with its
monotonicity and duality guards, checkpoint round trips, resume, and
report artifacts."""

import json
import math
import os

import pytest

from essmin.driver import (
    BoundsLedger,
    ConfigInvalid,
    CorruptCheckpoint,
    HashMismatch,
    LedgerViolation,
    RunConfig,
    WEAK_DUALITY_SLACK,
    checkpoint,
    load_green,
    report,
    resume,
    run,
    spec_hash,
)
from essmin.greens import BUILTIN_NAMES, builtin


def _fast_weil(**kw):
    base = dict(
        green="weil",
        eps=0.05,
        budget_lp=3,
        budget_witness=48,
        tranche=16,
        tol=1e-3,
        inner_tol=1e-6,
        coarse_tol=1e-2,
        target_tol=1e-6,
    )
    base.update(kw)
    return RunConfig(**base)


def test_config_validation():
    RunConfig().validate()
    with pytest.raises(ConfigInvalid):
        RunConfig(eps=0.0).validate()
    with pytest.raises(ConfigInvalid):
        RunConfig(budget_lp=-1).validate()
    with pytest.raises(ConfigInvalid):
        RunConfig(rigor="exact").validate()
    with pytest.raises(ConfigInvalid):
        RunConfig(tranche=0).validate()
    with pytest.raises(ConfigInvalid):
        RunConfig(pool=()).validate()


def test_config_dict_round_trip():
    c = _fast_weil(seed=7)
    back = RunConfig.from_dict(c.to_dict())
    assert back.to_dict() == c.to_dict()


def test_load_green_variants(tmp_path):
    for name in BUILTIN_NAMES:
        assert load_green(name).name == name
    spec = builtin("zhang_zagier").spec_json()
    # builtin alias through JSON
    assert load_green(spec).name == "zhang_zagier"
    # a composite spec through an on-disk file
    text = json.dumps(
        {
            "terms": [
                {"w": "1", "kind": "log_plus", "num": ["0", "1"], "den": ["1"]}
            ],
            "offset": 0.0,
        }
    )
    p = tmp_path / "g.json"
    p.write_text(text)
    g = load_green(str(p))
    assert abs(g.eval(__import__("numpy").array([2.0 + 0j]))[0] - math.log(2)) < 1e-12
    with pytest.raises(ConfigInvalid):
        load_green("not_a_green_or_path")


def test_spec_hash_distinguishes_greens():
    hashes = {spec_hash(builtin(n)) for n in BUILTIN_NAMES}
    assert len(hashes) == len(BUILTIN_NAMES)
    assert spec_hash(builtin("weil")) == spec_hash(builtin("weil"))


def _ledger(rigor="certified"):
    g = builtin("weil")
    return BoundsLedger("weil", g.spec_json(), _fast_weil(), 0, rigor)


def test_ledger_guards_weak_duality():
    led = _ledger()
    led.record(1, 0.1, lower=-0.01, upper=0.02, heur=None)
    with pytest.raises(LedgerViolation):
        led.record(2, 0.2, lower=0.05, upper=0.02 - WEAK_DUALITY_SLACK * 2, heur=None)


def test_ledger_guards_monotonicity():
    led = _ledger()
    led.record(1, 0.1, lower=-0.02, upper=0.5, heur=None)
    led.record(2, 0.2, lower=-0.01, upper=0.4, heur=None)
    with pytest.raises(LedgerViolation):
        led.record(3, 0.3, lower=-0.015, upper=0.4, heur=None)  # lower regressed
    led2 = _ledger()
    led2.record(1, 0.1, lower=-0.02, upper=0.4, heur=None)
    with pytest.raises(LedgerViolation):
        led2.record(2, 0.2, lower=-0.02, upper=0.41, heur=None)  # upper regressed


def test_ledger_gap_uses_certified_lower_first():
    led = _ledger()
    led.record(1, 0.1, lower=-0.25, upper=0.5, heur=-0.1)
    assert led.gap == pytest.approx(0.75)
    assert led.lower == -0.25
    assert led.upper == 0.5


def test_run_weil_halts_on_eps(tmp_path):
    led = run(_fast_weil(out_dir=str(tmp_path)))
    assert led.halt == "eps"
    assert led.rigor == "certified"
    assert led.gap <= 0.05
    # certified lower sits at zero up to solver tolerance (the set where
    # the integrand vanishes has positive capacity, so ess = 0 exactly)
    assert led.lower is not None and abs(led.lower) <= 1e-3
    assert led.upper is not None and led.upper <= 0.05
    assert led.lower <= led.upper + WEAK_DUALITY_SLACK
    assert led.best_certificate is not None
    assert led.best_witness is not None
    for fn in ("checkpoint.json", "report.json", "history.csv", "convergence.svg"):
        assert (tmp_path / fn).exists(), fn


def test_run_budget_halt():
    led = run(_fast_weil(eps=1e-12, budget_lp=1, budget_witness=8, tranche=8))
    assert led.halt == "budget"


def test_checkpoint_resave_is_byte_identical(tmp_path):
    led = run(_fast_weil())
    p1, p2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    checkpoint(led, p1)
    checkpoint(resume(p1), p2)
    with open(p1, "rb") as fa, open(p2, "rb") as fb:
        assert fa.read() == fb.read()


def test_resume_rejects_tampering(tmp_path):
    led = run(_fast_weil())
    path = str(tmp_path / "c.json")
    checkpoint(led, path)
    doc = json.loads(open(path).read())
    doc["green"]["spec"] = builtin("hultberg").spec_json()
    open(path, "w").write(json.dumps(doc))
    with pytest.raises(HashMismatch):
        run(_fast_weil(), resume_from=path)
    open(path, "w").write("{not json")
    with pytest.raises(CorruptCheckpoint):
        resume(path)
    with pytest.raises(CorruptCheckpoint):
        resume(str(tmp_path / "missing.json"))


def test_resume_continues_identically(tmp_path):
    # run A two full iterations, then resume with a bigger budget; the
    # third iteration must match what an uninterrupted run produces
    cfg_a = _fast_weil(eps=1e-12, budget_lp=2, budget_witness=64, tranche=32)
    led_a = run(cfg_a)
    assert led_a.halt == "budget" and len(led_a.rows) == 2
    path = str(tmp_path / "resume.json")
    checkpoint(led_a, path)

    cfg_b = _fast_weil(eps=1e-12, budget_lp=3, budget_witness=96, tranche=32)
    led_b = run(cfg_b, resume_from=path)
    led_f = run(cfg_b)
    assert len(led_b.rows) == len(led_f.rows) == 3
    # identical history except wall-clock
    for rb, rf in zip(led_b.rows, led_f.rows):
        assert rb[0] == rf[0]
        assert rb[2:] == rf[2:]
    assert led_b.pool == led_f.pool


def test_report_files_and_csv_shape(tmp_path):
    led = run(_fast_weil())
    report(led, str(tmp_path))
    doc = json.loads((tmp_path / "report.json").read_text())
    for key in ("green", "spec_hash", "rigor", "halt", "iterations",
                "lower", "upper", "gap", "certificate", "witness"):
        assert key in doc, key
    assert doc["green"] == "weil"
    assert doc["halt"] == "eps"
    lines = (tmp_path / "history.csv").read_text().strip().splitlines()
    assert lines[0] == "iter,wall_s,lower,upper,gap"
    assert len(lines) == 1 + len(led.rows)
    svg = (tmp_path / "convergence.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg


def test_faltings_run_downgrades_to_heuristic_and_scales(tmp_path):
    cfg = RunConfig(
        green="faltings",
        eps=0.2,
        budget_lp=2,
        budget_witness=24,
        tranche=12,
        tol=1e-3,
        coarse_tol=1e-2,
        target_tol=1e-4,
        rigor="certified",
        out_dir=str(tmp_path),
    )
    led = run(cfg)
    # no enclosure for this green: certified lower bounds are impossible
    assert led.rigor == "heuristic"
    assert led.lower is None
    assert led.heuristic_lower is not None
    assert any("heuristic" in note[2] for note in led.notes)
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["lower"] is None
    assert doc["heuristic_lower"] == pytest.approx(led.heuristic_lower)
    scaled = doc["ess_Ht_F"]
    assert scaled["rigor"] == "heuristic"
    assert scaled["lower"] == pytest.approx(led.heuristic_lower / 12.0)
    assert scaled["upper"] == pytest.approx(led.upper / 12.0)
    # the twelfth-scaled Faltings bracket lands where it should
    assert -0.7487 < scaled["lower"] <= scaled["upper"] < -0.7485
