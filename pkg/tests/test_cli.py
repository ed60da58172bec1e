import csv
import json
import math
from pathlib import Path

import pytest

from pimsner_lab.cli import SUBCOMMANDS, run
from pimsner_lab.io import SCHEMA_VERSION

TASKS = Path(__file__).resolve().parent.parent / "scripts" / "tasks"


def write_task(tmp_path, name, doc):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(doc))
    return str(p)


def report(out, stem, task):
    return json.loads((Path(out) / f"{stem}.{task}.json").read_text())


def test_check_tower_fixture(tmp_path):
    assert run(["check-tower", str(TASKS / "fixture_c6.json"), "--out", str(tmp_path)]) == 0
    r = report(tmp_path, "fixture_c6", "check_tower")
    assert set(r["defects"]) >= {"orth", "unit", "shift", "commute"}
    assert all(r["defects"][k] <= 1e-12 for k in ("orth", "unit", "shift", "commute"))
    assert r["anchor"]


def test_verify_factorization_p33(tmp_path):
    assert run(["verify-factorization", str(TASKS / "task_p33.json"), "--out", str(tmp_path)]) == 0
    r = report(tmp_path, "task_p33", "verify_factorization")
    assert r["measured_max"] <= 0.625
    assert r["analytic_bound"] == pytest.approx(0.625)
    rows = list(csv.DictReader((tmp_path / "task_p33.verify_factorization.csv").open()))
    assert rows and list(rows[0]) == ["element", "p", "q", "measured", "bound"]


def test_bounds_graph(tmp_path):
    assert run(["bounds", str(TASKS / "graph.json"), "--out", str(tmp_path)]) == 0
    r = report(tmp_path, "graph", "bounds")
    facts = {f["id"]: f for f in r["facts"]}
    assert facts["T.dim_nuc"]["value"] == 1 and facts["T.dim_nuc"]["relation"] == "<="
    assert facts["T.dim_nuc"]["anchor"]
    assert "T.dim_nuc" in r["explanations"]


def test_sweep_rows(tmp_path):
    assert run(["sweep", str(TASKS / "sweep_cyclic.json"), "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "sweep_cyclic.sweep.csv").open()))
    assert [int(r["p"]) for r in rows] == [5, 9, 17, 33]
    measured = [float(r["measured_error"]) for r in rows]
    assert all(b <= a + 1e-6 for a, b in zip(measured, measured[1:]))
    for r in rows:
        p = int(r["p"])
        assert float(r["analytic_bound"]) == pytest.approx(2 * math.sqrt(2 / (p - 1)) + 4 / (p - 1), abs=1e-12)


@pytest.mark.parametrize("p", [[], [5, 8]])
def test_sweep_bad_p(tmp_path, p):
    path = write_task(tmp_path, "bad", {"version": SCHEMA_VERSION, "task": "sweep", "p": p})
    assert run(["sweep", path, "--out", str(tmp_path)]) == 2


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"version": "1",\n "task": }')
    assert run(["bounds", str(p), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_unknown_field(tmp_path):
    doc = json.loads((TASKS / "graph.json").read_text())
    doc["surprise"] = 1
    assert run(["bounds", write_task(tmp_path, "g", doc), "--out", str(tmp_path)]) == 2


def test_wrong_subcommand_for_task(tmp_path):
    assert run(["sweep", str(TASKS / "graph.json"), "--out", str(tmp_path)]) == 2
    assert run(["no-such-command", str(TASKS / "graph.json")]) == 2


def test_certified_failure_exits_one(tmp_path):
    doc = json.loads((TASKS / "task_p33.json").read_text())
    doc["epsilon"] = 0.01
    assert run(["verify-factorization", write_task(tmp_path, "tight", doc), "--out", str(tmp_path)]) == 1
    assert report(tmp_path, "tight", "verify_factorization")["passed"] is False


def test_infeasible_synthesis(tmp_path):
    doc = {"version": SCHEMA_VERSION, "task": "synthesize_tower", "n": 10, "p": 3}
    assert run(["synthesize-tower", write_task(tmp_path, "s", doc), "--out", str(tmp_path)]) == 2


def test_quasicentral_task(tmp_path):
    assert run(["check-qc-unit", str(TASKS / "qc_twisted.json"), "--out", str(tmp_path)]) == 0
    r = report(tmp_path, "qc_twisted", "quasicentral_check")
    by_n = {x["n"]: x["defect"] for x in r["reports"]}
    assert by_n[2] <= 1e-10 and by_n[1] > 0 and by_n[0] > 0


@pytest.mark.parametrize("sub", sorted(SUBCOMMANDS))
def test_reports_are_byte_identical(tmp_path, sub):
    task = {"check-tower": "fixture_c6", "synthesize-tower": "synth_d1", "verify-factorization": "task_p33",
            "sweep": "sweep_cyclic", "check-qc-unit": "qc_twisted", "bounds": "graph", "relations": "relations"}[sub]
    outs = []
    for i in range(2):
        out = tmp_path / str(i)
        code = run([sub, str(TASKS / f"{task}.json"), "--out", str(out), "--seed", "3"])
        assert code == 0
        outs.append(out)
    name = f"{task}.{SUBCOMMANDS[sub]}"
    for suffix in (".json", ".csv"):
        a, b = outs[0] / (name + suffix), outs[1] / (name + suffix)
        if a.exists():
            assert a.read_bytes() == b.read_bytes()
    assert "anchor" in json.loads((outs[0] / f"{name}.json").read_text())
    assert (outs[0] / f"{name}.meta.json").exists()
