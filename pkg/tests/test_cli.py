import csv
import io
import json

import pytest

from cogdecoy.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main
from cogdecoy.range_model import BIASES

from test_harness import SCENARIO


def run(*argv):
    out = io.StringIO()
    return main(list(map(str, argv)), out), out.getvalue()


@pytest.fixture(scope="module")
def batch(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = {"scenario_path": SCENARIO, "n_sessions_per_condition": 5, "seed": 0, "output_dir": "out",
           "bias_cohort": [{"profile": b.value, "count": 1} for b in BIASES]}
    (root / "cfg.json").write_text(json.dumps(cfg))
    code, text = run("run", root / "cfg.json")
    assert code == EXIT_OK, text
    return root, json.loads(text)


def test_run(batch):
    root, doc = batch
    assert doc["sessions_ok"] == 10 and doc["sessions_failed"] == 0
    assert (root / "out" / "report.json").exists()


def test_analyze(batch):
    root, _ = batch
    code, text = run("analyze", root / "out/sessions/trigger-0000/events.jsonl", "--scenario", SCENARIO)
    assert code == EXIT_OK
    doc = json.loads(text)
    assert 1 <= doc["progress_rank"] <= 12
    assert set(doc["trigger_times"]) == {"B.2.1.1", "C.7.1.1", "L.12.1", "S.9.4", "A.3.1.1"}


def test_sense(batch):
    root, _ = batch
    code, text = run("sense", root / "out/sessions/trigger-0001/events.jsonl", "--scenario", SCENARIO)
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(text)))
    assert len(rows) >= 2
    assert text == (root / "out/sessions/trigger-0001/beliefs.csv").read_text()


def test_evaluate(batch):
    root, _ = batch
    code, text = run("evaluate", root / "out/report.json")
    assert code == EXIT_OK
    doc = json.loads(text)
    assert 0.0 <= doc["accuracy"] <= 1.0
    assert sum(map(sum, doc["matrix"])) == 10


def test_recommend(batch, tmp_path):
    root, _ = batch
    scen = json.load(open(SCENARIO))
    cands = tmp_path / "cands.json"
    cands.write_text(json.dumps({"triggers": scen["triggers"][:2]}))
    code, text = run("recommend", root / "out/report.json", "--candidates", cands,
                     "--samples", 1, "--horizon", 10)
    assert code == EXIT_OK, text
    ids = [r["trigger_id"] for r in json.loads(text)["ranking"]]
    assert sorted(ids) == ["B.2.1.1", "C.7.1.1"]


def test_exit_codes(batch, tmp_path, monkeypatch):
    root, _ = batch
    assert run()[0] == EXIT_INVALID
    assert run("bogus")[0] == EXIT_INVALID
    assert run("evaluate", tmp_path / "missing.json")[0] == EXIT_INVALID
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert run("evaluate", bad)[0] == EXIT_INVALID
    assert run("recommend", root / "out/report.json", "--candidates", bad)[0] == EXIT_INVALID

    import cogdecoy.cli as cli

    def explode(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(cli, "evaluate_sensor_accuracy", explode)
    assert run("evaluate", root / "out/report.json")[0] == EXIT_RUNTIME
