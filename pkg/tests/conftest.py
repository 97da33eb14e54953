import sys

import pytest

from cogdecoy.range_model import load_canonical_scenario, scenario_from_dict


def host(host_id, ip, rank=None, artifacts=(), subnet="IT", sensitivity=1.0):
    return {"host_id": host_id, "display_name": host_id, "ip": ip, "subnet": subnet,
            "path_rank": rank, "artifacts": list(artifacts), "alert_sensitivity": sensitivity}


def artifact(kind, name, trigger=None, grants=False):
    tags = [f"trigger:{trigger}"] if trigger else []
    return {"kind": kind, "name": name, "grants_privilege": grants, "salience_tags": tags}


def two_host_doc():
    return {
        "hosts": [host("kali", "10.0.0.1"), host("web", "10.0.0.5", rank=1)],
        "edges": [["kali", "web"]],
        "attack_path": ["kali", "web"],
        "triggers": [],
        "entry_host": "kali",
        "seed": 0,
    }


def file_bait_doc(name="admin-passwords.xlsx"):
    """Entry host, one foothold carrying a decoy file, one host beyond."""
    doc = {
        "hosts": [host("kali", "10.0.0.1"),
                  host("ws", "10.0.0.5", rank=1, artifacts=[artifact("file", name, "A.3.1.1")]),
                  host("db", "10.0.0.6", rank=2)],
        "edges": [["kali", "ws"], ["ws", "db"]],
        "attack_path": ["kali", "ws", "db"],
        "triggers": [{"trigger_id": "A.3.1.1", "bias_targets": ["Availability"], "host_id": "ws",
                      "class_code": 3, "biased_signatures": ["scp *" + name + "*"],
                      "rational_signatures": ["file *"], "interaction_time_cost": 3.0}],
        "entry_host": "kali",
        "seed": 0,
    }
    return doc


@pytest.fixture(scope="session")
def canonical():
    return load_canonical_scenario()


@pytest.fixture
def two_host():
    return scenario_from_dict(two_host_doc())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
