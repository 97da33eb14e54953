"""Regenerate src/cogdecoy/data/canonical_scenario.json.

Run from the repository root: ``python tools/build_canonical.py``.
"""

import json
from pathlib import Path

SUBNETS = {
    "red-team": "10.0.0",
    "IT": "10.1.0",
    "Finance": "10.2.0",
    "Sales": "10.3.0",
    "Developers": "10.4.0",
    "Dev-Servers": "10.5.0",
}

# (host_id, subnet, rank or None)
HOSTS = [
    ("attacker-kali", "red-team", None),
    ("it-gateway", "IT", 1),
    ("it-ubuntu-1", "IT", 2),
    ("it-fileserver", "IT", 3),
    ("site-proxy", "IT", None),
    ("it-backup", "IT", None),
    ("it-ops-ws", "IT", None),
    ("it-ubuntu-2", "IT", None),
    ("it-monitor", "IT", None),
    ("fin-ws-1", "Finance", 4),
    ("fin-db", "Finance", 5),
    ("fin-share", "Finance", None),
    ("fin-ws-2", "Finance", None),
    ("fin-ws-3", "Finance", None),
    ("fin-payroll", "Finance", None),
    ("fin-archive", "Finance", None),
    ("sales-crm", "Sales", 6),
    ("sales-ws-2", "Sales", 7),
    ("sales-ws-1", "Sales", None),
    ("sales-ws-3", "Sales", None),
    ("sales-web", "Sales", None),
    ("sales-ledger", "Sales", None),
    ("sales-files", "Sales", None),
    ("dev-ws-1", "Developers", 8),
    ("dev-git", "Developers", 9),
    ("dev-ws-2", "Developers", None),
    ("dev-ws-3", "Developers", None),
    ("dev-wiki", "Developers", None),
    ("dev-jump", "Developers", None),
    ("dev-test", "Developers", None),
    ("devsrv-ci", "Dev-Servers", 10),
    ("devsrv-build", "Dev-Servers", 11),
    ("devsrv-vault", "Dev-Servers", 12),
    ("devsrv-db", "Dev-Servers", None),
    ("devsrv-cache", "Dev-Servers", None),
    ("devsrv-logs", "Dev-Servers", None),
    ("devsrv-stage", "Dev-Servers", None),
    ("devsrv-mon", "Dev-Servers", None),
]

PATH = [h for h, _, r in HOSTS if r is not None or h == "attacker-kali"]
PATH.sort(key=lambda h: next(r or 0 for hid, _, r in HOSTS if hid == h))

OFF_PATH_EDGES = [
    ("attacker-kali", "site-proxy"),
    ("it-gateway", "site-proxy"),
    ("it-gateway", "it-backup"),
    ("it-gateway", "it-ops-ws"),
    ("it-ubuntu-1", "site-proxy"),
    ("it-ubuntu-1", "it-ubuntu-2"),
    ("it-ubuntu-2", "it-monitor"),
    ("it-fileserver", "it-monitor"),
    ("fin-ws-1", "fin-share"),
    ("fin-ws-1", "fin-ws-2"),
    ("fin-ws-2", "fin-ws-3"),
    ("fin-db", "fin-payroll"),
    ("fin-db", "fin-archive"),
    ("sales-crm", "sales-ws-1"),
    ("sales-crm", "sales-web"),
    ("sales-ws-2", "sales-ledger"),
    ("sales-ws-2", "sales-ws-3"),
    ("sales-ws-3", "sales-files"),
    ("dev-ws-1", "dev-ws-2"),
    ("dev-ws-1", "dev-wiki"),
    ("dev-git", "dev-jump"),
    ("dev-git", "dev-ws-3"),
    ("dev-ws-3", "dev-test"),
    ("devsrv-ci", "devsrv-stage"),
    ("devsrv-ci", "devsrv-logs"),
    ("devsrv-build", "devsrv-cache"),
    ("devsrv-build", "devsrv-db"),
    ("devsrv-vault", "devsrv-mon"),
]


def art(kind, name, privilege=True, tags=()):
    return {"kind": kind, "name": name, "grants_privilege": privilege,
            "salience_tags": list(tags)}


ARTIFACTS = {
    "it-ubuntu-1": [
        art("account", "jdoe"),
        *(art("account", n, False, ["trigger:B.2.1.1"])
          for n in ("backup-adm", "ops-adm", "web-adm", "db-adm")),
        art("alias", "sudo", False, ["trigger:C.7.1.1"]),
    ],
    "site-proxy": [
        art("proxy_note", "notes.txt", False, ["trigger:L.12.1"]),
        art("service", "solr"),
    ],
    "it-backup": [art("service", "backup-vault", False, ["trigger:S.9.4"])],
    "fin-share": [
        art("file", "admin-passwords.xlsx", False, ["trigger:A.3.1.1", "admin"]),
        art("file", "root-ca-master.key", False, ["trigger:A.3.1.1", "root"]),
        art("file", "domain-admin-creds.txt", False, ["trigger:A.3.1.1", "admin"]),
        art("file", "master-keyring.kdbx", False, ["trigger:A.3.1.1", "master"]),
        art("file", "quarterly-budget.xlsx"),
    ],
    "it-ops-ws": [art("file", "ops-handbook.pdf")],
    "fin-db": [art("file", "ledger-2024.csv")],
    "sales-crm": [art("file", "customers.csv")],
    "dev-git": [art("file", "deploy-keys.tar")],
    "devsrv-vault": [art("file", "protected-data.tar.gz")],
}

TRIGGERS = [
    {
        "trigger_id": "B.2.1.1",
        "bias_targets": ["BaseRateNeglect"],
        "host_id": "it-ubuntu-1",
        "class_code": 2,
        "biased_signatures": ["su *-adm*", "ssh *-adm*"],
        "rational_signatures": ["sudo -l", "id", "groups"],
        "interaction_time_cost": 3.0,
    },
    {
        "trigger_id": "C.7.1.1",
        "bias_targets": ["Confirmation", "SunkCost"],
        "host_id": "it-ubuntu-1",
        "class_code": 7,
        "biased_signatures": ["sudo su*"],
        "rational_signatures": ["type sudo", "unalias sudo"],
        "interaction_time_cost": 4.0,
    },
    {
        "trigger_id": "L.12.1",
        "bias_targets": ["LossAversion"],
        "host_id": "site-proxy",
        "class_code": 12,
        "biased_signatures": ["ssh *protected-data*", "su *protected-data*"],
        "rational_signatures": ["*jndi*"],
        "interaction_time_cost": 6.0,
    },
    {
        "trigger_id": "S.9.4",
        "bias_targets": ["SunkCost"],
        "host_id": "it-backup",
        "class_code": 9,
        "biased_signatures": ["hydra *"],
        "rational_signatures": ["nc -zv *"],
        "interaction_time_cost": 8.0,
    },
    {
        "trigger_id": "A.3.1.1",
        "bias_targets": ["Availability"],
        "host_id": "fin-share",
        "class_code": 3,
        "biased_signatures": ["scp *admin-passwords*", "scp *root-ca-master*",
                              "scp *domain-admin-creds*", "scp *master-keyring*"],
        "rational_signatures": ["file *"],
        "interaction_time_cost": 3.0,
    },
]


def build():
    counters = {}
    hosts = []
    for hid, subnet, rank in HOSTS:
        counters[subnet] = counters.get(subnet, 9) + 1
        hosts.append({
            "host_id": hid,
            "display_name": hid,
            "ip": f"{SUBNETS[subnet]}.{counters[subnet]}",
            "subnet": subnet,
            "path_rank": rank,
            "artifacts": ARTIFACTS.get(hid, []),
            "alert_sensitivity": 1.0,
        })
    edges = [[PATH[i - 1], PATH[i]] for i in range(1, len(PATH))]
    edges += [list(e) for e in OFF_PATH_EDGES]
    return {
        "hosts": hosts,
        "edges": edges,
        "attack_path": PATH,
        "triggers": TRIGGERS,
        "entry_host": PATH[0],
        "seed": 20250301,
    }


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src/cogdecoy/data/canonical_scenario.json"
    out.write_text(json.dumps(build(), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")
