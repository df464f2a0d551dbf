import json
import shutil
import subprocess

import pytest

from reviewchain.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cost(capsys):
    code, out, _ = run(capsys, "cost")
    assert code == 0
    assert "168,818,750" in out and "$747" in out and "$3,287" in out and "$0.247" in out and "$1.09" in out


def test_cost_json_custom_price(capsys):
    code, out, _ = run(capsys, "cost", "--bytes", "1000", "--reviews", "10", "--price", "10", "--json")
    rows = json.loads(out)
    assert code == 0 and rows[0]["gas"] == 625_000 and rows[0]["gas_price_gwei"] == 10


def test_table1_ratings_only(capsys):
    code, out, _ = run(capsys, "scenario", "table1", "--ratings-only", "--json")
    rows = json.loads(out)
    assert [tuple(r["rating"]) for r in rows] == [
        ("Good", "Medium", "Medium"),
        ("Poor", "Good", "Medium"),
        ("Good", "Poor", "Good"),
    ]


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    config = d / "config.json"
    assert main(["scenario", "config", str(config)]) == 0
    doc = json.loads(config.read_text())
    doc["storage"] = "centralized"
    doc["workload"]["review_count"] = 12
    config.write_text(json.dumps(doc))
    assert main(["scenario", "run", "--config", str(config), "--seed", "5", "--out", str(d / "out")]) == 0
    return d / "out"


def test_scenario_run_outputs(scenario_dir):
    report = json.loads((scenario_dir / "report.json").read_text())
    assert report["config"]["seed"] == 5
    assert report["config"]["storage"] == "centralized"
    assert (scenario_dir / "report.txt").read_text().startswith("scenario: direct / token / centralized")


@pytest.mark.parametrize("reader", ["local", "remote"])
def test_reviews_list(capsys, scenario_dir, reader):
    code, out, _ = run(capsys, "reviews", "list", "--product", "app-0", "--reader", reader, "--chain", str(scenario_dir), "--json")
    records = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and records
    assert {r["status"] for r in records} == {"verified"}
    assert all(r["product_id"] == "app-0" for r in records)
    code, text, _ = run(capsys, "reviews", "list", "--product", "app-0", "--version", "1.0", "--reader", reader, "--chain", str(scenario_dir))
    assert code == 0 and text.rstrip().endswith("review(s)")


def test_reviews_list_unknown_product(capsys, scenario_dir):
    code, _, err = run(capsys, "reviews", "list", "--product", "nope", "--chain", str(scenario_dir))
    assert code == 2 and "unknown product" in err


def test_reviews_list_detects_tampered_store(capsys, scenario_dir, tmp_path):
    copy = tmp_path / "copy"
    shutil.copytree(scenario_dir, copy)
    index = json.loads((copy / "storage" / "central" / "index.json").read_text())
    offset, length = index[sorted(index)[0]]
    log = bytearray((copy / "storage" / "central" / "store.log").read_bytes())
    log[offset] ^= 0x20
    (copy / "storage" / "central" / "store.log").write_bytes(bytes(log))
    statuses = set()
    for pid in ("app-0", "app-1", "app-2"):
        _, out, _ = run(capsys, "reviews", "list", "--product", pid, "--chain", str(copy), "--json")
        statuses |= {json.loads(line)["status"] for line in out.splitlines()}
    assert "tampered" in statuses


def test_corrupt_chain_reports_error(capsys, scenario_dir, tmp_path):
    copy = tmp_path / "copy"
    shutil.copytree(scenario_dir, copy)
    lines = (copy / "chain.jsonl").read_text().splitlines()
    (copy / "chain.jsonl").write_text("\n".join(lines[:-1]) + "\n")
    code, _, err = run(capsys, "reviews", "list", "--product", "app-0", "--chain", str(copy))
    assert code == 1 and "error" in err


def test_console_script_installed():
    exe = shutil.which("reviewchain")
    if exe is None:
        pytest.skip("console script not on PATH")
    out = subprocess.run([exe, "cost"], capture_output=True, text=True, check=True).stdout
    assert "$747" in out
