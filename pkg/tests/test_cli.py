from __future__ import annotations

import json
from pathlib import Path

import pytest

from tpacas.cli import main

EXAMPLE = Path(__file__).resolve().parent.parent / "instances" / "three_agents.json"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compare_example_seed(capsys, tmp_path):
    code, out, _ = run(capsys, "compare", 7, 6, "--toy-group", "--seed", "paper", "--verify", "--out", tmp_path)
    assert code == 0
    assert out.startswith("Greater  X=300 Y=299")
    assert "C=899 H1=90 H2=431" in out and "verified" in out
    transcript = next(tmp_path.glob("*.transcript.jsonl")).read_text().splitlines()
    assert json.loads(transcript[-1])["zkp"]["C"] == "899"
    report = json.loads(next(tmp_path.glob("*.report.json")).read_text())
    assert report["outcome"]["result"] == "greater" and report["counts"]["messages"] == 28


def test_compare_equal_and_example_seed_needs_toy_group(capsys, tmp_path):
    code, out, _ = run(capsys, "compare", 5, 5, "--toy-group", "--out", tmp_path)
    assert code == 0 and out.startswith("Equal")
    code, _, err = run(capsys, "compare", 5, 5, "--seed", "paper", "--bits", 64, "--out", tmp_path)
    assert code == 2 and "--toy-group" in err


def test_compare_out_of_range(capsys, tmp_path):
    code, _, err = run(capsys, "compare", 12, 0, "--toy-group", "--out", tmp_path)
    assert code == 2 and err.startswith("error:")


def test_compare_large_group_same_message_count(capsys, tmp_path):
    code, out, _ = run(capsys, "compare", 2**63, 2**62, "--bits", 1024, "--out", tmp_path)
    assert code == 0
    assert out.startswith("Greater  messages=12")
    assert "X=" not in out


def test_compare_tamper_file(capsys, tmp_path):
    hooks = tmp_path / "hooks.txt"
    hooks.write_text("# shift the blinded sum\nstep=v class=sum field=X add=1\n")
    code, out, _ = run(capsys, "compare", 7, 6, "--toy-group", "--verify", "--tamper", hooks, "--out", tmp_path)
    assert code == 1 and "REJECTED" in out


def test_auction_example(capsys, tmp_path):
    code, out, _ = run(capsys, "auction", EXAMPLE, "--oracle-check", "--out", tmp_path)
    assert code == 0
    assert "winners: A, C" in out
    assert "A pays 8.00" in out and "C pays 0.00" in out
    assert "verification: pass" in out and "oracle check: pass" in out


def test_auction_is_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(capsys, "auction", EXAMPLE, "--seed", 3, "--bits", 64, "--out", a)
    run(capsys, "auction", EXAMPLE, "--seed", 3, "--bits", 64, "--out", b)
    sbb_a, sbb_b = next(a.glob("*.sbb.jsonl")), next(b.glob("*.sbb.jsonl"))
    assert sbb_a.name == sbb_b.name
    assert sbb_a.read_bytes() == sbb_b.read_bytes()


def test_auction_bad_instance(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n "items": 4,\n "agents": [\n  {"name": "A", "valuation": 1, "bundle": [1, 9]}\n ]\n}')
    code, _, err = run(capsys, "auction", bad, "--out", tmp_path)
    assert code == 2 and "line 3" in err
    empty = tmp_path / "empty.json"
    empty.write_text('{"items": 3, "agents": []}')
    code, _, err = run(capsys, "auction", empty, "--bits", 64, "--out", tmp_path)
    assert code == 2 and err.startswith("error:")
    code, _, _ = run(capsys, "auction", tmp_path / "missing.json", "--out", tmp_path)
    assert code == 2


def test_auction_reports_rejections(capsys, tmp_path):
    inst = tmp_path / "inst.json"
    agents = [
        {"name": "A", "valuation": 4, "bundle": [1]},
        {"name": "B", "valuation": 6, "bundle": [1, 2]},
        {"name": "C", "valuation": 5, "bundle": [2, 3]},
    ]
    inst.write_text(json.dumps({"items": 3, "agents": agents}))
    code, out, _ = run(capsys, "auction", inst, "--bits", 64, "--oracle-check", "--out", tmp_path)
    assert code == 0 and out.startswith("rejected A:")


def test_verify_pass_then_edit(capsys, tmp_path):
    run(capsys, "auction", EXAMPLE, "--bits", 64, "--out", tmp_path)
    sbb, keys = next(tmp_path.glob("*.sbb.jsonl")), next(tmp_path.glob("*.keys.json"))
    code, out, _ = run(capsys, "verify", sbb, keys)
    lines = sbb.read_text().splitlines()
    assert code == 0 and out.strip() == f"pass: {len(lines) - 1} records verified"
    # change one digit in the first comparison record
    pos = next(k for k, line in enumerate(lines) if '"kind":"comparison-proof"' in line)
    rec = json.loads(lines[pos])
    rec["body"]["X"] = str(int(rec["body"]["X"]) + 1)
    lines[pos] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
    sbb.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "verify", sbb, keys)
    assert code == 1 and out.startswith(f"FAIL at record {pos - 1}:")


def test_verify_unreadable_input(capsys, tmp_path):
    code, _, _ = run(capsys, "verify", tmp_path / "none.jsonl", tmp_path / "none.json")
    assert code == 2


@pytest.mark.parametrize(
    "s, m, first",
    [(2, 15, "P = 1/24576"), (1, 1, "P = 1"), (2, 3, "P = 1/6"), (3, 3, "P = 1/7")],
)
def test_analyze(capsys, s, m, first):
    code, out, _ = run(capsys, "analyze", s, m)
    assert code == 0 and out.splitlines()[0] == first


def test_analyze_rejects_oversized_bundle(capsys):
    code, _, err = run(capsys, "analyze", 3, 2)
    assert code == 2 and err.startswith("error:")
