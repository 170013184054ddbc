"""Command-line entry points: compare, auction, verify, analyze."""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .auction import auction_group, default_d_max, run_auction, topology_leak_probability, verify_auction
from .errors import DomainError, InstanceError, ProtocolError, SetupError
from .group import GroupParams, generate_group, modp_1024, toy_group
from .oracle import icasm_solve, load_instance
from .ppc import example_keys, example_source, ppc_run
from .simnet import load_hooks


@dataclass
class RunReport:
    mode: str
    seed: object
    group: str
    outcome: Any
    counts: dict[str, int] = field(default_factory=dict)
    wall_time: float = 0.0
    files: dict[str, str] = field(default_factory=dict)
    ok: bool = True

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def parse_seed(text: str) -> int | str:
    try:
        return int(text)
    except ValueError:
        return text


def run_id(mode: str, *parts: object) -> str:
    digest = hashlib.sha256(json.dumps([mode, *map(str, parts)]).encode()).hexdigest()[:12]
    return f"{mode}-{digest}"


def _write(out: Path, name: str, lines: Sequence[str]) -> str:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text("".join(line + "\n" for line in lines))
    return str(path)


def comparison_group(args: argparse.Namespace) -> GroupParams:
    if args.toy_group:
        return toy_group()
    if args.bits == 1024:
        return modp_1024(args.d_max or 1 << 32)
    d_max = args.d_max or default_d_max(args.bits)
    return generate_group(args.bits, d_max, random.Random(f"group:{args.bits}:{args.seed}"))


def cmd_compare(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    seed = parse_seed(args.seed)
    params = comparison_group(args)
    if args.d_max and args.toy_group:
        params = GroupParams(params.p, params.q, params.g, args.d_max)
    hooks = load_hooks(args.tamper) if args.tamper else []
    if seed == "paper":
        if not args.toy_group:
            print("error: --seed paper replays the toy-group example; add --toy-group", file=sys.stderr)
            return 2
        rng, keys = example_source(), example_keys(params)
    else:
        rng, keys = random.Random(f"compare:{seed}"), None
    try:
        t = ppc_run(args.x, args.y, params, rng, keys=keys, hooks=hooks, with_proof=args.verify, seed=seed)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rid = run_id("compare", args.x, args.y, seed, params.to_record(), args.verify, args.tamper)
    files = {"transcript": _write(Path(args.out), f"{rid}.transcript.jsonl", t.export_lines())}
    ok = t.verify() if args.verify else True
    outcome: dict[str, Any] = {"result": t.outcome.value, "X": str(t.x_sum), "Y": str(t.y_sum)}
    if t.zkp is not None:
        outcome.update(C=str(t.zkp.c), H1=str(t.zkp.h1), H2=str(t.zkp.h2), zkp_verified=ok)
    report = RunReport(
        "compare", seed, params.summary(), outcome,
        {"messages": t.message_count, "comparisons": 1, "proofs": int(t.zkp is not None)},
        round(time.perf_counter() - start, 4), files, ok,
    )
    files["report"] = _write(Path(args.out), f"{rid}.report.json", [report.to_json()])
    small = params.p.bit_length() <= 64
    sums = f"  X={t.x_sum} Y={t.y_sum}" if small else ""
    print(f"{t.outcome.value.capitalize()}{sums}  messages={t.message_count}")
    if t.zkp is not None:
        values = f" C={t.zkp.c} H1={t.zkp.h1} H2={t.zkp.h2}" if small else ""
        print(f"proof{values}: {'verified' if ok else 'REJECTED'}")
    print(f"transcript: {files['transcript']}")
    return 0 if ok else 1


def cmd_auction(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    try:
        instance = load_instance(args.instance)
    except InstanceError as exc:
        print(f"error: {args.instance}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    seed = parse_seed(args.seed) if args.seed is not None else (instance.seed if instance.seed is not None else 0)
    bits = args.bits or instance.bits or 256
    precision = args.precision if args.precision is not None else instance.precision
    if bits == 1024:
        group = modp_1024(default_d_max(1024))
    else:
        group = auction_group(bits, seed)
    try:
        result = run_auction(instance, group=group, seed=seed, precision=precision, pool=args.pool)
    except (SetupError, ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, reason in result.rejected.items():
        print(f"rejected {name}: {reason}")
    rid = run_id("auction", Path(args.instance).read_text(), seed, bits, precision, args.pool)
    out = Path(args.out)
    files = {
        "sbb": _write(out, f"{rid}.sbb.jsonl", result.export_lines()),
        "keys": _write(out, f"{rid}.keys.json", [json.dumps(result.keys_record(), sort_keys=True)]),
    }
    verdict = verify_auction(result.export_lines(), result.keys_record())
    ok = bool(verdict)
    outcome: dict[str, Any] = {
        "winners": result.winners,
        "payments": {n: f"{float(p):.{result.outcome.precision}f}" for n, p in result.payments.items()},
        "rejected": sorted(result.rejected),
        "verified": ok,
    }
    if args.oracle_check:
        accepted = [b for b in instance.bids if b.name not in result.rejected]
        plain = type(instance)(instance.m, tuple(accepted))
        o = icasm_solve(plain, [result.tie_keys[b.name] for b in accepted], result.outcome.precision)
        winners, pay = o.by_name()
        match = winners == result.winners and pay == result.payments_scaled
        outcome["oracle_match"] = match
        ok = ok and match
    report = RunReport(
        "auction", seed, group.summary(), outcome, result.counts, round(time.perf_counter() - start, 4), files, ok
    )
    files["report"] = _write(out, f"{rid}.report.json", [report.to_json()])
    print("winners: " + ", ".join(result.winners))
    for name in result.winners:
        print(f"  {name} pays {outcome['payments'][name]}")
    c = result.counts
    print(f"comparisons: {c['value_comparisons']} value, {c['item_comparisons']} item; proofs: {c['proofs']}")
    print(f"verification: {'pass' if verdict else f'FAIL at record {verdict.index}: {verdict.reason}'}")
    if args.oracle_check:
        print(f"oracle check: {'pass' if outcome['oracle_match'] else 'FAIL'}")
    print(f"bulletin board: {files['sbb']}")
    return 0 if ok else 1


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        lines = Path(args.sbb).read_text().splitlines()
        keys = json.loads(Path(args.keys).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    verdict = verify_auction(lines, keys)
    if verdict:
        print(f"pass: {len(lines) - 1} records verified")
        return 0
    print(f"FAIL at record {verdict.index}: {verdict.reason}")
    return 1


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        prob = topology_leak_probability(args.s, args.m)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"P = {prob}")
    print(f"  = {float(prob):.6g}")
    print(f"  = {prob * 2**args.m} / 2^{args.m}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpacas", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="privately compare two integers")
    p.add_argument("x", type=int)
    p.add_argument("y", type=int)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--toy-group", action="store_true", help="p=1187, q=593, g=3, d_max=5")
    grp.add_argument("--bits", type=int, default=256, help="bit length of q (1024 uses a fixed group)")
    p.add_argument("--d-max", type=int, default=None)
    p.add_argument("--seed", default="0", help="integer, string, or 'paper' for the worked example")
    p.add_argument("--verify", action="store_true", help="run and check the comparison proof")
    p.add_argument("--tamper", default=None, help="file of tamper hooks to inject")
    p.add_argument("--out", default="runs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("auction", help="run a full auction on an instance file")
    p.add_argument("instance")
    p.add_argument("--seed", default=None)
    p.add_argument("--precision", type=int, default=None)
    p.add_argument("--bits", type=int, default=None)
    p.add_argument("--pool", type=int, default=None, help="notary pool size (default 2n)")
    p.add_argument("--oracle-check", action="store_true")
    p.add_argument("--out", default="runs")
    p.set_defaults(func=cmd_auction)

    p = sub.add_parser("verify", help="verify an exported bulletin board")
    p.add_argument("sbb")
    p.add_argument("keys")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="bundle-guessing probability for a winner of size s among m items")
    p.add_argument("s", type=int)
    p.add_argument("m", type=int)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
