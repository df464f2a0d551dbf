"""Command-line entry point: ``reviewchain cost | scenario | reviews``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from reviewchain import economics, ledger, retrieval, scenarios
from reviewchain.storage import StorageSet, get_codec


def _cmd_cost(args) -> int:
    presets = None
    if args.price:
        presets = {f"{p} Gwei": p for p in args.price}
    rows = economics.cost_table(args.bytes, args.reviews, args.rate, presets)
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(economics.format_cost_table(rows))
    return 0


def _cmd_scenario_run(args) -> int:
    config = scenarios.ScenarioConfig.load(args.config) if args.config else scenarios.ScenarioConfig()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    report = scenarios.run_scenario(config, args.out)
    print(report.to_json() if args.json else report.to_text(), end="" if not args.json else "\n")
    return 0


def _cmd_scenario_config(args) -> int:
    text = json.dumps(scenarios.ScenarioConfig().to_dict(), indent=2, sort_keys=True) + "\n"
    if args.path:
        Path(args.path).write_text(text)
    else:
        print(text, end="")
    return 0


def _cmd_table1(args) -> int:
    rows = scenarios.table1(args.reviews, args.seed, run=not args.ratings_only)
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
    else:
        print(scenarios.format_table1(rows))
    return 0


def _open_readers(chain_dir: Path, reader: str):
    config = json.loads((chain_dir / "scenario.json").read_text())
    storage = StorageSet.create(get_codec(config.get("workload", {}).get("codec", "identity")), chain_dir / "storage")
    dump = (chain_dir / "chain.jsonl").read_text()
    local = retrieval.sync_local(retrieval.LocalReplica(storage), dump)
    if reader == "local":
        return local, None
    blocks, schedule = ledger.load_chain(dump)
    # the remote node is someone else's state; here rebuilt from the same dump
    return retrieval.RemoteNode(ledger.replay(blocks, schedule), storage), local


def _cmd_reviews_list(args) -> int:
    reader, reference = _open_readers(Path(args.chain), args.reader)
    try:
        results = retrieval.list_reviews(reader, args.product, args.version, cross_check=reference if args.cross_check else None)
    except retrieval.UnknownProduct:
        print(f"unknown product: {args.product}", file=sys.stderr)
        return 2
    records = [
        {
            "product_id": r.product_id,
            "product_version": r.product_version,
            "rating": r.rating,
            "author": str(r.author),
            "block_height": r.block_height,
            "status": status,
            "text": r.text.decode("utf-8", "replace"),
        }
        for r, status in results
    ]
    if args.json:
        for rec in records:
            print(json.dumps(rec, sort_keys=True))
        return 0
    print(f"{'version':<10}{'rating':>6}  {'author':<14}{'block':>6}  {'status':<12}text")
    for rec in records:
        text = rec["text"] if len(rec["text"]) <= 40 else rec["text"][:37] + "..."
        print(
            f"{rec['product_version']:<10}{rec['rating']:>6}  {rec['author'][:12]:<14}"
            f"{rec['block_height']:>6}  {rec['status']:<12}{text}"
        )
    print(f"{len(records)} review(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reviewchain", description="Blockchain-backed app review simulator")
    sub = p.add_subparsers(dest="command", required=True)

    cost = sub.add_parser("cost", help="on-chain storage cost table")
    cost.add_argument("--bytes", type=int, default=economics.SAMPLE_REVIEW_BYTES)
    cost.add_argument("--reviews", type=int, default=economics.SAMPLE_REVIEW_COUNT)
    cost.add_argument("--rate", type=int, default=economics.ETH_USD, help="USD per ETH")
    cost.add_argument("--price", type=int, action="append", help="gas price in Gwei (repeatable)")
    cost.add_argument("--json", action="store_true")
    cost.set_defaults(func=_cmd_cost)

    sc = sub.add_parser("scenario", help="run configured scenarios")
    sc_sub = sc.add_subparsers(dest="scenario_command", required=True)
    run = sc_sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", help="JSON scenario config")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="directory for chain dump, storage and reports")
    run.add_argument("--json", action="store_true")
    run.set_defaults(func=_cmd_scenario_run)
    cfg = sc_sub.add_parser("config", help="write the default config")
    cfg.add_argument("path", nargs="?")
    cfg.set_defaults(func=_cmd_scenario_config)
    t1 = sc_sub.add_parser("table1", help="the three optimized configurations and their ratings")
    t1.add_argument("--reviews", type=int, default=100)
    t1.add_argument("--seed", type=int, default=0)
    t1.add_argument("--ratings-only", action="store_true", help="skip running the scenarios")
    t1.add_argument("--json", action="store_true")
    t1.set_defaults(func=_cmd_table1)

    rv = sub.add_parser("reviews", help="read reviews from a scenario output directory")
    rv_sub = rv.add_subparsers(dest="reviews_command", required=True)
    ls = rv_sub.add_parser("list")
    ls.add_argument("--product", required=True)
    ls.add_argument("--version")
    ls.add_argument("--reader", choices=("local", "remote"), default="local")
    ls.add_argument("--chain", required=True, help="output directory of `scenario run --out`")
    ls.add_argument("--cross-check", action="store_true", help="compare a remote reader against a local replica")
    ls.add_argument("--json", action="store_true", help="one JSON record per line")
    ls.set_defaults(func=_cmd_reviews_list)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ledger.CorruptDump, ledger.BlockInvalid, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
