"""Operator command line.

Exit codes: 0 success, 1 domain error, 2 usage error. With --json all
stdout output is machine-readable JSON; errors go to stderr either way.
A failed command leaves the data directory untouched.
"""

from __future__ import annotations

import argparse
import fcntl
import json
import os
import sys
from pathlib import Path

from . import fixedpoint
from .detmath import double_bits_hex
from .ledger import (
    ACTION_DEPLOY,
    GenesisConfig,
    GenesisError,
    LedgerError,
    Transaction,
    create_genesis,
    make_block,
    validate_transaction,
)
from .pfa import PfaError, PfaEvalError, evaluate, parse_pfa, value_from_json
from .qscript.parser import ParseError, parse_contract
from .sim import ConfigError, DivergenceDetected, load_sim_config, report_to_json, run_simulation
from .store import BlockLog, StoreError, load_chain
from .values import VDbl, VList, render

DATA_DIR_ENV = "LEDGERML_DATA_DIR"
GENESIS_FILE = "genesis.json"
BLOCKLOG_FILE = "chain.blocklog"
LOCK_FILE = ".lock"


class CliError(Exception):
    pass


def _data_dir(args) -> Path:
    if args.data_dir:
        return Path(args.data_dir)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    raise CliError(f"no data dir: pass --data-dir or set {DATA_DIR_ENV}")


class _Lock:
    """Advisory lock on the data dir for the duration of one command."""

    def __init__(self, data_dir: Path):
        self.path = data_dir / LOCK_FILE
        self.fd = None

    def __enter__(self):
        self.fd = open(self.path, "w")
        try:
            fcntl.flock(self.fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            raise CliError(f"data dir is locked by another process: {self.path.parent}")
        return self

    def __exit__(self, *exc):
        if self.fd:
            fcntl.flock(self.fd, fcntl.LOCK_UN)
            self.fd.close()


def _load(data_dir: Path):
    genesis_path = data_dir / GENESIS_FILE
    if not genesis_path.exists():
        raise CliError(f"{data_dir} is not initialized (missing {GENESIS_FILE})")
    config = GenesisConfig.from_json(genesis_path.read_text())
    genesis = create_genesis(config)
    state = load_chain(data_dir / BLOCKLOG_FILE, genesis)
    return state


def _commit_tx(data_dir: Path, state, tx: Transaction):
    verdict = validate_transaction(state, tx)
    if not verdict:
        raise CliError(f"transaction rejected: {verdict.reason}")
    block, new_state, receipts = make_block(
        state, [tx], proposer=0, tick=state.height + 1
    )
    log = BlockLog(data_dir / BLOCKLOG_FILE)
    log.append(block)
    return new_state, receipts[0]


def _emit(args, payload: dict, human: str):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def cmd_init(args) -> int:
    data_dir = _data_dir(args)
    genesis_text = Path(args.genesis).read_text()
    config = GenesisConfig.from_json(genesis_text)
    state = create_genesis(config)
    if data_dir.exists() and any(p.name != LOCK_FILE for p in data_dir.iterdir()):
        raise CliError(f"refusing to initialize non-empty directory {data_dir}")
    data_dir.mkdir(parents=True, exist_ok=True)
    with _Lock(data_dir):
        (data_dir / GENESIS_FILE).write_text(genesis_text)
        from .ledger import genesis_block

        log = BlockLog(data_dir / BLOCKLOG_FILE)
        log.append(genesis_block(state))
    _emit(
        args,
        {"height": 0, "stateRoot": state.head_hash.hex(), "accounts": len(state.accounts)},
        f"initialized {data_dir} with {len(state.accounts)} accounts",
    )
    return 0


def cmd_deploy(args) -> int:
    data_dir = _data_dir(args)
    source = Path(args.source).read_bytes()
    try:
        parse_contract(source.decode("utf-8"))
    except (UnicodeDecodeError, ParseError) as e:
        raise CliError(f"contract does not parse: {e}")
    with _Lock(data_dir):
        state = _load(data_dir)
        sender = state.accounts.get(args.sender)
        if sender is None:
            raise CliError(f"unknown sender account {args.sender}")
        tx = Transaction(
            sender=args.sender,
            receiver=0,
            action=ACTION_DEPLOY,
            coins=fixedpoint.parse_dec(args.coins),
            asset=None,
            data=source,
            seq=sender.seq,
        )
        _, receipt = _commit_tx(data_dir, state, tx)
    _emit(
        args,
        {"contractId": receipt.contract_id, "receipt": receipt.to_json()},
        f"deployed contract account {receipt.contract_id}",
    )
    return 0


def _parse_asset(text: str) -> tuple[str, int]:
    if ":" not in text:
        raise CliError("asset must look like ASSETID:AMOUNT")
    asset_id, amount = text.split(":", 1)
    return asset_id, fixedpoint.parse_dec(amount)


def cmd_send(args) -> int:
    data_dir = _data_dir(args)
    with _Lock(data_dir):
        state = _load(data_dir)
        sender = state.accounts.get(args.sender)
        if sender is None:
            raise CliError(f"unknown sender account {args.sender}")
        tx = Transaction(
            sender=args.sender,
            receiver=args.to,
            action=args.action,
            coins=fixedpoint.parse_dec(args.coins),
            asset=_parse_asset(args.asset) if args.asset else None,
            data=bytes.fromhex(args.data_hex) if args.data_hex else b"",
            seq=sender.seq if args.seq is None else args.seq,
        )
        _, receipt = _commit_tx(data_dir, state, tx)
    lines = [f"status: {'committed' if receipt.committed else 'aborted'}"]
    if not receipt.committed:
        lines.append(f"reason: {receipt.reason}")
    lines.append(f"steps: {receipt.steps}")
    for entry in receipt.logs:
        lines.append(f"log: {entry}")
    _emit(args, {"receipt": receipt.to_json()}, "\n".join(lines))
    return 0


def cmd_query(args) -> int:
    data_dir = _data_dir(args)
    with _Lock(data_dir):
        state = _load(data_dir)
    acct = state.accounts.get(args.account)
    if acct is None:
        raise CliError(f"no account {args.account}")
    storage_keys = sorted(acct.contract_storage, key=lambda k: k.encode("utf-8"))
    payload = {
        "id": acct.id,
        "coins": fixedpoint.format_dec(acct.coin_balance),
        "assets": {
            k: fixedpoint.format_dec(v)
            for k, v in sorted(acct.asset_balances.items(), key=lambda kv: kv[0].encode("utf-8"))
        },
        "seq": acct.seq,
        "contract": acct.contract_source is not None,
        "storageKeys": storage_keys,
    }
    lines = [
        f"account {acct.id}",
        f"coins: {payload['coins']}",
        f"seq: {acct.seq}",
        f"contract: {'yes' if payload['contract'] else 'no'}",
    ]
    for k, v in payload["assets"].items():
        lines.append(f"asset {k}: {v}")
    for k in storage_keys:
        lines.append(f"storage key: {k}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_sim(args) -> int:
    config = load_sim_config(args.config)
    try:
        report = run_simulation(config)
    except DivergenceDetected as e:
        if args.out and e.report is not None:
            Path(args.out).write_text(report_to_json(e.report))
        raise CliError(f"divergence: {e.detail}")
    text = report_to_json(report)
    if args.out:
        Path(args.out).write_text(text)
    _emit(
        args,
        {"converged": True, "blocks": report["config"]["blocks"], "out": args.out},
        f"converged: {config.node_count} nodes, {config.blocks} blocks"
        + (f", report written to {args.out}" if args.out else ""),
    )
    return 0


def cmd_score_offline(args) -> int:
    text = Path(args.model).read_text()
    try:
        doc = parse_pfa(text)
    except PfaError as e:
        raise CliError(f"model does not parse: {e}")
    try:
        fields = [float(x) for x in args.input.split(",")]
    except ValueError:
        raise CliError(f"bad input row {args.input!r}")
    if doc.input.kind == "double":
        if len(fields) != 1:
            raise CliError("model takes a single double")
        input_value = VDbl(fields[0])
    else:
        input_value = VList(tuple(VDbl(x) for x in fields))
    try:
        result = evaluate(doc, input_value)
    except PfaEvalError as e:
        raise CliError(f"scoring failed: {e}")
    prediction = result.get("prediction") if hasattr(result, "get") else result
    if not isinstance(prediction, VDbl):
        raise CliError("model output carries no scalar prediction")
    payload = {"prediction": render(prediction)}
    human = f"prediction: {render(prediction)}"
    if args.hex:
        payload["predictionHex"] = double_bits_hex(prediction.v)
        human += f"\nprediction hex: {payload['predictionHex']}"
    _emit(args, payload, human)
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="ledgerml")
    top.add_argument("--json", action="store_true", help="machine-readable stdout")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="initialize a data dir from a genesis file")
    p.add_argument("--genesis", required=True)
    p.add_argument("--data-dir")
    p.set_defaults(fn=cmd_init)

    p = sub.add_parser("deploy", help="deploy contract source in a new block")
    p.add_argument("--source", required=True)
    p.add_argument("--sender", type=int, required=True)
    p.add_argument("--coins", default="0")
    p.add_argument("--data-dir")
    p.set_defaults(fn=cmd_deploy)

    p = sub.add_parser("send", help="submit one transaction in a new block")
    p.add_argument("--to", type=int, required=True)
    p.add_argument("--action", type=int, default=0)
    p.add_argument("--coins", default="0")
    p.add_argument("--asset")
    p.add_argument("--data-hex")
    p.add_argument("--sender", type=int, required=True)
    p.add_argument("--seq", type=int)
    p.add_argument("--data-dir")
    p.set_defaults(fn=cmd_send)

    p = sub.add_parser("query", help="inspect an account")
    p.add_argument("--account", type=int, required=True)
    p.add_argument("--data-dir")
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("sim", help="run a multi-node simulation config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sim)

    p = sub.add_parser("score-offline", help="score a model document without a chain")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="comma-separated feature row")
    p.add_argument("--hex", action="store_true", help="also print the prediction bit pattern")
    p.set_defaults(fn=cmd_score_offline)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (
        CliError,
        GenesisError,
        LedgerError,
        StoreError,
        ConfigError,
        ParseError,
        PfaError,
        fixedpoint.FixedPointError,
        FileNotFoundError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
