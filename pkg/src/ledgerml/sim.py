"""Deterministic multi-node simulation: round-robin block production with
immediate finality over a simulated message-passing network.

Events are processed from a totally ordered queue: (tick, kind rank,
from, to, insertion index). No two events ever compare equal, so a given
config and seed replays identically, byte for byte, including the report.

Every node fully re-executes every block (contracts and model scoring
included). Under honest round-robin production a block rejection can only
mean replicas disagree about execution, so any rejection during a run is
surfaced as DivergenceDetected.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import fixedpoint
from .ledger import (
    Block,
    ChainState,
    GenesisConfig,
    LedgerError,
    Transaction,
    apply_block_with_receipts,
    apply_transaction,
    create_genesis,
    compute_state_root,
    genesis_block,
    hash_block,
    make_block,
    validate_transaction,
)
from .rng import SplitMix64

MAX_NODES = 16
MEMPOOL_RETRY_HEIGHTS = 2
PROPOSAL_DELAY_TICKS = 1

KIND_SUBMIT = 0
KIND_DELIVER = 1
KIND_PROPOSE = 2


class ConfigError(Exception):
    pass


class DivergenceDetected(Exception):
    def __init__(self, detail: str, report: dict | None = None):
        super().__init__(detail)
        self.detail = detail
        self.report = report


@dataclass(frozen=True)
class TxSubmission:
    tick: int
    node: int
    tx: Transaction


@dataclass(frozen=True)
class SimConfig:
    node_count: int
    blocks: int
    seed: int
    latency: tuple[int, int]
    genesis: GenesisConfig
    tx_script: tuple  # TxSubmission, ordered
    fault: tuple[int, int] | None = None  # (node, height) root tamper

    def validate(self) -> None:
        if not 1 <= self.node_count <= MAX_NODES:
            raise ConfigError(f"nodeCount must be 1..{MAX_NODES}")
        if self.blocks < 1:
            raise ConfigError("blocks must be >= 1")
        lo, hi = self.latency
        if lo < 0 or hi < lo:
            raise ConfigError("latencyTicks must satisfy 0 <= min <= max")
        for sub in self.tx_script:
            if not 0 <= sub.node < self.node_count:
                raise ConfigError(f"submission target node {sub.node} out of range")


def load_sim_config(path: str | Path) -> SimConfig:
    """Parse a simulation config file. Amounts follow the genesis
    conventions (ints or decimal strings); transaction data comes from
    dataHex, dataText, or dataFile (relative to the config)."""
    path = Path(path)
    try:
        root = json.loads(path.read_text(), parse_float=fixedpoint.parse_dec_raw)
    except (json.JSONDecodeError, fixedpoint.FixedPointError, OSError) as e:
        raise ConfigError(f"unreadable config: {e}") from None
    if not isinstance(root, dict):
        raise ConfigError("config must be an object")
    try:
        genesis = GenesisConfig.from_json(json.dumps(_genesis_json(root)))
        latency = root.get("latencyTicks", [1, 1])
        subs = []
        for i, entry in enumerate(root.get("transactions", [])):
            subs.append(_parse_submission(entry, path.parent, i))
        fault = None
        if "fault" in root:
            fault = (int(root["fault"]["node"]), int(root["fault"]["height"]))
        cfg = SimConfig(
            node_count=int(root["nodeCount"]),
            blocks=int(root["blocks"]),
            seed=int(root["seed"]),
            latency=(int(latency[0]), int(latency[1])),
            genesis=genesis,
            tx_script=tuple(subs),
            fault=fault,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad config: {e}") from None
    cfg.validate()
    return cfg


def _genesis_json(root: dict) -> dict:
    g = root.get("genesis")
    if not isinstance(g, dict):
        raise ConfigError("config needs a genesis object")
    out = {"accounts": [], "assets": []}
    for a in g.get("accounts", []):
        out["accounts"].append({"id": a["id"], "coins": _amount_str(a["coins"])})
    for a in g.get("assets", []):
        out["assets"].append(
            {"assetId": a["assetId"], "issuance": _amount_str(a["issuance"]), "holder": a["holder"]}
        )
    return out


def _amount_str(v) -> str:
    if isinstance(v, fixedpoint.RawDec):
        return fixedpoint.format_dec(int(v))
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, str):
        return v
    raise ConfigError(f"bad amount {v!r}")


def _parse_submission(entry: dict, base_dir: Path, index: int) -> TxSubmission:
    if not isinstance(entry, dict):
        raise ConfigError(f"transactions[{index}] must be an object")
    data = b""
    sources = [k for k in ("dataHex", "dataText", "dataFile") if k in entry]
    if len(sources) > 1:
        raise ConfigError(f"transactions[{index}]: give at most one data source")
    if "dataHex" in entry:
        data = bytes.fromhex(entry["dataHex"])
    elif if_text := entry.get("dataText"):
        data = if_text.encode("utf-8")
    elif "dataFile" in entry:
        data = (base_dir / entry["dataFile"]).read_bytes()
    asset = None
    if "asset" in entry:
        asset = (entry["asset"]["assetId"], _raw_amount(entry["asset"]["amount"]))
    return TxSubmission(
        tick=int(entry["tick"]),
        node=int(entry["node"]),
        tx=Transaction(
            sender=int(entry["sender"]),
            receiver=int(entry["receiver"]),
            action=int(entry.get("action", 0)),
            coins=_raw_amount(entry.get("coins", 0)),
            asset=asset,
            data=data,
            seq=int(entry["seq"]),
        ),
    )


def _raw_amount(v) -> int:
    if isinstance(v, bool):
        raise ConfigError(f"bad amount {v!r}")
    if isinstance(v, fixedpoint.RawDec):
        return int(v)
    if isinstance(v, int):
        return fixedpoint.from_int(v)  # bare ints are whole coins
    if isinstance(v, str):
        return fixedpoint.parse_dec(v)
    raise ConfigError(f"bad amount {v!r}")


@dataclass
class _PoolEntry:
    tx: Transaction
    retry_deadline: int | None = None  # drop when proposing above this height


class NodeState:
    def __init__(self, node_id: int, genesis: ChainState):
        self.node_id = node_id
        self.chain: list[Block] = [genesis_block(genesis)]
        self.ledger = genesis
        self.mempool: dict[tuple[int, int], _PoolEntry] = {}  # (sender, seq) ->
        self.future: dict[int, Block] = {}
        self.roots: list[bytes] = [compute_state_root(genesis)]

    @property
    def height(self) -> int:
        return self.chain[-1].height

    def add_tx(self, tx: Transaction) -> None:
        self.mempool.setdefault(tx.key(), _PoolEntry(tx))

    def remove_included(self, block: Block) -> None:
        for tx in block.transactions:
            self.mempool.pop(tx.key(), None)


def propose_block(node: NodeState, tick: int) -> Block:
    """Drain the mempool in (sender, seq) order, skipping transactions
    that do not validate right now; skipped entries survive two more
    heights, then drop."""
    height = node.height + 1
    work = node.ledger
    chosen: list[Transaction] = []
    for key in sorted(node.mempool):
        entry = node.mempool[key]
        if len(chosen) >= 1024:
            break
        if validate_transaction(work, entry.tx):
            work, _ = apply_transaction(work, entry.tx)
            chosen.append(entry.tx)
            entry.retry_deadline = None
        else:
            if entry.retry_deadline is None:
                entry.retry_deadline = height + MEMPOOL_RETRY_HEIGHTS
            elif height > entry.retry_deadline:
                del node.mempool[key]
    block, _, _ = make_block(node.ledger, chosen, node.node_id, tick)
    return block


@dataclass(frozen=True)
class AppendVerdict:
    kind: str  # "accept" | "reject" | "ignore"
    reason: str = ""


def validate_and_append(node: NodeState, block: Block, receipts_out: list | None = None) -> AppendVerdict:
    if block.height <= node.height:
        return AppendVerdict("ignore", "AlreadyKnown")
    if block.height > node.height + 1:
        node.future.setdefault(block.height, block)
        return AppendVerdict("ignore", "Future")
    try:
        new_state, receipts = apply_block_with_receipts(node.ledger, block)
    except LedgerError as e:
        return AppendVerdict("reject", f"{type(e).__name__}: {e}")
    node.ledger = new_state
    node.chain.append(block)
    node.roots.append(compute_state_root(new_state))
    node.remove_included(block)
    if receipts_out is not None:
        receipts_out.append((block, receipts))
    return AppendVerdict("accept")


class _EventQueue:
    def __init__(self):
        self.heap: list[tuple] = []
        self.counter = 0
        self.seen: set[tuple] = set()

    def push(self, tick: int, kind: int, frm: int, to: int, payload) -> None:
        key = (tick, kind, frm, to, self.counter)
        # the insertion index makes ties impossible by construction;
        # assert it anyway, an equal pair would mean a broken schedule
        assert key not in self.seen, "duplicate event key"
        self.seen.add(key)
        self.counter += 1
        heapq.heappush(self.heap, (key, payload))

    def pop(self):
        key, payload = heapq.heappop(self.heap)
        return key, payload

    def __bool__(self):
        return bool(self.heap)


def run_simulation(config: SimConfig) -> dict:
    """Run to completion and return the report dict. Raises
    DivergenceDetected when replicas disagree; raises ConfigError for bad
    configs."""
    report, _ = run_simulation_detailed(config)
    return report


def run_simulation_detailed(config: SimConfig) -> tuple[dict, list]:
    """run_simulation plus the final NodeState list (for replay checks)."""
    config.validate()
    genesis = create_genesis(config.genesis)
    for i, sub in enumerate(config.tx_script):
        if sub.tx.sender not in genesis.accounts:
            raise ConfigError(f"transactions[{i}] sender {sub.tx.sender} not in genesis")

    rng = SplitMix64(config.seed)
    nodes = [NodeState(n, genesis.clone()) for n in range(config.node_count)]
    queue = _EventQueue()
    block_records: list[tuple[Block, tuple]] = []

    for sub in config.tx_script:
        queue.push(sub.tick, KIND_SUBMIT, sub.node, sub.node, sub.tx)

    def schedule_next_proposal(node: NodeState, tick: int) -> None:
        next_height = node.height + 1
        if next_height > config.blocks:
            return
        if next_height % config.node_count == node.node_id:
            queue.push(
                tick + PROPOSAL_DELAY_TICKS, KIND_PROPOSE, node.node_id, node.node_id, next_height
            )

    def broadcast(frm: int, tick: int, kind_payload) -> None:
        for m in range(config.node_count):
            if m == frm:
                continue
            delay = rng.randint(config.latency[0], config.latency[1])
            queue.push(tick + delay, KIND_DELIVER, frm, m, kind_payload)

    def on_append(node: NodeState, tick: int) -> None:
        # drain any buffered future blocks that became applicable
        while node.height + 1 in node.future:
            blk = node.future.pop(node.height + 1)
            verdict = validate_and_append(node, blk, _receipts_sink(node))
            if verdict.kind == "reject":
                raise DivergenceDetected(
                    f"node {node.node_id} rejected block {blk.height}: {verdict.reason}",
                )
            if verdict.kind != "accept":
                break
        schedule_next_proposal(node, tick)

    def _receipts_sink(node: NodeState):
        return block_records if node.node_id == 0 else None

    for node in nodes:
        schedule_next_proposal(node, 0)

    done_height = config.blocks
    while queue:
        (tick, kind, frm, to, _), payload = queue.pop()
        if kind == KIND_SUBMIT:
            nodes[to].add_tx(payload)
            broadcast(to, tick, ("tx", payload))
        elif kind == KIND_DELIVER:
            tag, body = payload
            node = nodes[to]
            if tag == "tx":
                node.add_tx(body)
            else:
                verdict = validate_and_append(node, body, _receipts_sink(node))
                if verdict.kind == "reject":
                    raise DivergenceDetected(
                        f"node {to} rejected block {body.height}: {verdict.reason}",
                        _report(config, nodes, block_records, converged=False),
                    )
                if verdict.kind == "accept":
                    on_append(node, tick)
        elif kind == KIND_PROPOSE:
            node = nodes[to]
            target_height = payload
            if node.height + 1 != target_height or target_height > config.blocks:
                continue
            block = propose_block(node, tick)
            if config.fault and config.fault == (node.node_id, block.height):
                # fault injection: a proposer whose execution diverged
                tampered = bytearray(block.state_root)
                tampered[0] ^= 0x01
                block = Block(
                    block.height, block.parent_hash, block.proposer,
                    block.tick, block.transactions, bytes(tampered),
                )
                node.chain.append(block)
                node.roots.append(block.state_root)
                node.ledger.height = block.height
                node.ledger.head_hash = hash_block(block)
            else:
                verdict = validate_and_append(node, block, _receipts_sink(node))
                if verdict.kind != "accept":
                    raise DivergenceDetected(
                        f"proposer {to} could not append its own block: {verdict.reason}",
                        _report(config, nodes, block_records, converged=False),
                    )
                on_append(node, tick)
            broadcast(to, tick, ("block", block))
        if all(n.height >= done_height for n in nodes):
            break

    if not all(n.height >= done_height for n in nodes):
        raise DivergenceDetected(
            f"stalled: not every node reached height {done_height}",
            _report(config, nodes, block_records, converged=False),
        )

    for h in range(done_height + 1):
        roots = {bytes(n.roots[h]) for n in nodes}
        if len(roots) != 1:
            raise DivergenceDetected(
                f"state roots differ at height {h}",
                _report(config, nodes, block_records, converged=False),
            )
    return _report(config, nodes, block_records, converged=True), nodes


def _report(config: SimConfig, nodes: list, block_records: list, converged: bool) -> dict:
    return {
        "config": {
            "nodeCount": config.node_count,
            "blocks": config.blocks,
            "seed": config.seed,
            "latencyTicks": list(config.latency),
        },
        "converged": converged,
        "nodes": [
            {
                "nodeId": n.node_id,
                "height": n.height,
                "headHash": hash_block(n.chain[-1]).hex(),
                "stateRoots": [r.hex() for r in n.roots],
            }
            for n in nodes
        ],
        "blocks": [
            {
                "height": block.height,
                "hash": hash_block(block).hex(),
                "proposer": block.proposer,
                "tick": block.tick,
                "txCount": len(block.transactions),
                "stepTotal": sum(r.steps for r in receipts),
                "receipts": [r.to_json() for r in receipts],
            }
            for block, receipts in sorted(block_records, key=lambda br: br[0].height)
        ],
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
