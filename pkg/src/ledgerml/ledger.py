"""Account ledger: the deterministic state machine every node replicates.

State transitions are pure: validate_transaction / apply_transaction /
apply_block never mutate their inputs; they return fresh states. A
committed state is an immutable snapshot, safe to share read-only.

Canonical encodings (state, block) are the consensus wire format; the
exact byte layouts are documented in docs/wire-format.md and hashed with
SHA-256 for state roots and block hashes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

from . import fixedpoint
from .qscript import parser as qparser
from .qscript.interpreter import (
    MAX_DATA_BYTES,
    AbortError,
    DEFAULT_STEP_LIMIT,
    HostContext,
    LedgerView,
    StepMeter,
    execute_receive,
)
from .values import Value, decode_value, encode_str, encode_value

ACTION_DEPLOY = 1
SYSTEM_ACCOUNT = 0
MAX_BLOCK_TXS = 1024
MAX_SEND_DEPTH = 8

U64_MAX = (1 << 64) - 1


class LedgerError(Exception):
    pass


class BadParent(LedgerError):
    pass


class BadHeight(LedgerError):
    pass


class StateRootMismatch(LedgerError):
    pass


class InvalidTransactionInBlock(LedgerError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"transaction {index} invalid: {reason}")
        self.index = index
        self.reason = reason


class InternalInvariantBroken(LedgerError):
    pass


class GenesisError(LedgerError):
    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code


@dataclass(frozen=True)
class Transaction:
    sender: int
    receiver: int
    action: int
    coins: int  # raw fixed-point
    asset: tuple[str, int] | None
    data: bytes
    seq: int

    def key(self) -> tuple[int, int]:
        return (self.sender, self.seq)


@dataclass(frozen=True)
class Block:
    height: int
    parent_hash: bytes
    proposer: int
    tick: int
    transactions: tuple
    state_root: bytes

    def __post_init__(self):
        if len(self.transactions) > MAX_BLOCK_TXS:
            raise LedgerError(f"block exceeds {MAX_BLOCK_TXS} transactions")
        if len(self.parent_hash) != 32 or len(self.state_root) != 32:
            raise LedgerError("hashes must be 32 bytes")


@dataclass
class Account:
    id: int
    coin_balance: int = 0
    asset_balances: dict = field(default_factory=dict)  # asset_id -> raw amount
    seq: int = 0
    contract_source: bytes | None = None
    contract_storage: dict = field(default_factory=dict)  # key -> Value

    def clone(self) -> "Account":
        return Account(
            id=self.id,
            coin_balance=self.coin_balance,
            asset_balances=dict(self.asset_balances),
            seq=self.seq,
            contract_source=self.contract_source,
            contract_storage=dict(self.contract_storage),
        )


@dataclass
class ChainState:
    accounts: dict  # id -> Account
    next_account_id: int
    asset_registry: frozenset
    height: int
    head_hash: bytes  # bookkeeping only, not part of the hashed state

    def clone(self) -> "ChainState":
        return ChainState(
            accounts={aid: acct.clone() for aid, acct in self.accounts.items()},
            next_account_id=self.next_account_id,
            asset_registry=self.asset_registry,
            height=self.height,
            head_hash=self.head_hash,
        )

    def total_coins(self) -> int:
        return sum(a.coin_balance for a in self.accounts.values())

    def total_asset(self, asset_id: str) -> int:
        return sum(a.asset_balances.get(asset_id, 0) for a in self.accounts.values())


@dataclass(frozen=True)
class GenesisConfig:
    accounts: tuple  # ((id, raw coins), ...)
    assets: tuple  # ((asset_id, raw issuance, holder id), ...)

    @staticmethod
    def from_json(text: str) -> "GenesisConfig":
        try:
            root = json.loads(text, parse_float=fixedpoint.parse_dec_raw)
        except (json.JSONDecodeError, fixedpoint.FixedPointError) as e:
            raise GenesisError("MalformedGenesis", str(e)) from None
        if not isinstance(root, dict):
            raise GenesisError("MalformedGenesis", "genesis must be an object")
        accounts = []
        for entry in root.get("accounts", []):
            if not isinstance(entry, dict) or "id" not in entry or "coins" not in entry:
                raise GenesisError("MalformedGenesis", "account needs id and coins")
            accounts.append((entry["id"], _amount(entry["coins"])))
        assets = []
        for entry in root.get("assets", []):
            if not isinstance(entry, dict) or not {"assetId", "issuance", "holder"} <= set(entry):
                raise GenesisError(
                    "MalformedGenesis", "asset needs assetId, issuance, holder"
                )
            assets.append((entry["assetId"], _amount(entry["issuance"]), entry["holder"]))
        return GenesisConfig(tuple(accounts), tuple(assets))


def _amount(v) -> int:
    """Coerce a JSON-decoded amount to raw fixed point. Decimal literals
    arrive as RawDec through the parse_float hook (exact by construction);
    bare ints are whole coins; strings are parsed exactly."""
    if isinstance(v, bool):
        raise GenesisError("MalformedGenesis", "bad amount")
    if isinstance(v, fixedpoint.RawDec):
        return int(v)
    if isinstance(v, int):
        try:
            return fixedpoint.from_int(v)
        except fixedpoint.FixedPointError as e:
            raise GenesisError("MalformedGenesis", str(e)) from None
    if isinstance(v, str):
        try:
            return fixedpoint.parse_dec(v)
        except fixedpoint.FixedPointError as e:
            raise GenesisError("MalformedGenesis", str(e)) from None
    raise GenesisError("MalformedGenesis", f"bad amount {v!r}")


def create_genesis(config: GenesisConfig) -> ChainState:
    if not config.accounts:
        raise GenesisError("EmptyGenesis")
    accounts: dict[int, Account] = {}
    for aid, coins in config.accounts:
        if not isinstance(aid, int) or not 1 <= aid <= U64_MAX:
            raise GenesisError("ReservedAccountId", f"account id {aid!r}")
        if aid in accounts:
            raise GenesisError("DuplicateAccount", str(aid))
        if coins < 0:
            raise GenesisError("NegativeBalance", str(aid))
        accounts[aid] = Account(id=aid, coin_balance=coins)
    registry = []
    for asset_id, issuance, holder in config.assets:
        if not isinstance(asset_id, str) or not asset_id or len(asset_id.encode("utf-8")) > 64:
            raise GenesisError("BadAssetId", repr(asset_id))
        if asset_id in registry:
            raise GenesisError("DuplicateAsset", asset_id)
        if issuance < 0:
            raise GenesisError("NegativeBalance", asset_id)
        if holder not in accounts:
            raise GenesisError("UnknownHolder", f"asset {asset_id} to account {holder}")
        registry.append(asset_id)
        if issuance > 0:
            accounts[holder].asset_balances[asset_id] = issuance
    fixedpoint.check_range(sum(a.coin_balance for a in accounts.values()))
    state = ChainState(
        accounts=accounts,
        next_account_id=max(accounts) + 1,
        asset_registry=frozenset(registry),
        height=0,
        head_hash=b"\x00" * 32,
    )
    genesis = genesis_block(state)
    state.head_hash = hash_block(genesis)
    return state


def genesis_block(state: ChainState) -> Block:
    return Block(
        height=0,
        parent_hash=b"\x00" * 32,
        proposer=0,
        tick=0,
        transactions=(),
        state_root=compute_state_root(state),
    )


# ---- canonical encoding ----


def _i128(v: int) -> bytes:
    return v.to_bytes(16, "big", signed=True)


def encode_transaction(tx: Transaction) -> bytes:
    out = [
        struct.pack(">QQi", tx.sender, tx.receiver, tx.action),
        _i128(tx.coins),
    ]
    if tx.asset is None:
        out.append(b"\x00")
    else:
        out.append(b"\x01")
        out.append(encode_str(tx.asset[0]))
        out.append(_i128(tx.asset[1]))
    out.append(struct.pack(">I", len(tx.data)))
    out.append(tx.data)
    out.append(struct.pack(">Q", tx.seq))
    return b"".join(out)


def encode_block(block: Block) -> bytes:
    out = [
        struct.pack(">Q", block.height),
        block.parent_hash,
        struct.pack(">IQ", block.proposer, block.tick),
        struct.pack(">I", len(block.transactions)),
    ]
    for tx in block.transactions:
        out.append(encode_transaction(tx))
    out.append(block.state_root)
    return b"".join(out)


class _BlockReader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise LedgerError("truncated block bytes")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack(">I")
        return self.take(n).decode("utf-8")


def decode_block(buf: bytes) -> Block:
    r = _BlockReader(buf)
    (height,) = r.unpack(">Q")
    parent = r.take(32)
    proposer, tick = r.unpack(">IQ")
    (n_txs,) = r.unpack(">I")
    if n_txs > MAX_BLOCK_TXS:
        raise LedgerError("block exceeds transaction limit")
    txs = []
    for _ in range(n_txs):
        sender, receiver, action = r.unpack(">QQi")
        coins = int.from_bytes(r.take(16), "big", signed=True)
        asset = None
        if r.take(1) == b"\x01":
            asset_id = r.string()
            amount = int.from_bytes(r.take(16), "big", signed=True)
            asset = (asset_id, amount)
        (dlen,) = r.unpack(">I")
        data = r.take(dlen)
        (seq,) = r.unpack(">Q")
        txs.append(Transaction(sender, receiver, action, coins, asset, data, seq))
    root = r.take(32)
    if r.pos != len(buf):
        raise LedgerError("trailing bytes after block")
    return Block(height, parent, proposer, tick, tuple(txs), root)


def hash_block(block: Block) -> bytes:
    return hashlib.sha256(encode_block(block)).digest()


def _sorted_by_key_bytes(d: dict) -> list:
    return sorted(d.items(), key=lambda kv: kv[0].encode("utf-8"))


def encode_account(acct: Account) -> bytes:
    out = [struct.pack(">Q", acct.id), _i128(acct.coin_balance)]
    balances = _sorted_by_key_bytes(acct.asset_balances)
    out.append(struct.pack(">I", len(balances)))
    for asset_id, amount in balances:
        out.append(encode_str(asset_id))
        out.append(_i128(amount))
    out.append(struct.pack(">Q", acct.seq))
    if acct.contract_source is None:
        out.append(b"\x00")
    else:
        out.append(b"\x01")
        out.append(struct.pack(">I", len(acct.contract_source)))
        out.append(acct.contract_source)
    storage = _sorted_by_key_bytes(acct.contract_storage)
    out.append(struct.pack(">I", len(storage)))
    for key, value in storage:
        out.append(encode_str(key))
        out.append(encode_value(value))
    return b"".join(out)


def encode_state(state: ChainState) -> bytes:
    out = [struct.pack(">I", len(state.accounts))]
    for aid in sorted(state.accounts):
        out.append(encode_account(state.accounts[aid]))
    out.append(struct.pack(">Q", state.next_account_id))
    registry = sorted(state.asset_registry, key=lambda s: s.encode("utf-8"))
    out.append(struct.pack(">I", len(registry)))
    for asset_id in registry:
        out.append(encode_str(asset_id))
    out.append(struct.pack(">Q", state.height))
    return b"".join(out)


def decode_state(buf: bytes, head_hash: bytes = b"\x00" * 32) -> ChainState:
    from .values import _Reader, _decode

    r = _BlockReader(buf)
    (n_accounts,) = r.unpack(">I")
    accounts: dict[int, Account] = {}
    prev_id = -1
    for _ in range(n_accounts):
        (aid,) = r.unpack(">Q")
        if aid <= prev_id:
            raise LedgerError("account ids not strictly ascending")
        prev_id = aid
        coin_balance = int.from_bytes(r.take(16), "big", signed=True)
        (n_assets,) = r.unpack(">I")
        balances = {}
        prev_key = None
        for _ in range(n_assets):
            asset_id = r.string()
            if prev_key is not None and asset_id.encode("utf-8") <= prev_key:
                raise LedgerError("asset keys not strictly ascending")
            prev_key = asset_id.encode("utf-8")
            balances[asset_id] = int.from_bytes(r.take(16), "big", signed=True)
        (seq,) = r.unpack(">Q")
        source = None
        if r.take(1) == b"\x01":
            (slen,) = r.unpack(">I")
            source = r.take(slen)
        (n_storage,) = r.unpack(">I")
        storage = {}
        prev_key = None
        for _ in range(n_storage):
            key = r.string()
            if prev_key is not None and key.encode("utf-8") <= prev_key:
                raise LedgerError("storage keys not strictly ascending")
            prev_key = key.encode("utf-8")
            vr = _Reader(r.buf)
            vr.pos = r.pos
            storage[key] = _decode(vr)
            r.pos = vr.pos
        accounts[aid] = Account(aid, coin_balance, balances, seq, source, storage)
    (next_id,) = r.unpack(">Q")
    (n_registry,) = r.unpack(">I")
    registry = [r.string() for _ in range(n_registry)]
    (height,) = r.unpack(">Q")
    if r.pos != len(buf):
        raise LedgerError("trailing bytes after state")
    return ChainState(accounts, next_id, frozenset(registry), height, head_hash)


def compute_state_root(state: ChainState) -> bytes:
    return hashlib.sha256(encode_state(state)).digest()


# ---- validation ----


@dataclass(frozen=True)
class ValidationVerdict:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


ACCEPT = ValidationVerdict(True)


def validate_transaction(state: ChainState, tx: Transaction) -> ValidationVerdict:
    sender = state.accounts.get(tx.sender)
    if sender is None:
        return ValidationVerdict(False, "UnknownSender")
    if tx.seq != sender.seq:
        return ValidationVerdict(False, "BadSequence")
    if tx.coins < 0:
        return ValidationVerdict(False, "BadAmount")
    if len(tx.data) > MAX_DATA_BYTES:
        return ValidationVerdict(False, "DataTooLarge")
    if sender.coin_balance < tx.coins:
        return ValidationVerdict(False, "InsufficientFunds")
    if tx.asset is not None:
        asset_id, amount = tx.asset
        if amount < 0:
            return ValidationVerdict(False, "BadAmount")
        if asset_id not in state.asset_registry:
            return ValidationVerdict(False, "UnknownAsset")
        if sender.asset_balances.get(asset_id, 0) < amount:
            return ValidationVerdict(False, "InsufficientAsset")
    if tx.receiver == SYSTEM_ACCOUNT:
        if tx.action != ACTION_DEPLOY:
            return ValidationVerdict(False, "UnknownReceiver")
        try:
            _parse_cached(tx.data)
        except (UnicodeDecodeError, qparser.ParseError) as e:
            return ValidationVerdict(False, f"InvalidContractSource: {e}")
    elif tx.receiver not in state.accounts:
        return ValidationVerdict(False, "UnknownReceiver")
    if not -(2**31) <= tx.action < 2**31:
        return ValidationVerdict(False, "BadAction")
    return ACCEPT


# ---- execution ----


@dataclass(frozen=True)
class TxReceipt:
    committed: bool
    reason: str = ""
    detail: str = ""
    logs: tuple = ()
    steps: int = 0
    contract_id: int | None = None

    def to_json(self) -> dict:
        out = {
            "status": "committed" if self.committed else "aborted",
            "logs": list(self.logs),
            "steps": self.steps,
        }
        if not self.committed:
            out["reason"] = self.reason
            if self.detail:
                out["detail"] = self.detail
        if self.contract_id is not None:
            out["contractId"] = self.contract_id
        return out


class _WorkingView(LedgerView):
    def __init__(self, state: ChainState):
        self.state = state

    def coin_balance(self, account_id: int) -> int:
        acct = self.state.accounts.get(account_id)
        return acct.coin_balance if acct else 0

    def asset_balance(self, account_id: int, asset_id: str) -> int:
        acct = self.state.accounts.get(account_id)
        return acct.asset_balances.get(asset_id, 0) if acct else 0

    def committed_storage(self, account_id: int, key: str):
        acct = self.state.accounts.get(account_id)
        if acct is None:
            return None
        return acct.contract_storage.get(key)

    def account_exists(self, account_id: int) -> bool:
        return account_id in self.state.accounts


class _Trace:
    __slots__ = ("logs", "steps", "contract_id")

    def __init__(self):
        self.logs: list[str] = []
        self.steps = 0
        self.contract_id: int | None = None


_AST_CACHE: dict[bytes, object] = {}


def _parse_cached(source: bytes):
    cached = _AST_CACHE.get(source)
    if cached is None:
        cached = qparser.parse_contract(source.decode("utf-8"))
        if len(_AST_CACHE) > 256:
            _AST_CACHE.clear()
        _AST_CACHE[source] = cached
    return cached


def _move_funds(work: ChainState, sender_id: int, receiver_id: int, coins: int,
                asset: tuple[str, int] | None) -> None:
    sender = work.accounts[sender_id]
    receiver = work.accounts[receiver_id]
    if sender.coin_balance < coins:
        raise InternalInvariantBroken("debit below zero")
    sender.coin_balance -= coins
    receiver.coin_balance += coins
    if asset is not None:
        asset_id, amount = asset
        have = sender.asset_balances.get(asset_id, 0)
        if have < amount:
            raise InternalInvariantBroken("asset debit below zero")
        if amount > 0:
            # zero balances are never stored, so equal states stay
            # byte-identical
            if have == amount:
                del sender.asset_balances[asset_id]
            else:
                sender.asset_balances[asset_id] = have - amount
            receiver.asset_balances[asset_id] = (
                receiver.asset_balances.get(asset_id, 0) + amount
            )


def _deliver(
    work: ChainState,
    sender_id: int,
    receiver_id: int,
    action: int,
    coins: int,
    asset: tuple[str, int] | None,
    data: bytes,
    depth: int,
    trace: _Trace,
    step_limit: int,
) -> None:
    """Move funds and, if the receiver is a contract, run its handler and
    apply its effects depth-first. Raises AbortError to unwind the whole
    outer transaction."""
    if receiver_id == SYSTEM_ACCOUNT:
        if depth != 0 or action != ACTION_DEPLOY:
            raise AbortError("InvalidSend", "system account only accepts deployments")
        new_id = work.next_account_id
        work.next_account_id += 1
        work.accounts[new_id] = Account(id=new_id, contract_source=bytes(data))
        _move_funds(work, sender_id, new_id, coins, asset)
        trace.contract_id = new_id
        return

    receiver = work.accounts.get(receiver_id)
    if receiver is None:
        raise AbortError("InvalidSend", f"receiver {receiver_id} does not exist")
    _move_funds(work, sender_id, receiver_id, coins, asset)
    if receiver.contract_source is None:
        return
    if depth >= MAX_SEND_DEPTH:
        raise AbortError("DepthExceeded", f"send depth limit {MAX_SEND_DEPTH}")

    ast = _parse_cached(receiver.contract_source)
    ctx = HostContext(
        self_account=receiver_id,
        view=_WorkingView(work),
        meter=StepMeter(step_limit),
    )
    outcome = execute_receive(ast, ctx, sender_id, action, coins, asset, data)
    trace.logs.extend(outcome.logs)
    trace.steps += outcome.steps_used
    if not outcome.committed:
        raise AbortError(outcome.reason, outcome.detail)
    account = work.accounts[receiver_id]
    for key, value in outcome.storage_overlay:
        account.contract_storage[key] = value
    for send in outcome.pending_sends:
        _deliver(
            work,
            receiver_id,
            send.receiver,
            send.action,
            send.coins,
            send.asset,
            send.data,
            depth + 1,
            trace,
            step_limit,
        )


def apply_transaction(
    state: ChainState, tx: Transaction, step_limit: int = DEFAULT_STEP_LIMIT
) -> tuple[ChainState, TxReceipt]:
    verdict = validate_transaction(state, tx)
    if not verdict:
        raise InternalInvariantBroken(f"unvalidated transaction: {verdict.reason}")
    work = state.clone()
    work.accounts[tx.sender].seq += 1
    trace = _Trace()
    try:
        _deliver(
            work, tx.sender, tx.receiver, tx.action, tx.coins, tx.asset, tx.data,
            depth=0, trace=trace, step_limit=step_limit,
        )
    except AbortError as e:
        # roll back everything except the sender's sequence counter
        rolled = state.clone()
        rolled.accounts[tx.sender].seq += 1
        receipt = TxReceipt(
            committed=False,
            reason=e.reason,
            detail=e.detail,
            logs=tuple(trace.logs),
            steps=trace.steps,
        )
        return rolled, receipt
    receipt = TxReceipt(
        committed=True,
        logs=tuple(trace.logs),
        steps=trace.steps,
        contract_id=trace.contract_id,
    )
    return work, receipt


def apply_block_with_receipts(
    state: ChainState, block: Block, step_limit: int = DEFAULT_STEP_LIMIT
) -> tuple[ChainState, tuple]:
    if block.parent_hash != state.head_hash:
        raise BadParent(
            f"parent {block.parent_hash.hex()} != head {state.head_hash.hex()}"
        )
    if block.height != state.height + 1:
        raise BadHeight(f"height {block.height}, expected {state.height + 1}")
    work = state
    receipts = []
    for i, tx in enumerate(block.transactions):
        verdict = validate_transaction(work, tx)
        if not verdict:
            raise InvalidTransactionInBlock(i, verdict.reason)
        work, receipt = apply_transaction(work, tx, step_limit)
        receipts.append(receipt)
    if work is state:
        work = state.clone()
    work.height = block.height
    root = compute_state_root(work)
    if root != block.state_root:
        raise StateRootMismatch(f"{root.hex()} != {block.state_root.hex()}")
    work.head_hash = hash_block(block)
    return work, tuple(receipts)


def apply_block(
    state: ChainState, block: Block, step_limit: int = DEFAULT_STEP_LIMIT
) -> ChainState:
    new_state, _ = apply_block_with_receipts(state, block, step_limit)
    return new_state


def make_block(
    state: ChainState,
    transactions: list,
    proposer: int,
    tick: int,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> tuple[Block, ChainState, tuple]:
    """Execute transactions against `state` and assemble the block whose
    state_root matches. Transactions must already validate in order."""
    work = state
    receipts = []
    for tx in transactions:
        verdict = validate_transaction(work, tx)
        if not verdict:
            raise LedgerError(f"invalid transaction at proposal: {verdict.reason}")
        work, receipt = apply_transaction(work, tx, step_limit)
        receipts.append(receipt)
    if work is state:
        work = state.clone()
    work.height = state.height + 1
    block = Block(
        height=work.height,
        parent_hash=state.head_hash,
        proposer=proposer,
        tick=tick,
        transactions=tuple(transactions),
        state_root=compute_state_root(work),
    )
    work.head_hash = hash_block(block)
    return block, work, tuple(receipts)
