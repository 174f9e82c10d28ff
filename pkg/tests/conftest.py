import struct
from pathlib import Path

import pytest

from ledgerml import fixedpoint as fp
from ledgerml import ledger

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def ulp_distance(a: float, b: float) -> int:
    if a == b:
        return 0
    ia = struct.unpack(">q", struct.pack(">d", a))[0]
    ib = struct.unpack(">q", struct.pack(">d", b))[0]
    if ia < 0:
        ia = -(ia & 0x7FFFFFFFFFFFFFFF)
    if ib < 0:
        ib = -(ib & 0x7FFFFFFFFFFFFFFF)
    return abs(ia - ib)


def simple_genesis(*balances: str, assets=()) -> ledger.ChainState:
    accounts = tuple((i + 1, fp.parse_dec(b)) for i, b in enumerate(balances))
    return ledger.create_genesis(ledger.GenesisConfig(accounts=accounts, assets=tuple(assets)))


def deploy(state: ledger.ChainState, sender: int, source: bytes, coins: str = "0"):
    tx = ledger.Transaction(
        sender=sender,
        receiver=0,
        action=ledger.ACTION_DEPLOY,
        coins=fp.parse_dec(coins),
        asset=None,
        data=source,
        seq=state.accounts[sender].seq,
    )
    new_state, receipt = ledger.apply_transaction(state, tx)
    assert receipt.committed, receipt
    return new_state, receipt.contract_id


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def demo_contract_source() -> bytes:
    return (FIXTURES / "contracts" / "score_demo.qs").read_bytes()
