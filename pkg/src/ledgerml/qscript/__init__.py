"""QScript: the deterministic contract language.

A contract is a series of constant declarations followed by exactly one
`on receive(sender, action, coins, asset, data) { ... }` handler. The
grammar is documented in docs/qscript.md.
"""

from .ast import ContractAst
from .parser import ParseError, parse_contract, pretty_print
from .interpreter import (
    AbortError,
    ExecutionOutcome,
    HostContext,
    PendingSend,
    StepMeter,
    execute_receive,
)

__all__ = [
    "ContractAst",
    "ParseError",
    "parse_contract",
    "pretty_print",
    "AbortError",
    "ExecutionOutcome",
    "HostContext",
    "PendingSend",
    "StepMeter",
    "execute_receive",
]
