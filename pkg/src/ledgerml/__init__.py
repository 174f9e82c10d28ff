"""ledgerml: a deterministic account ledger whose contracts can score
embedded ML models, plus a multi-node replication simulator.

Everything that touches consensus state is bit-reproducible: fixed-point
coin arithmetic, canonical byte encodings, and self-contained binary64
math kernels with pinned evaluation order.
"""

__version__ = "0.1.0"
