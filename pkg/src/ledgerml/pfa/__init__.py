"""Parser, checker, and deterministic evaluator for a documented subset
of the Portable Format for Analytics: enough to score linear, logistic,
and layered-perceptron models shipped as JSON documents.

The subset grammar lives in docs/model-format.md. No user-defined
functions, no mutable cells, no loops: documents that parse always
evaluate in bounded time with a fully pinned operation order.
"""

from .schema import PfaSchema, SCHEMA_DOUBLE, SCHEMA_INT, schema_to_json
from .parser import PfaDocument, PfaError, parse_pfa
from .evaluate import PfaEvalError, evaluate, check_input, value_from_json

__all__ = [
    "PfaSchema",
    "SCHEMA_DOUBLE",
    "SCHEMA_INT",
    "schema_to_json",
    "PfaDocument",
    "PfaError",
    "parse_pfa",
    "PfaEvalError",
    "evaluate",
    "check_input",
    "value_from_json",
]
