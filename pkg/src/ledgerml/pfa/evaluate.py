"""Deterministic evaluation of parsed model documents.

Strictly eager, left-to-right; dot products accumulate in ascending index
order with no fusing or reassociation; transcendentals come from the
pinned kernels in detmath. Cost: one budget unit per expression node plus
one per multiply inside a dot product.
"""

from __future__ import annotations

from ..detmath import (
    NumericFaultError,
    det_argmax,
    det_exp,
    det_ln,
    det_logit,
    det_relu,
    det_softmax,
)
from ..values import VBool, VDbl, VInt, VList, VRec, VStr, Value
from .parser import (
    EAttr,
    ECall,
    ECell,
    EIf,
    ELet,
    ELit,
    ENewArr,
    ENewRec,
    ESym,
    PfaDocument,
)
from .schema import PfaSchema


class PfaEvalError(ValueError):
    def __init__(self, kind: str, message: str = ""):
        super().__init__(f"{kind}: {message}" if message else kind)
        self.kind = kind
        self.message = message


def value_from_json(node, schema: PfaSchema, path: str = "input") -> Value:
    """Build a runtime value from parsed JSON, checked against a schema.
    Used by offline scoring entry points."""
    if schema.kind == "double":
        if isinstance(node, bool) or not isinstance(node, (int, float)):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected a number")
        return VDbl(float(node))
    if schema.kind == "int":
        if isinstance(node, bool) or not isinstance(node, int):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected an integer")
        return VInt(node)
    if schema.kind == "string":
        if not isinstance(node, str):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected a string")
        return VStr(node)
    if schema.kind == "boolean":
        if not isinstance(node, bool):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected a boolean")
        return VBool(node)
    if schema.kind == "array":
        if not isinstance(node, list):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected an array")
        return VList(
            tuple(value_from_json(x, schema.items, f"{path}[{i}]") for i, x in enumerate(node))
        )
    if schema.kind == "record":
        if not isinstance(node, dict) or set(node.keys()) != {n for n, _ in schema.fields}:
            raise PfaEvalError("InputSchemaMismatch", f"{path}: bad record fields")
        return VRec(
            tuple((n, value_from_json(node[n], fs, f"{path}.{n}")) for n, fs in schema.fields)
        )
    raise AssertionError(schema)


def check_input(value: Value, schema: PfaSchema, path: str = "input") -> None:
    """Structural conformance of a runtime value against a schema."""
    if schema.kind == "double":
        if not isinstance(value, VDbl):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected Dbl")
        return
    if schema.kind == "int":
        if not isinstance(value, VInt):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected Int")
        return
    if schema.kind == "string":
        if not isinstance(value, VStr):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected Str")
        return
    if schema.kind == "boolean":
        if not isinstance(value, VBool):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected Bool")
        return
    if schema.kind == "array":
        if not isinstance(value, VList):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected List")
        for i, item in enumerate(value.items):
            check_input(item, schema.items, f"{path}[{i}]")
        return
    if schema.kind == "record":
        if not isinstance(value, VRec):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: expected Rec")
        names = [n for n, _ in value.fields]
        want = [n for n, _ in schema.fields]
        if sorted(names) != sorted(want):
            raise PfaEvalError("InputSchemaMismatch", f"{path}: bad record fields")
        for n, fs in schema.fields:
            check_input(value.get(n), fs, f"{path}.{n}")
        return
    raise AssertionError(schema)


def _no_charge(_n: int) -> None:
    pass


def evaluate(doc: PfaDocument, input_value: Value, charge=None, budget: int | None = None) -> Value:
    """Score one input. `charge` is an optional callable invoked with
    incremental costs (the contract meter); `budget` caps total cost for
    standalone use and raises EvalBudgetExceeded."""
    if charge is None and budget is None:
        charge = _no_charge
    elif charge is None:
        spent = [0]

        def charge(n: int, _spent=spent, _budget=budget):
            _spent[0] += n
            if _spent[0] > _budget:
                raise PfaEvalError("EvalBudgetExceeded", f"budget {_budget}")

    check_input(input_value, doc.input)
    env: dict[str, Value] = {"input": input_value}
    cells = {name: init for name, _, init in doc.cells}
    try:
        return _eval(doc.action, env, cells, charge)
    except NumericFaultError as e:
        raise PfaEvalError("NumericFault", e.detail) from None


def _floats(v: Value) -> list[float]:
    return [x.v for x in v.items]


def _dot_matvec(m: Value, v: Value, charge) -> Value:
    vec = _floats(v)
    out = []
    for row in m.items:
        if len(row.items) != len(vec):
            raise PfaEvalError(
                "DimensionMismatch", f"row of {len(row.items)} against vector of {len(vec)}"
            )
        charge(len(vec))
        acc = 0.0
        for a, b in zip(_floats(row), vec):  # ascending index, no fusing
            acc = acc + a * b
        _require_finite(acc)
        out.append(VDbl(acc))
    return VList(tuple(out))


def _dot_vecvec(a: Value, b: Value, charge) -> Value:
    xs = _floats(a)
    ys = _floats(b)
    if len(xs) != len(ys):
        raise PfaEvalError("DimensionMismatch", f"{len(xs)} against {len(ys)}")
    charge(len(xs))
    acc = 0.0
    for x, y in zip(xs, ys):
        acc = acc + x * y
    _require_finite(acc)
    return VDbl(acc)


def _require_finite(x: float) -> float:
    if x != x or x == float("inf") or x == float("-inf"):
        raise NumericFaultError("non-finite value produced")
    return x


ACTIVATIONS = {"logit", "relu", "linear", "softmax"}


def _simple_layers(vec: Value, layers: Value, charge) -> Value:
    current = _floats(vec)
    for layer in layers.items:
        weights = layer.get("weights")
        bias = layer.get("bias")
        activation = layer.get("activation").v
        if activation not in ACTIVATIONS:
            raise PfaEvalError("UnknownActivation", activation)
        rows = weights.items
        if len(bias.items) != len(rows):
            raise PfaEvalError(
                "DimensionMismatch", f"bias of {len(bias.items)} against {len(rows)} rows"
            )
        pre = []
        for row, b in zip(rows, _floats(bias)):
            if len(row.items) != len(current):
                raise PfaEvalError(
                    "DimensionMismatch",
                    f"row of {len(row.items)} against vector of {len(current)}",
                )
            charge(len(current))
            acc = 0.0
            for a, x in zip(_floats(row), current):
                acc = acc + a * x
            pre.append(_require_finite(acc + b))
        if activation == "logit":
            current = [det_logit(x) for x in pre]
        elif activation == "relu":
            current = [det_relu(x) for x in pre]
        elif activation == "softmax":
            current = det_softmax(pre)
        else:
            current = pre
    return VList(tuple(VDbl(x) for x in current))


def _eval(expr, env: dict, cells: dict, charge) -> Value:
    charge(1)
    if isinstance(expr, ELit):
        v = expr.value
        if expr.schema.kind == "double":
            return VDbl(v)
        if expr.schema.kind == "int":
            return VInt(v)
        if expr.schema.kind == "string":
            return VStr(v)
        return VBool(v)
    if isinstance(expr, ESym):
        return env[expr.name]
    if isinstance(expr, ECell):
        return cells[expr.name]
    if isinstance(expr, ELet):
        inner = dict(env)
        for name, bexpr in expr.bindings:
            inner[name] = _eval(bexpr, inner, cells, charge)
        return _eval(expr.body, inner, cells, charge)
    if isinstance(expr, EIf):
        cond = _eval(expr.cond, env, cells, charge)
        branch = expr.then if cond.v else expr.orelse
        return _eval(branch, env, cells, charge)
    if isinstance(expr, EAttr):
        v = _eval(expr.base, env, cells, charge)
        for seg in expr.path:
            if isinstance(seg, str):
                v = v.get(seg)
            else:
                if not 0 <= seg < len(v.items):
                    raise PfaEvalError("DimensionMismatch", f"index {seg} out of range")
                v = v.items[seg]
        return v
    if isinstance(expr, ENewRec):
        return VRec(tuple((n, _eval(e, env, cells, charge)) for n, e in expr.fields))
    if isinstance(expr, ENewArr):
        return VList(tuple(_eval(e, env, cells, charge) for e in expr.items))
    if isinstance(expr, ECall):
        args = [_eval(a, env, cells, charge) for a in expr.args]
        return _call(expr, args, charge)
    raise AssertionError(expr)


def _call(expr, args: list[Value], charge) -> Value:
    fn = expr.fn
    if fn in ("+", "-", "*", "/"):
        if expr.mode == "int":
            x, y = args[0].v, args[1].v
            r = x + y if fn == "+" else x - y if fn == "-" else x * y
            if not -(2**63) <= r < 2**63:
                raise NumericFaultError("int overflow")
            return VInt(r)
        x, y = args[0].v, args[1].v
        if fn == "+":
            r = x + y
        elif fn == "-":
            r = x - y
        elif fn == "*":
            r = x * y
        else:
            if y == 0.0:
                raise NumericFaultError("division by zero")
            r = x / y
        return VDbl(_require_finite(r))
    if fn in ("<", "<=", ">", ">=", "=="):
        x, y = args[0].v, args[1].v
        if fn == "<":
            return VBool(x < y)
        if fn == "<=":
            return VBool(x <= y)
        if fn == ">":
            return VBool(x > y)
        if fn == ">=":
            return VBool(x >= y)
        return VBool(x == y)
    if fn == "m.exp":
        return VDbl(det_exp(args[0].v))
    if fn == "m.ln":
        return VDbl(det_ln(args[0].v))
    if fn == "link.logit":
        return VDbl(det_logit(args[0].v))
    if fn == "link.softmax":
        if not args[0].items:
            raise PfaEvalError("DimensionMismatch", "softmax of empty vector")
        return VList(tuple(VDbl(x) for x in det_softmax(_floats(args[0]))))
    if fn == "a.argmax":
        if not args[0].items:
            raise PfaEvalError("DimensionMismatch", "argmax of empty vector")
        return VInt(det_argmax(_floats(args[0])))
    if fn == "cast.double":
        return VDbl(float(args[0].v))
    if fn == "la.dot":
        if expr.mode == "matvec":
            return _dot_matvec(args[0], args[1], charge)
        return _dot_vecvec(args[0], args[1], charge)
    if fn == "neural.simpleLayers":
        return _simple_layers(args[0], args[1], charge)
    raise AssertionError(fn)
