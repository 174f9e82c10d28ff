"""Document parsing and static checking.

parse_pfa takes JSON text and returns a fully validated document: the
JSON is well formed, schemas are valid, every symbol and cell reference
resolves, and the action expression type-checks against the output
schema. Errors carry the JSON path they occurred at, so messages are
deterministic.

Expression forms (see docs/model-format.md):
    bare number              literal (Dbl in double context, Int in int)
    {"string": "..."}        string literal
    true / false             boolean literal
    "name"                   symbol reference ("input" or a let binding)
    {"cell": "name"}         cell reference
    {"let": {...}, "in": e}  sequential bindings
    {"if": c, "then": a, "else": b}
    {"attr": e, "path": [...]}
    {"new": {...}|[...], "type": schema}
    {"<builtin>": [args]}    builtin call
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .schema import (
    MAX_ARRAY_DEPTH,
    PfaSchema,
    SCHEMA_BOOLEAN,
    SCHEMA_DOUBLE,
    SCHEMA_INT,
    SCHEMA_STRING,
    array_of,
    same_schema,
)


class PfaError(ValueError):
    def __init__(self, kind: str, message: str, path: str = ""):
        loc = f" at {path}" if path else ""
        super().__init__(f"{kind}: {message}{loc}")
        self.kind = kind
        self.message = message
        self.path = path


# ---- typed expression nodes ----


@dataclass(frozen=True)
class ELit:
    value: object  # float | int | str | bool
    schema: PfaSchema


@dataclass(frozen=True)
class ESym:
    name: str
    schema: PfaSchema


@dataclass(frozen=True)
class ECell:
    name: str
    schema: PfaSchema


@dataclass(frozen=True)
class ELet:
    bindings: tuple  # ((name, expr), ...)
    body: object
    schema: PfaSchema


@dataclass(frozen=True)
class EIf:
    cond: object
    then: object
    orelse: object
    schema: PfaSchema


@dataclass(frozen=True)
class ECall:
    fn: str
    args: tuple
    mode: str  # overload discriminator, "" when unambiguous
    schema: PfaSchema


@dataclass(frozen=True)
class EAttr:
    base: object
    path: tuple  # str field names and int indices
    schema: PfaSchema


@dataclass(frozen=True)
class ENewRec:
    fields: tuple  # ((name, expr), ...) in schema order
    schema: PfaSchema


@dataclass(frozen=True)
class ENewArr:
    items: tuple
    schema: PfaSchema


@dataclass(frozen=True)
class PfaDocument:
    name: str
    version: int | None
    doc: str
    input: PfaSchema
    output: PfaSchema
    cells: tuple  # ((name, schema, init Value), ...)
    action: object

    def cell_schema(self, name: str) -> PfaSchema | None:
        for n, s, _ in self.cells:
            if n == name:
                return s
        return None


ARRD = array_of(SCHEMA_DOUBLE)
ARRARRD = array_of(ARRD)

# Builtin signatures: name -> list of (arg schemas, result schema, mode).
BUILTINS: dict[str, list[tuple[tuple, PfaSchema, str]]] = {
    "+": [
        ((SCHEMA_DOUBLE, SCHEMA_DOUBLE), SCHEMA_DOUBLE, "dbl"),
        ((SCHEMA_INT, SCHEMA_INT), SCHEMA_INT, "int"),
    ],
    "-": [
        ((SCHEMA_DOUBLE, SCHEMA_DOUBLE), SCHEMA_DOUBLE, "dbl"),
        ((SCHEMA_INT, SCHEMA_INT), SCHEMA_INT, "int"),
    ],
    "*": [
        ((SCHEMA_DOUBLE, SCHEMA_DOUBLE), SCHEMA_DOUBLE, "dbl"),
        ((SCHEMA_INT, SCHEMA_INT), SCHEMA_INT, "int"),
    ],
    "/": [((SCHEMA_DOUBLE, SCHEMA_DOUBLE), SCHEMA_DOUBLE, "dbl")],
    "<": [((SCHEMA_DOUBLE, SCHEMA_DOUBLE), SCHEMA_BOOLEAN, "dbl")],
    "<=": [((SCHEMA_DOUBLE, SCHEMA_DOUBLE), SCHEMA_BOOLEAN, "dbl")],
    ">": [((SCHEMA_DOUBLE, SCHEMA_DOUBLE), SCHEMA_BOOLEAN, "dbl")],
    ">=": [((SCHEMA_DOUBLE, SCHEMA_DOUBLE), SCHEMA_BOOLEAN, "dbl")],
    "==": [
        ((SCHEMA_DOUBLE, SCHEMA_DOUBLE), SCHEMA_BOOLEAN, "dbl"),
        ((SCHEMA_INT, SCHEMA_INT), SCHEMA_BOOLEAN, "int"),
    ],
    "m.exp": [((SCHEMA_DOUBLE,), SCHEMA_DOUBLE, "")],
    "m.ln": [((SCHEMA_DOUBLE,), SCHEMA_DOUBLE, "")],
    "link.logit": [((SCHEMA_DOUBLE,), SCHEMA_DOUBLE, "")],
    "link.softmax": [((ARRD,), ARRD, "")],
    "a.argmax": [((ARRD,), SCHEMA_INT, "")],
    "cast.double": [((SCHEMA_INT,), SCHEMA_DOUBLE, "")],
    "la.dot": [
        ((ARRARRD, ARRD), ARRD, "matvec"),
        ((ARRD, ARRD), SCHEMA_DOUBLE, "vecvec"),
    ],
}

LAYER_FIELD_TYPES = (("weights", ARRARRD), ("bias", ARRD), ("activation", SCHEMA_STRING))


def _is_layer_record(s: PfaSchema) -> bool:
    if s.kind != "record" or len(s.fields) != 3:
        return False
    have = {n: t for n, t in s.fields}
    return all(n in have and same_schema(have[n], t) for n, t in LAYER_FIELD_TYPES)


def _parse_schema(node, path: str, depth: int = 0) -> PfaSchema:
    if isinstance(node, str):
        if node in ("double", "int", "string", "boolean"):
            return PfaSchema(node)
        raise PfaError("SchemaError", f"unknown type {node!r}", path)
    if isinstance(node, dict):
        t = node.get("type")
        if t == "array":
            if depth + 1 > MAX_ARRAY_DEPTH:
                raise PfaError("SchemaError", "array nesting exceeds depth 4", path)
            if "items" not in node:
                raise PfaError("SchemaError", "array needs items", path)
            return array_of(_parse_schema(node["items"], path + ".items", depth + 1))
        if t == "record":
            fields_node = node.get("fields")
            if not isinstance(fields_node, list) or not fields_node:
                raise PfaError("SchemaError", "record needs a nonempty fields list", path)
            fields = []
            seen = set()
            for i, f in enumerate(fields_node):
                if not isinstance(f, dict) or "name" not in f or "type" not in f:
                    raise PfaError(
                        "SchemaError", "record field needs name and type", f"{path}.fields[{i}]"
                    )
                fname = f["name"]
                if not isinstance(fname, str) or not fname:
                    raise PfaError("SchemaError", "bad field name", f"{path}.fields[{i}]")
                if fname in seen:
                    raise PfaError(
                        "SchemaError", f"duplicate field {fname!r}", f"{path}.fields[{i}]"
                    )
                seen.add(fname)
                fields.append(
                    (fname, _parse_schema(f["type"], f"{path}.fields[{i}].type", depth))
                )
            name = node.get("name", "")
            if not isinstance(name, str):
                raise PfaError("SchemaError", "record name must be a string", path)
            return PfaSchema("record", name=name, fields=tuple(fields))
        raise PfaError("SchemaError", f"unknown composite type {t!r}", path)
    raise PfaError("SchemaError", "schema must be a string or object", path)


def _parse_init(node, schema: PfaSchema, path: str):
    """Parse a cell initializer into a runtime value per its schema."""
    from ..values import VBool, VDbl, VInt, VList, VRec, VStr

    if schema.kind == "double":
        if isinstance(node, bool) or not isinstance(node, (int, float)):
            raise PfaError("TypeError", "expected a number", path)
        return VDbl(float(node))
    if schema.kind == "int":
        if isinstance(node, bool) or not isinstance(node, int):
            raise PfaError("TypeError", "expected an integer", path)
        return VInt(node)
    if schema.kind == "string":
        if not isinstance(node, str):
            raise PfaError("TypeError", "expected a string", path)
        return VStr(node)
    if schema.kind == "boolean":
        if not isinstance(node, bool):
            raise PfaError("TypeError", "expected a boolean", path)
        return VBool(node)
    if schema.kind == "array":
        if not isinstance(node, list):
            raise PfaError("TypeError", "expected an array", path)
        return VList(
            tuple(_parse_init(x, schema.items, f"{path}[{i}]") for i, x in enumerate(node))
        )
    if schema.kind == "record":
        if not isinstance(node, dict):
            raise PfaError("TypeError", "expected an object", path)
        if set(node.keys()) != {n for n, _ in schema.fields}:
            raise PfaError(
                "TypeError",
                f"record fields must be exactly {{{', '.join(n for n, _ in schema.fields)}}}",
                path,
            )
        return VRec(
            tuple(
                (n, _parse_init(node[n], fs, f"{path}.{n}")) for n, fs in schema.fields
            )
        )
    raise AssertionError(schema)


class _Checker:
    def __init__(self, doc_input: PfaSchema, cells: dict[str, PfaSchema]):
        self.input = doc_input
        self.cells = cells

    def check(self, node, expected: PfaSchema, env: dict[str, PfaSchema], path: str):
        """Check node against an expected schema, adapting bare literals."""
        if isinstance(node, bool):
            if expected.kind != "boolean":
                raise PfaError("TypeError", f"expected {expected.describe()}, got boolean", path)
            return ELit(node, SCHEMA_BOOLEAN)
        if isinstance(node, (int, float)):
            if expected.kind == "double":
                return ELit(float(node), SCHEMA_DOUBLE)
            if expected.kind == "int":
                if isinstance(node, float):
                    raise PfaError("TypeError", "expected an integer literal", path)
                return ELit(node, SCHEMA_INT)
            raise PfaError("TypeError", f"expected {expected.describe()}, got number", path)
        expr = self.synth(node, env, path)
        if not same_schema(expr.schema, expected):
            raise PfaError(
                "TypeError",
                f"expected {expected.describe()}, got {expr.schema.describe()}",
                path,
            )
        return expr

    def synth(self, node, env: dict[str, PfaSchema], path: str):
        """Infer a type. Bare numbers default to double here."""
        if isinstance(node, bool):
            return ELit(node, SCHEMA_BOOLEAN)
        if isinstance(node, (int, float)):
            return ELit(float(node), SCHEMA_DOUBLE)
        if isinstance(node, str):
            if node not in env:
                raise PfaError("UnboundSymbol", f"unbound symbol {node!r}", path)
            return ESym(node, env[node])
        if not isinstance(node, dict):
            raise PfaError("TypeError", "expression must be a number, string, or object", path)

        if set(node.keys()) == {"string"}:
            if not isinstance(node["string"], str):
                raise PfaError("TypeError", "string literal must hold a string", path)
            return ELit(node["string"], SCHEMA_STRING)
        if set(node.keys()) == {"cell"}:
            name = node["cell"]
            if not isinstance(name, str) or name not in self.cells:
                raise PfaError("UnboundSymbol", f"unknown cell {name!r}", path)
            return ECell(name, self.cells[name])
        if "let" in node:
            if set(node.keys()) != {"let", "in"}:
                raise PfaError("TypeError", "let needs exactly {let, in}", path)
            if not isinstance(node["let"], dict) or not node["let"]:
                raise PfaError("TypeError", "let bindings must be a nonempty object", path)
            inner = dict(env)
            bindings = []
            for name, bexpr in node["let"].items():
                if name == "input" or name in self.cells:
                    raise PfaError("TypeError", f"binding {name!r} shadows", f"{path}.let.{name}")
                typed = self.synth(bexpr, inner, f"{path}.let.{name}")
                inner[name] = typed.schema
                bindings.append((name, typed))
            body = self.synth(node["in"], inner, f"{path}.in")
            return ELet(tuple(bindings), body, body.schema)
        if "if" in node:
            if set(node.keys()) != {"if", "then", "else"}:
                raise PfaError("TypeError", "if needs exactly {if, then, else}", path)
            cond = self.check(node["if"], SCHEMA_BOOLEAN, env, f"{path}.if")
            then = self.synth(node["then"], env, f"{path}.then")
            orelse = self.check(node["else"], then.schema, env, f"{path}.else")
            return EIf(cond, then, orelse, then.schema)
        if "attr" in node:
            if set(node.keys()) != {"attr", "path"}:
                raise PfaError("TypeError", "attr needs exactly {attr, path}", path)
            base = self.synth(node["attr"], env, f"{path}.attr")
            segs = node["path"]
            if not isinstance(segs, list) or not segs:
                raise PfaError("TypeError", "attr path must be a nonempty list", path)
            schema = base.schema
            out_path = []
            for i, seg in enumerate(segs):
                if isinstance(seg, str) and schema.kind == "record":
                    nxt = schema.field(seg)
                    if nxt is None:
                        raise PfaError(
                            "TypeError", f"no field {seg!r}", f"{path}.path[{i}]"
                        )
                    schema = nxt
                elif isinstance(seg, int) and not isinstance(seg, bool) and schema.kind == "array":
                    if seg < 0:
                        raise PfaError("TypeError", "negative index", f"{path}.path[{i}]")
                    schema = schema.items
                else:
                    raise PfaError(
                        "TypeError",
                        f"path segment does not apply to {schema.describe()}",
                        f"{path}.path[{i}]",
                    )
                out_path.append(seg)
            return EAttr(base, tuple(out_path), schema)
        if "new" in node:
            if set(node.keys()) != {"new", "type"}:
                raise PfaError("TypeError", "new needs exactly {new, type}", path)
            schema = _parse_schema(node["type"], f"{path}.type")
            body = node["new"]
            if schema.kind == "record":
                if not isinstance(body, dict):
                    raise PfaError("TypeError", "new record needs an object", path)
                if set(body.keys()) != {n for n, _ in schema.fields}:
                    raise PfaError(
                        "TypeError",
                        f"record fields must be exactly {{{', '.join(n for n, _ in schema.fields)}}}",
                        path,
                    )
                fields = tuple(
                    (n, self.check(body[n], fs, env, f"{path}.new.{n}"))
                    for n, fs in schema.fields
                )
                return ENewRec(fields, schema)
            if schema.kind == "array":
                if not isinstance(body, list):
                    raise PfaError("TypeError", "new array needs a list", path)
                items = tuple(
                    self.check(x, schema.items, env, f"{path}.new[{i}]")
                    for i, x in enumerate(body)
                )
                return ENewArr(items, schema)
            raise PfaError("TypeError", "new builds arrays or records", path)

        if len(node) != 1:
            raise PfaError("TypeError", "call must be a single-key object", path)
        fn, raw_args = next(iter(node.items()))
        if fn == "neural.simpleLayers":
            if not isinstance(raw_args, list):
                raise PfaError("TypeError", f"{fn} arguments must be a list", path)
            return self._check_simple_layers(raw_args, env, path)
        if fn not in BUILTINS:
            raise PfaError("UnknownBuiltin", f"unknown builtin {fn!r}", path)
        if not isinstance(raw_args, list):
            raise PfaError("TypeError", f"{fn} arguments must be a list", path)
        errors = []
        for arg_schemas, result, mode in BUILTINS[fn]:
            if len(raw_args) != len(arg_schemas):
                errors.append(f"arity {len(arg_schemas)}")
                continue
            try:
                args = tuple(
                    self.check(a, s, env, f"{path}.{fn}[{i}]")
                    for i, (a, s) in enumerate(zip(raw_args, arg_schemas))
                )
            except PfaError as e:
                if e.kind in ("UnboundSymbol", "UnknownBuiltin"):
                    raise  # binding errors are real regardless of overload
                errors.append(e.message)
                continue
            return ECall(fn, args, mode, result)
        raise PfaError("TypeError", f"no matching signature for {fn}: {errors[-1]}", path)

    def _check_simple_layers(self, raw_args, env, path):
        # A structural record argument; cannot live in the signature table.
        if len(raw_args) != 2:
            raise PfaError("TypeError", "neural.simpleLayers takes (vector, layers)", path)
        vec = self.check(raw_args[0], ARRD, env, f"{path}.neural.simpleLayers[0]")
        layers = self.synth(raw_args[1], env, f"{path}.neural.simpleLayers[1]")
        s = layers.schema
        if s.kind != "array" or not _is_layer_record(s.items):
            raise PfaError(
                "TypeError",
                "layers must be an array of {weights: array(array(double)), "
                "bias: array(double), activation: string} records",
                f"{path}.neural.simpleLayers[1]",
            )
        return ECall("neural.simpleLayers", (vec, layers), "", ARRD)


def _reject_constant(name: str):
    raise PfaError("JsonError", f"{name} is not allowed in model documents")


def parse_pfa(text: str) -> PfaDocument:
    try:
        root = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise PfaError("JsonError", f"invalid JSON: {e.msg}", f"line {e.lineno}") from None
    if not isinstance(root, dict):
        raise PfaError("JsonError", "document must be a JSON object")

    allowed = {"name", "version", "doc", "input", "output", "cells", "action"}
    unknown = sorted(set(root.keys()) - allowed)
    if unknown:
        raise PfaError("SchemaError", f"unknown document keys {unknown}")
    name = root.get("name", "")
    if not isinstance(name, str):
        raise PfaError("SchemaError", "name must be a string", "name")
    version = root.get("version")
    if version is not None and (isinstance(version, bool) or not isinstance(version, int)):
        raise PfaError("SchemaError", "version must be an integer", "version")
    doc = root.get("doc", "")
    if not isinstance(doc, str):
        raise PfaError("SchemaError", "doc must be a string", "doc")
    if "input" not in root or "output" not in root:
        raise PfaError("SchemaError", "document needs input and output schemas")
    if "action" not in root:
        raise PfaError("SchemaError", "document needs an action")
    input_schema = _parse_schema(root["input"], "input")
    output_schema = _parse_schema(root["output"], "output")

    cells = []
    cell_schemas: dict[str, PfaSchema] = {}
    cells_node = root.get("cells", {})
    if not isinstance(cells_node, dict):
        raise PfaError("SchemaError", "cells must be an object", "cells")
    for cname, cnode in cells_node.items():
        cpath = f"cells.{cname}"
        if cname == "input":
            raise PfaError("SchemaError", "cell may not be named 'input'", cpath)
        if not isinstance(cnode, dict) or set(cnode.keys()) != {"type", "init"}:
            raise PfaError("SchemaError", "cell needs exactly {type, init}", cpath)
        cschema = _parse_schema(cnode["type"], f"{cpath}.type")
        cinit = _parse_init(cnode["init"], cschema, f"{cpath}.init")
        cells.append((cname, cschema, cinit))
        cell_schemas[cname] = cschema

    checker = _Checker(input_schema, cell_schemas)
    action = checker.check(root["action"], output_schema, {"input": input_schema}, "action")
    return PfaDocument(
        name=name,
        version=version,
        doc=doc,
        input=input_schema,
        output=output_schema,
        cells=tuple(cells),
        action=action,
    )
