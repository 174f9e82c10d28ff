"""Model document type schemas.

Primitives are "double", "int", "string", "boolean"; containers are
arrays (nesting depth capped at 4) and records with uniquely named,
ordered fields.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_ARRAY_DEPTH = 4


@dataclass(frozen=True)
class PfaSchema:
    kind: str  # "double" | "int" | "string" | "boolean" | "array" | "record"
    items: "PfaSchema | None" = None
    name: str = ""
    fields: tuple = ()  # ((field_name, PfaSchema), ...)

    def field(self, name: str) -> "PfaSchema | None":
        for fname, fschema in self.fields:
            if fname == name:
                return fschema
        return None

    def describe(self) -> str:
        if self.kind == "array":
            return f"array({self.items.describe()})"
        if self.kind == "record":
            inner = ", ".join(f"{n}: {s.describe()}" for n, s in self.fields)
            return f"record{{{inner}}}"
        return self.kind


SCHEMA_DOUBLE = PfaSchema("double")
SCHEMA_INT = PfaSchema("int")
SCHEMA_STRING = PfaSchema("string")
SCHEMA_BOOLEAN = PfaSchema("boolean")


def array_of(items: PfaSchema) -> PfaSchema:
    return PfaSchema("array", items=items)


def same_schema(a: PfaSchema, b: PfaSchema) -> bool:
    """Structural equality. Record names are documentation; fields and
    their order are what matters."""
    if a.kind != b.kind:
        return False
    if a.kind == "array":
        return same_schema(a.items, b.items)
    if a.kind == "record":
        if len(a.fields) != len(b.fields):
            return False
        return all(
            an == bn and same_schema(asch, bsch)
            for (an, asch), (bn, bsch) in zip(a.fields, b.fields)
        )
    return True


def schema_to_json(s: PfaSchema):
    if s.kind == "array":
        return {"type": "array", "items": schema_to_json(s.items)}
    if s.kind == "record":
        return {
            "type": "record",
            "name": s.name,
            "fields": [{"name": n, "type": schema_to_json(t)} for n, t in s.fields],
        }
    return s.kind
