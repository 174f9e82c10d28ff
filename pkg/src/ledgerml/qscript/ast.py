"""AST node types. Nodes are frozen; a parsed contract is immutable and
safe to share between executions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..values import Value


@dataclass(frozen=True)
class Lit:
    value: Value
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Name:
    id: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Field:
    base: "Expr"
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Index:
    base: "Expr"
    index: "Expr"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ListLit:
    items: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RecLit:
    pairs: tuple  # ((name, Expr), ...)
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


Expr = Lit | Name | Unary | Binary | Call | Field | Index | ListLit | RecLit


@dataclass(frozen=True)
class Let:
    name: str
    expr: Expr
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assign:
    name: str
    expr: Expr
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple
    orelse: tuple  # empty tuple when no else branch
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


Stmt = Let | Assign | If | While | ExprStmt


@dataclass(frozen=True)
class ContractAst:
    constants: tuple  # ((name, Value), ...)
    params: tuple  # five parameter names
    body: tuple  # statements
