"""Recursive-descent parser with a static binding pass.

Everything a deployed contract can name is resolved here: a reference
that is not a constant, a handler parameter, a prior let, or a host/pure
function is a deploy-time error, so execution can never hit an unbound
identifier.
"""

from __future__ import annotations

from .. import fixedpoint
from ..values import (
    NONE,
    INT_MAX,
    INT_MIN,
    VBool,
    VBytes,
    VDbl,
    VDec,
    VInt,
    VList,
    VRec,
    VStr,
    Value,
)
from .ast import (
    Assign,
    Binary,
    Call,
    ContractAst,
    Expr,
    ExprStmt,
    Field,
    If,
    Index,
    Let,
    ListLit,
    Lit,
    Name,
    RecLit,
    Unary,
    While,
)
from .lexer import LexError, Token, tokenize

# Callable names. These are reserved: they cannot be shadowed by lets,
# params, or constants.
HOST_FUNCTIONS = {
    "send": 5,
    "put": 2,
    "get": 1,
    "log": 1,
    "createModel": 2,
    "score": 2,
}
PURE_FUNCTIONS = {"str": 1, "len": 1}
RESERVED = set(HOST_FUNCTIONS) | set(PURE_FUNCTIONS)

PARAM_COUNT = 5


class ParseError(ValueError):
    def __init__(self, kind: str, msg: str, line: int, col: int):
        super().__init__(f"{kind}: {msg} at {line}:{col}")
        self.kind = kind
        self.msg = msg
        self.line = line
        self.col = col


class _Parser:
    def __init__(self, src: str):
        try:
            self.toks = tokenize(src)
        except LexError as e:
            raise ParseError("LexError", e.msg, e.line, e.col) from None
        self.pos = 0

    @property
    def cur(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def err(self, msg: str, tok: Token | None = None, kind: str = "SyntaxError"):
        t = tok or self.cur
        raise ParseError(kind, msg, t.line, t.col)

    def expect_punct(self, p: str) -> Token:
        t = self.cur
        if t.kind != "PUNCT" or t.text != p:
            self.err(f"expected {p!r}, found {t.text!r}" if t.text else f"expected {p!r}, found end of input")
        return self.advance()

    def expect_keyword(self, kw: str) -> Token:
        t = self.cur
        if t.kind != "KEYWORD" or t.text != kw:
            self.err(f"expected {kw!r}")
        return self.advance()

    def expect_ident(self) -> Token:
        t = self.cur
        if t.kind != "IDENT":
            self.err("expected identifier")
        return self.advance()

    def at_punct(self, p: str) -> bool:
        return self.cur.kind == "PUNCT" and self.cur.text == p

    def at_keyword(self, kw: str) -> bool:
        return self.cur.kind == "KEYWORD" and self.cur.text == kw

    # ---- top level ----

    def contract(self) -> ContractAst:
        constants: list[tuple[str, Value]] = []
        const_names: set[str] = set()
        while self.at_keyword("const"):
            self.advance()
            name_tok = self.expect_ident()
            name = name_tok.text
            if name in RESERVED:
                self.err(f"{name!r} is a reserved function name", name_tok)
            if name in const_names:
                self.err(f"duplicate constant {name!r}", name_tok)
            self.expect_punct("=")
            value = self.literal_value()
            self.expect_punct(";")
            constants.append((name, value))
            const_names.add(name)
        if not self.at_keyword("on"):
            self.err("expected 'on receive' handler")
        self.advance()
        self.expect_keyword("receive")
        self.expect_punct("(")
        params: list[str] = []
        if not self.at_punct(")"):
            while True:
                ptok = self.expect_ident()
                if ptok.text in RESERVED:
                    self.err(f"{ptok.text!r} is a reserved function name", ptok)
                if ptok.text in params or ptok.text in const_names:
                    self.err(f"duplicate name {ptok.text!r}", ptok)
                params.append(ptok.text)
                if self.at_punct(","):
                    self.advance()
                    continue
                break
        self.expect_punct(")")
        if len(params) != PARAM_COUNT:
            self.err(f"receive takes exactly {PARAM_COUNT} parameters, got {len(params)}")
        body = self.block()
        if self.at_keyword("on"):
            self.err("duplicate receive handler", kind="DuplicateHandler")
        if self.cur.kind != "EOF":
            self.err(f"unexpected {self.cur.text!r} after handler")
        ast = ContractAst(tuple(constants), tuple(params), body)
        _check_bindings(ast)
        return ast

    # ---- literals (const initializers) ----

    def literal_value(self) -> Value:
        t = self.cur
        neg = False
        if t.kind == "PUNCT" and t.text == "-":
            self.advance()
            neg = True
            t = self.cur
        if t.kind == "INT":
            self.advance()
            return VInt(self._int_value(t, neg))
        if t.kind == "DEC":
            self.advance()
            return VDec(self._dec_value(t, neg))
        if t.kind == "DBL":
            self.advance()
            return VDbl(self._dbl_value(t, neg))
        if neg:
            self.err("expected numeric literal after '-'")
        if t.kind == "STR":
            self.advance()
            return VStr(t.text)
        if t.kind == "KEYWORD" and t.text in ("true", "false"):
            self.advance()
            return VBool(t.text == "true")
        if t.kind == "KEYWORD" and t.text == "none":
            self.advance()
            return NONE
        if t.kind == "KEYWORD" and t.text == "empty":
            self.advance()
            return VBytes(b"")
        if t.kind == "PUNCT" and t.text == "[":
            self.advance()
            items = []
            if not self.at_punct("]"):
                while True:
                    items.append(self.literal_value())
                    if self.at_punct(","):
                        self.advance()
                        continue
                    break
            self.expect_punct("]")
            return VList(tuple(items))
        if t.kind == "PUNCT" and t.text == "{":
            self.advance()
            pairs = []
            seen = set()
            if not self.at_punct("}"):
                while True:
                    k = self.expect_ident()
                    if k.text in seen:
                        self.err(f"duplicate field {k.text!r}", k)
                    seen.add(k.text)
                    self.expect_punct(":")
                    pairs.append((k.text, self.literal_value()))
                    if self.at_punct(","):
                        self.advance()
                        continue
                    break
            self.expect_punct("}")
            return VRec(tuple(pairs))
        self.err("expected literal")
        raise AssertionError  # unreachable

    def _int_value(self, t: Token, neg: bool) -> int:
        v = int(t.text)
        if neg:
            v = -v
        if v < INT_MIN or v > INT_MAX:
            self.err("integer literal out of 64-bit range", t)
        return v

    def _dec_value(self, t: Token, neg: bool) -> int:
        try:
            raw = fixedpoint.parse_dec(t.text)
        except fixedpoint.FixedPointError as e:
            self.err(str(e), t)
        return -raw if neg else raw

    def _dbl_value(self, t: Token, neg: bool) -> float:
        v = float(t.text)
        return -v if neg else v

    # ---- statements ----

    def block(self) -> tuple:
        self.expect_punct("{")
        stmts = []
        while not self.at_punct("}"):
            if self.cur.kind == "EOF":
                self.err("expected '}' before end of input")
            stmts.append(self.statement())
        self.expect_punct("}")
        return tuple(stmts)

    def statement(self):
        t = self.cur
        if self.at_keyword("let"):
            self.advance()
            name_tok = self.expect_ident()
            if name_tok.text in RESERVED:
                self.err(f"{name_tok.text!r} is a reserved function name", name_tok)
            self.expect_punct("=")
            e = self.expression()
            self.expect_punct(";")
            return Let(name_tok.text, e, t.line, t.col)
        if self.at_keyword("if"):
            self.advance()
            self.expect_punct("(")
            cond = self.expression()
            self.expect_punct(")")
            then = self.block()
            orelse: tuple = ()
            if self.at_keyword("else"):
                self.advance()
                if self.at_keyword("if"):
                    orelse = (self.statement(),)
                else:
                    orelse = self.block()
            return If(cond, then, orelse, t.line, t.col)
        if self.at_keyword("while"):
            self.advance()
            self.expect_punct("(")
            cond = self.expression()
            self.expect_punct(")")
            body = self.block()
            return While(cond, body, t.line, t.col)
        if t.kind == "IDENT" and self._peek_is_assign():
            name_tok = self.advance()
            self.expect_punct("=")
            e = self.expression()
            self.expect_punct(";")
            return Assign(name_tok.text, e, t.line, t.col)
        e = self.expression()
        self.expect_punct(";")
        return ExprStmt(e, t.line, t.col)

    def _peek_is_assign(self) -> bool:
        nxt = self.toks[self.pos + 1]
        return nxt.kind == "PUNCT" and nxt.text == "="

    # ---- expressions, C-like precedence ----

    def expression(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.at_punct("||"):
            t = self.advance()
            left = Binary("||", left, self.and_expr(), t.line, t.col)
        return left

    def and_expr(self) -> Expr:
        left = self.equality()
        while self.at_punct("&&"):
            t = self.advance()
            left = Binary("&&", left, self.equality(), t.line, t.col)
        return left

    def equality(self) -> Expr:
        left = self.relational()
        while self.cur.kind == "PUNCT" and self.cur.text in ("==", "!="):
            t = self.advance()
            left = Binary(t.text, left, self.relational(), t.line, t.col)
        return left

    def relational(self) -> Expr:
        left = self.additive()
        while self.cur.kind == "PUNCT" and self.cur.text in ("<", "<=", ">", ">="):
            t = self.advance()
            left = Binary(t.text, left, self.additive(), t.line, t.col)
        return left

    def additive(self) -> Expr:
        left = self.multiplicative()
        while self.cur.kind == "PUNCT" and self.cur.text in ("+", "-"):
            t = self.advance()
            left = Binary(t.text, left, self.multiplicative(), t.line, t.col)
        return left

    def multiplicative(self) -> Expr:
        left = self.unary()
        while self.cur.kind == "PUNCT" and self.cur.text in ("*", "/", "%"):
            t = self.advance()
            left = Binary(t.text, left, self.unary(), t.line, t.col)
        return left

    def unary(self) -> Expr:
        if self.at_punct("-"):
            t = self.advance()
            return Unary("-", self.unary(), t.line, t.col)
        if self.at_punct("!"):
            t = self.advance()
            return Unary("!", self.unary(), t.line, t.col)
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while True:
            if self.at_punct("."):
                t = self.advance()
                name_tok = self.expect_ident()
                e = Field(e, name_tok.text, t.line, t.col)
            elif self.at_punct("["):
                t = self.advance()
                idx = self.expression()
                self.expect_punct("]")
                e = Index(e, idx, t.line, t.col)
            else:
                return e

    def primary(self) -> Expr:
        t = self.cur
        if t.kind == "INT":
            self.advance()
            return Lit(VInt(self._int_value(t, False)), t.line, t.col)
        if t.kind == "DEC":
            self.advance()
            return Lit(VDec(self._dec_value(t, False)), t.line, t.col)
        if t.kind == "DBL":
            self.advance()
            return Lit(VDbl(self._dbl_value(t, False)), t.line, t.col)
        if t.kind == "STR":
            self.advance()
            return Lit(VStr(t.text), t.line, t.col)
        if t.kind == "KEYWORD" and t.text in ("true", "false"):
            self.advance()
            return Lit(VBool(t.text == "true"), t.line, t.col)
        if t.kind == "KEYWORD" and t.text == "none":
            self.advance()
            return Lit(NONE, t.line, t.col)
        if t.kind == "KEYWORD" and t.text == "empty":
            self.advance()
            return Lit(VBytes(b""), t.line, t.col)
        if t.kind == "IDENT":
            self.advance()
            if self.at_punct("("):
                self.advance()
                args = []
                if not self.at_punct(")"):
                    while True:
                        args.append(self.expression())
                        if self.at_punct(","):
                            self.advance()
                            continue
                        break
                self.expect_punct(")")
                return Call(t.text, tuple(args), t.line, t.col)
            return Name(t.text, t.line, t.col)
        if t.kind == "PUNCT" and t.text == "(":
            self.advance()
            e = self.expression()
            self.expect_punct(")")
            return e
        if t.kind == "PUNCT" and t.text == "[":
            self.advance()
            items = []
            if not self.at_punct("]"):
                while True:
                    items.append(self.expression())
                    if self.at_punct(","):
                        self.advance()
                        continue
                    break
            self.expect_punct("]")
            return ListLit(tuple(items), t.line, t.col)
        if t.kind == "PUNCT" and t.text == "{":
            self.advance()
            pairs = []
            seen = set()
            if not self.at_punct("}"):
                while True:
                    k = self.expect_ident()
                    if k.text in seen:
                        self.err(f"duplicate field {k.text!r}", k)
                    seen.add(k.text)
                    self.expect_punct(":")
                    pairs.append((k.text, self.expression()))
                    if self.at_punct(","):
                        self.advance()
                        continue
                    break
            self.expect_punct("}")
            return RecLit(tuple(pairs), t.line, t.col)
        self.err(f"unexpected {t.text!r}" if t.text else "unexpected end of input")
        raise AssertionError  # unreachable


def _check_bindings(ast: ContractAst) -> None:
    consts = {name for name, _ in ast.constants}

    def check_expr(e: Expr, scopes: list[set[str]]):
        if isinstance(e, Lit):
            return
        if isinstance(e, Name):
            if e.id in consts or any(e.id in s for s in scopes):
                return
            if e.id in RESERVED:
                raise ParseError(
                    "UnboundIdentifier",
                    f"{e.id!r} is a function, not a value",
                    e.line,
                    e.col,
                )
            raise ParseError("UnboundIdentifier", f"unbound identifier {e.id!r}", e.line, e.col)
        if isinstance(e, Unary):
            check_expr(e.operand, scopes)
            return
        if isinstance(e, Binary):
            check_expr(e.left, scopes)
            check_expr(e.right, scopes)
            return
        if isinstance(e, Call):
            if e.fn not in RESERVED:
                raise ParseError("UnboundIdentifier", f"unknown function {e.fn!r}", e.line, e.col)
            arity = HOST_FUNCTIONS.get(e.fn, PURE_FUNCTIONS.get(e.fn))
            if len(e.args) != arity:
                raise ParseError(
                    "SyntaxError",
                    f"{e.fn} takes {arity} arguments, got {len(e.args)}",
                    e.line,
                    e.col,
                )
            for a in e.args:
                check_expr(a, scopes)
            return
        if isinstance(e, Field):
            check_expr(e.base, scopes)
            return
        if isinstance(e, Index):
            check_expr(e.base, scopes)
            check_expr(e.index, scopes)
            return
        if isinstance(e, ListLit):
            for item in e.items:
                check_expr(item, scopes)
            return
        if isinstance(e, RecLit):
            for _, v in e.pairs:
                check_expr(v, scopes)
            return
        raise AssertionError(e)

    def check_block(stmts: tuple, scopes: list[set[str]]):
        scopes.append(set())
        for s in stmts:
            if isinstance(s, Let):
                check_expr(s.expr, scopes)
                if s.name in scopes[-1]:
                    raise ParseError(
                        "SyntaxError", f"duplicate let {s.name!r} in block", s.line, s.col
                    )
                if s.name in consts:
                    raise ParseError(
                        "SyntaxError", f"{s.name!r} shadows a constant", s.line, s.col
                    )
                scopes[-1].add(s.name)
            elif isinstance(s, Assign):
                if not any(s.name in sc for sc in scopes):
                    raise ParseError(
                        "UnboundIdentifier",
                        f"assignment to unbound {s.name!r}"
                        if s.name not in consts
                        else f"cannot assign to constant {s.name!r}",
                        s.line,
                        s.col,
                    )
                check_expr(s.expr, scopes)
            elif isinstance(s, If):
                check_expr(s.cond, scopes)
                check_block(s.then, scopes)
                check_block(s.orelse, scopes)
            elif isinstance(s, While):
                check_expr(s.cond, scopes)
                check_block(s.body, scopes)
            elif isinstance(s, ExprStmt):
                check_expr(s.expr, scopes)
            else:
                raise AssertionError(s)
        scopes.pop()

    check_block(ast.body, [set(ast.params)])


def parse_contract(source: str) -> ContractAst:
    """Parse and bind-check contract source. Raises ParseError with a
    deterministic (line, column) position on any failure."""
    return _Parser(source).contract()


# ---- pretty printer ----


def _print_str(s: str) -> str:
    raw_safe = "'''" not in s and not s.startswith("'") and not s.endswith("'")
    if ("\n" in s or '"' in s) and raw_safe:
        return "'''" + s + "'''"
    out = ['"']
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _print_value(v: Value) -> str:
    from ..values import render

    if isinstance(v, VStr):
        return _print_str(v.v)
    if isinstance(v, VDbl):
        return repr(v.v) + "d"
    if isinstance(v, VBytes) and not v.v:
        return "empty"
    if isinstance(v, VRec) and not v.fields:
        return "none"
    if isinstance(v, VList):
        return "[" + ", ".join(_print_value(x) for x in v.items) + "]"
    if isinstance(v, VRec):
        return "{" + ", ".join(f"{k}: {_print_value(x)}" for k, x in v.fields) + "}"
    return render(v)


def _print_expr(e: Expr) -> str:
    if isinstance(e, Lit):
        return _print_value(e.value)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Unary):
        return f"{e.op}({_print_expr(e.operand)})"
    if isinstance(e, Binary):
        return f"({_print_expr(e.left)} {e.op} {_print_expr(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(_print_expr(a) for a in e.args)})"
    if isinstance(e, Field):
        return f"{_print_expr(e.base)}.{e.name}"
    if isinstance(e, Index):
        return f"{_print_expr(e.base)}[{_print_expr(e.index)}]"
    if isinstance(e, ListLit):
        return "[" + ", ".join(_print_expr(x) for x in e.items) + "]"
    if isinstance(e, RecLit):
        return "{" + ", ".join(f"{k}: {_print_expr(v)}" for k, v in e.pairs) + "}"
    raise AssertionError(e)


def _print_block(stmts: tuple, indent: int) -> list[str]:
    pad = "    " * indent
    lines = []
    for s in stmts:
        if isinstance(s, Let):
            lines.append(f"{pad}let {s.name} = {_print_expr(s.expr)};")
        elif isinstance(s, Assign):
            lines.append(f"{pad}{s.name} = {_print_expr(s.expr)};")
        elif isinstance(s, If):
            lines.append(f"{pad}if ({_print_expr(s.cond)}) {{")
            lines.extend(_print_block(s.then, indent + 1))
            if s.orelse:
                lines.append(pad + "} else {")
                lines.extend(_print_block(s.orelse, indent + 1))
            lines.append(pad + "}")
        elif isinstance(s, While):
            lines.append(f"{pad}while ({_print_expr(s.cond)}) {{")
            lines.extend(_print_block(s.body, indent + 1))
            lines.append(pad + "}")
        elif isinstance(s, ExprStmt):
            lines.append(f"{pad}{_print_expr(s.expr)};")
        else:
            raise AssertionError(s)
    return lines


def pretty_print(ast: ContractAst) -> str:
    lines = []
    for name, value in ast.constants:
        lines.append(f"const {name} = {_print_value(value)};")
    if ast.constants:
        lines.append("")
    lines.append(f"on receive({', '.join(ast.params)}) {{")
    lines.extend(_print_block(ast.body, 1))
    lines.append("}")
    return "\n".join(lines) + "\n"
