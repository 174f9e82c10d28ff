"""Step-metered tree-walking interpreter.

Evaluation is strictly eager and left-to-right. Every statement and every
expression node costs one step; byte-shaped work (storage, logs, model
parsing) costs one step per started 16 bytes. Exceeding the step limit,
or any runtime fault, aborts the execution: the outcome carries the
reason and the partial logs, and the caller discards all effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import fixedpoint
from ..detmath import NumericFaultError
from ..values import (
    NONE,
    INT_MAX,
    INT_MIN,
    EncodingError,
    VBool,
    VBytes,
    VDbl,
    VDec,
    VInt,
    VList,
    VModel,
    VRec,
    VStr,
    Value,
    encode_value,
    render,
)
from .ast import (
    Assign,
    Binary,
    Call,
    ContractAst,
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

DEFAULT_STEP_LIMIT = 1_000_000
MAX_STORAGE_KEY_BYTES = 256
MAX_STORAGE_VALUE_BYTES = 64 * 1024
MAX_LOG_BYTES = 4 * 1024
MAX_DATA_BYTES = 256 * 1024


class AbortError(Exception):
    """Raised inside an execution; always caught at the execute_receive
    boundary and turned into an Aborted outcome."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class StepMeter:
    def __init__(self, limit: int = DEFAULT_STEP_LIMIT):
        self.used = 0
        self.limit = limit

    def charge(self, n: int = 1) -> None:
        if self.used + n > self.limit:
            self.used = self.limit
            raise AbortError("StepLimit")
        self.used += n


def byte_cost(n_bytes: int) -> int:
    """One step per started 16 bytes."""
    return (n_bytes + 15) // 16


@dataclass
class PendingSend:
    receiver: int
    action: int
    coins: int  # raw fixed-point
    asset: tuple[str, int] | None
    data: bytes


class LedgerView:
    """Read-only balance view the host hands to an execution. Concrete
    implementations wrap the in-flight working state."""

    def coin_balance(self, account_id: int) -> int:
        raise NotImplementedError

    def asset_balance(self, account_id: int, asset_id: str) -> int:
        raise NotImplementedError

    def committed_storage(self, account_id: int, key: str) -> Value | None:
        raise NotImplementedError

    def account_exists(self, account_id: int) -> bool:
        raise NotImplementedError


@dataclass
class HostContext:
    self_account: int
    view: LedgerView
    meter: StepMeter
    pending_sends: list[PendingSend] = field(default_factory=list)
    storage_overlay: dict[str, Value] = field(default_factory=dict)
    logs: list[str] = field(default_factory=list)
    models: list = field(default_factory=list)  # parsed model documents
    _coins_out: int = 0
    _assets_out: dict[str, int] = field(default_factory=dict)

    # -- host interface --

    def host_send(self, receiver: Value, action: Value, coins: Value,
                  asset: Value, data: Value) -> Value:
        if not isinstance(receiver, VInt) or receiver.v < 0:
            raise AbortError("InvalidSend", "receiver must be a non-negative Int")
        if receiver.v == 0:
            raise AbortError("InvalidSend", "contracts cannot send to the system account")
        if not isinstance(action, VInt) or not -(2**31) <= action.v < 2**31:
            raise AbortError("InvalidSend", "action must fit a 32-bit Int")
        if not isinstance(coins, VDec) or coins.raw < 0:
            raise AbortError("InvalidSend", "coins must be a non-negative Dec")
        if not isinstance(data, VBytes):
            raise AbortError("InvalidSend", "data must be Bytes")
        if len(data.v) > MAX_DATA_BYTES:
            raise AbortError("InvalidSend", "data exceeds 256 KiB")
        asset_pair: tuple[str, int] | None = None
        if asset != NONE:
            if not isinstance(asset, VRec):
                raise AbortError("InvalidSend", "asset must be none or {assetId, amount}")
            aid = asset.get("assetId")
            amt = asset.get("amount")
            if (
                len(asset.fields) != 2
                or not isinstance(aid, VStr)
                or not isinstance(amt, VDec)
                or amt.raw < 0
            ):
                raise AbortError("InvalidSend", "asset must be none or {assetId, amount}")
            asset_pair = (aid.v, amt.raw)

        new_out = self._coins_out + coins.raw
        if new_out > self.view.coin_balance(self.self_account):
            raise AbortError("OverSpend", "cumulative coin outflow exceeds balance")
        if asset_pair is not None:
            aid, amt = asset_pair
            new_asset_out = self._assets_out.get(aid, 0) + amt
            if new_asset_out > self.view.asset_balance(self.self_account, aid):
                raise AbortError("OverSpend", f"cumulative {aid} outflow exceeds balance")
            self._assets_out[aid] = new_asset_out
        self._coins_out = new_out
        self.meter.charge(byte_cost(len(data.v)))
        self.pending_sends.append(
            PendingSend(receiver.v, action.v, coins.raw, asset_pair, data.v)
        )
        return NONE

    def host_put(self, key: Value, value: Value) -> Value:
        if not isinstance(key, VStr) or not key.v:
            raise AbortError("TypeFault", "storage key must be a nonempty Str")
        kb = key.v.encode("utf-8")
        if len(kb) > MAX_STORAGE_KEY_BYTES:
            raise AbortError("KeyTooLong", f"{len(kb)} bytes")
        try:
            enc = encode_value(value)
        except EncodingError as e:
            raise AbortError("TypeFault", str(e)) from None
        if len(enc) > MAX_STORAGE_VALUE_BYTES:
            raise AbortError("ValueTooLarge", f"{len(enc)} bytes")
        self.meter.charge(byte_cost(len(kb) + len(enc)))
        self.storage_overlay[key.v] = value
        return NONE

    def host_get(self, key: Value) -> Value:
        if not isinstance(key, VStr) or not key.v:
            raise AbortError("TypeFault", "storage key must be a nonempty Str")
        if key.v in self.storage_overlay:
            val = self.storage_overlay[key.v]
        else:
            committed = self.view.committed_storage(self.self_account, key.v)
            val = committed if committed is not None else NONE
        if val != NONE:
            self.meter.charge(byte_cost(len(encode_value(val))))
        return val

    def host_log(self, message: Value) -> Value:
        if not isinstance(message, VStr):
            raise AbortError("TypeFault", "log takes a Str")
        mb = message.v.encode("utf-8")
        if len(mb) > MAX_LOG_BYTES:
            raise AbortError("MessageTooLong", f"{len(mb)} bytes")
        self.meter.charge(byte_cost(len(mb)))
        self.logs.append(message.v)
        return NONE

    def host_create_model(self, lang: Value, definition: Value) -> Value:
        from ..pfa import PfaError, parse_pfa

        if not isinstance(lang, VStr) or not isinstance(definition, VStr):
            raise AbortError("TypeFault", "createModel takes (Str, Str)")
        if lang.v != "PFA":
            raise AbortError("UnsupportedModelLanguage", lang.v)
        self.meter.charge(byte_cost(len(definition.v.encode("utf-8"))))
        try:
            doc = parse_pfa(definition.v)
        except PfaError as e:
            raise AbortError("ModelParseError", str(e)) from None
        self.models.append(doc)
        return VModel(len(self.models) - 1)

    def host_score(self, model: Value, data: Value) -> Value:
        from ..pfa import PfaEvalError, evaluate

        if not isinstance(model, VModel) or not 0 <= model.handle < len(self.models):
            raise AbortError("BadModelHandle")
        doc = self.models[model.handle]
        try:
            result = evaluate(doc, data, charge=self.meter.charge)
        except AbortError:
            raise
        except NumericFaultError as e:
            raise AbortError("NumericFault", e.detail) from None
        except PfaEvalError as e:
            if e.kind == "NumericFault":
                raise AbortError("NumericFault", e.message) from None
            raise AbortError("InputSchemaMismatch", str(e)) from None
        if isinstance(result, VDbl):
            return VRec((("prediction", result),))
        if isinstance(result, VRec) and isinstance(result.get("prediction"), VDbl):
            return result
        raise AbortError("TypeFault", "model output carries no prediction field")


@dataclass(frozen=True)
class ExecutionOutcome:
    committed: bool
    reason: str | None
    detail: str
    pending_sends: tuple
    storage_overlay: tuple  # ((key, Value), ...) sorted by key
    logs: tuple
    steps_used: int


class _Env:
    __slots__ = ("scopes",)

    def __init__(self, base: dict):
        self.scopes = [base]

    def push(self):
        self.scopes.append({})

    def pop(self):
        self.scopes.pop()

    def lookup(self, name: str) -> Value:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise AbortError("TypeFault", f"unbound {name!r}")  # unreachable post-parse

    def declare(self, name: str, value: Value):
        self.scopes[-1][name] = value

    def assign(self, name: str, value: Value):
        for scope in reversed(self.scopes):
            if name in scope:
                scope[name] = value
                return
        raise AbortError("TypeFault", f"unbound {name!r}")  # unreachable post-parse


def execute_receive(
    ast: ContractAst,
    ctx: HostContext,
    sender: int,
    action: int,
    coins: int,
    asset: tuple[str, int] | None,
    data: bytes,
) -> ExecutionOutcome:
    """Run the handler. Never raises for in-contract faults; everything
    becomes an Aborted outcome. The meter in ctx must be fresh."""
    asset_value: Value = NONE
    if asset is not None:
        asset_value = VRec((("assetId", VStr(asset[0])), ("amount", VDec(asset[1]))))
    base = dict(ast.constants)
    base[ast.params[0]] = VInt(sender)
    base[ast.params[1]] = VInt(action)
    base[ast.params[2]] = VDec(coins)
    base[ast.params[3]] = asset_value
    base[ast.params[4]] = VBytes(data)
    env = _Env(base)
    interp = _Interp(ctx)
    try:
        interp.run_block(ast.body, env)
    except AbortError as e:
        return ExecutionOutcome(
            committed=False,
            reason=e.reason,
            detail=e.detail,
            pending_sends=(),
            storage_overlay=(),
            logs=tuple(ctx.logs),
            steps_used=ctx.meter.used,
        )
    overlay = tuple(sorted(ctx.storage_overlay.items(), key=lambda kv: kv[0].encode("utf-8")))
    return ExecutionOutcome(
        committed=True,
        reason=None,
        detail="",
        pending_sends=tuple(ctx.pending_sends),
        storage_overlay=overlay,
        logs=tuple(ctx.logs),
        steps_used=ctx.meter.used,
    )


class _Interp:
    def __init__(self, ctx: HostContext):
        self.ctx = ctx
        self.meter = ctx.meter

    def run_block(self, stmts: tuple, env: _Env):
        env.push()
        try:
            for s in stmts:
                self.run_stmt(s, env)
        finally:
            env.pop()

    def run_stmt(self, s, env: _Env):
        self.meter.charge(1)
        if isinstance(s, Let):
            env.declare(s.name, self.eval(s.expr, env))
        elif isinstance(s, Assign):
            env.assign(s.name, self.eval(s.expr, env))
        elif isinstance(s, If):
            cond = self.eval(s.cond, env)
            if not isinstance(cond, VBool):
                raise AbortError("TypeFault", "if condition must be Bool")
            if cond.v:
                self.run_block(s.then, env)
            elif s.orelse:
                self.run_block(s.orelse, env)
        elif isinstance(s, While):
            while True:
                self.meter.charge(1)
                cond = self.eval(s.cond, env)
                if not isinstance(cond, VBool):
                    raise AbortError("TypeFault", "while condition must be Bool")
                if not cond.v:
                    break
                self.run_block(s.body, env)
        elif isinstance(s, ExprStmt):
            self.eval(s.expr, env)
        else:
            raise AssertionError(s)

    def eval(self, e, env: _Env) -> Value:
        self.meter.charge(1)
        if isinstance(e, Lit):
            return e.value
        if isinstance(e, Name):
            return env.lookup(e.id)
        if isinstance(e, Unary):
            return self._unary(e.op, self.eval(e.operand, env))
        if isinstance(e, Binary):
            if e.op == "&&" or e.op == "||":
                left = self.eval(e.left, env)
                if not isinstance(left, VBool):
                    raise AbortError("TypeFault", f"{e.op} needs Bool operands")
                if e.op == "&&" and not left.v:
                    return VBool(False)
                if e.op == "||" and left.v:
                    return VBool(True)
                right = self.eval(e.right, env)
                if not isinstance(right, VBool):
                    raise AbortError("TypeFault", f"{e.op} needs Bool operands")
                return right
            return self._binary(e.op, self.eval(e.left, env), self.eval(e.right, env))
        if isinstance(e, Call):
            args = [self.eval(a, env) for a in e.args]
            return self._call(e.fn, args)
        if isinstance(e, Field):
            base = self.eval(e.base, env)
            if not isinstance(base, VRec):
                raise AbortError("TypeFault", f"field access on non-record ({e.name})")
            v = base.get(e.name)
            if v is None:
                raise AbortError("TypeFault", f"record has no field {e.name!r}")
            return v
        if isinstance(e, Index):
            base = self.eval(e.base, env)
            idx = self.eval(e.index, env)
            if not isinstance(idx, VInt):
                raise AbortError("TypeFault", "index must be Int")
            self.meter.charge(1)  # element touch
            if isinstance(base, VList):
                if not 0 <= idx.v < len(base.items):
                    raise AbortError("IndexOutOfRange", str(idx.v))
                return base.items[idx.v]
            if isinstance(base, VBytes):
                if not 0 <= idx.v < len(base.v):
                    raise AbortError("IndexOutOfRange", str(idx.v))
                return VInt(base.v[idx.v])
            raise AbortError("TypeFault", "indexing needs a List or Bytes")
        if isinstance(e, ListLit):
            items = []
            for item in e.items:
                self.meter.charge(1)  # element touch
                items.append(self.eval(item, env))
            return VList(tuple(items))
        if isinstance(e, RecLit):
            pairs = []
            for k, v in e.pairs:
                pairs.append((k, self.eval(v, env)))
            return VRec(tuple(pairs))
        raise AssertionError(e)

    def _unary(self, op: str, v: Value) -> Value:
        if op == "-":
            if isinstance(v, VInt):
                r = -v.v
                if not INT_MIN <= r <= INT_MAX:
                    raise AbortError("NumericFault", "Int overflow")
                return VInt(r)
            if isinstance(v, VDec):
                try:
                    return VDec(fixedpoint.check_range(-v.raw))
                except fixedpoint.FixedPointError:
                    raise AbortError("NumericFault", "Dec overflow") from None
            if isinstance(v, VDbl):
                return VDbl(-v.v)
            raise AbortError("TypeFault", "unary - needs Int, Dec, or Dbl")
        if op == "!":
            if isinstance(v, VBool):
                return VBool(not v.v)
            raise AbortError("TypeFault", "! needs Bool")
        raise AssertionError(op)

    def _binary(self, op: str, a: Value, b: Value) -> Value:
        if op == "==":
            return VBool(a == b)
        if op == "!=":
            return VBool(a != b)
        if op in ("<", "<=", ">", ">="):
            return self._compare(op, a, b)
        if op in ("+", "-", "*", "/", "%"):
            return self._arith(op, a, b)
        raise AssertionError(op)

    def _compare(self, op: str, a: Value, b: Value) -> Value:
        pair_ok = (
            (isinstance(a, VInt) and isinstance(b, VInt))
            or (isinstance(a, VDec) and isinstance(b, VDec))
            or (isinstance(a, VDbl) and isinstance(b, VDbl))
            or (isinstance(a, VStr) and isinstance(b, VStr))
            or (isinstance(a, VBytes) and isinstance(b, VBytes))
        )
        if not pair_ok:
            raise AbortError("TypeFault", f"{op} needs matching comparable kinds")
        x = a.raw if isinstance(a, VDec) else a.v
        y = b.raw if isinstance(b, VDec) else b.v
        if op == "<":
            return VBool(x < y)
        if op == "<=":
            return VBool(x <= y)
        if op == ">":
            return VBool(x > y)
        return VBool(x >= y)

    def _arith(self, op: str, a: Value, b: Value) -> Value:
        # Str + Str: concatenation
        if op == "+" and isinstance(a, VStr) and isinstance(b, VStr):
            return VStr(a.v + b.v)
        if isinstance(a, VInt) and isinstance(b, VInt):
            return self._int_arith(op, a.v, b.v)
        if isinstance(a, VDec) and isinstance(b, VDec):
            if op == "+":
                return self._dec(fixedpoint.add, a.raw, b.raw)
            if op == "-":
                return self._dec(fixedpoint.sub, a.raw, b.raw)
            raise AbortError("TypeFault", f"Dec {op} Dec is not defined")
        # Dec scaled by Int: multiplication (either order) and division
        if isinstance(a, VDec) and isinstance(b, VInt):
            if op == "*":
                return self._dec(fixedpoint.mul_int, a.raw, b.v)
            if op == "/":
                if b.v == 0:
                    raise AbortError("DivisionByZero")
                return self._dec(fixedpoint.div_int, a.raw, b.v)
            raise AbortError("TypeFault", f"Dec {op} Int is not defined")
        if isinstance(a, VInt) and isinstance(b, VDec) and op == "*":
            return self._dec(fixedpoint.mul_int, b.raw, a.v)
        if isinstance(a, VDbl) and isinstance(b, VDbl):
            return self._dbl_arith(op, a.v, b.v)
        raise AbortError(
            "TypeFault",
            f"{op} is not defined for this operand kind pairing (no implicit coercion)",
        )

    @staticmethod
    def _dec(fn, x, y) -> Value:
        try:
            return VDec(fn(x, y))
        except fixedpoint.FixedPointError:
            raise AbortError("NumericFault", "Dec overflow") from None

    @staticmethod
    def _int_arith(op: str, x: int, y: int) -> Value:
        if op == "+":
            r = x + y
        elif op == "-":
            r = x - y
        elif op == "*":
            r = x * y
        elif op == "/":
            if y == 0:
                raise AbortError("DivisionByZero")
            r = abs(x) // abs(y)
            if (x < 0) != (y < 0):
                r = -r
        else:  # %
            if y == 0:
                raise AbortError("DivisionByZero")
            q = abs(x) // abs(y)
            if (x < 0) != (y < 0):
                q = -q
            r = x - q * y
        if not INT_MIN <= r <= INT_MAX:
            raise AbortError("NumericFault", "Int overflow")
        return VInt(r)

    @staticmethod
    def _dbl_arith(op: str, x: float, y: float) -> Value:
        if op == "+":
            r = x + y
        elif op == "-":
            r = x - y
        elif op == "*":
            r = x * y
        elif op == "/":
            if y == 0.0:
                raise AbortError("DivisionByZero")
            r = x / y
        else:
            raise AbortError("TypeFault", "% is not defined for Dbl")
        if r != r or r in (float("inf"), float("-inf")):
            raise AbortError("NumericFault", "Dbl produced a non-finite value")
        return VDbl(r)

    def _call(self, fn: str, args: list[Value]) -> Value:
        if fn == "str":
            return VStr(render(args[0]))
        if fn == "len":
            v = args[0]
            if isinstance(v, VList):
                return VInt(len(v.items))
            if isinstance(v, VBytes):
                return VInt(len(v.v))
            if isinstance(v, VStr):
                return VInt(len(v.v.encode("utf-8")))
            raise AbortError("TypeFault", "len needs List, Bytes, or Str")
        ctx = self.ctx
        if fn == "send":
            return ctx.host_send(*args)
        if fn == "put":
            return ctx.host_put(*args)
        if fn == "get":
            return ctx.host_get(*args)
        if fn == "log":
            return ctx.host_log(*args)
        if fn == "createModel":
            return ctx.host_create_model(*args)
        if fn == "score":
            return ctx.host_score(*args)
        raise AssertionError(fn)  # unreachable post-parse
