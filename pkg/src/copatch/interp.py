"""Reference AST interpreter: the differential-testing oracle.

Semantics are observationally identical to generated code: two's-complement
wrapping arithmetic, C-style truncating division with the INT_MIN/-1 wrap,
traps for integer division by zero and frame-pool exhaustion, and the same
external-call argument-block protocol with error-flag unwinding.
"""

from __future__ import annotations

import ctypes
from dataclasses import dataclass

from .keyspace import (
    ERR_EXTERNAL,
    ERR_OK,
    FRAME_ACTIVATION_CHARGE,
    TRAP_DIV_BY_ZERO,
    TRAP_FRAME_OVERFLOW,
)
from .lang import (
    ArrayIndex,
    Assign,
    Binary,
    BinOp,
    Block,
    Call,
    CmpOp,
    Compare,
    Declare,
    ExprStmt,
    ExternalCall,
    Function,
    If,
    Literal,
    Module,
    Return,
    TypedModule,
    ValueType,
    VarRef,
    While,
    bits_to_value,
    canonical_bits,
)

DEFAULT_POOL_SIZE = 1 << 20

_TRAP_NAMES = {TRAP_DIV_BY_ZERO: "div_by_zero", TRAP_FRAME_OVERFLOW: "frame_overflow"}


@dataclass
class InvokeResult:
    value: object  # Python number per the return type; None for void
    bits: int  # canonical 64-bit payload of the value
    error: int  # ERR_OK / ERR_EXTERNAL / TRAP_*

    @property
    def error_flag(self) -> bool:
        return self.error == ERR_EXTERNAL

    @property
    def trap(self) -> str | None:
        return _TRAP_NAMES.get(self.error)

    def key(self) -> tuple[int, int]:
        """Comparison key for differential testing (bit-exact, NaN-safe)."""
        return (self.bits if self.error == ERR_OK else 0, self.error)


class Trap(Exception):
    def __init__(self, code: int):
        super().__init__(_TRAP_NAMES.get(code, f"error {code}"))
        self.code = code


class _Returned(Exception):
    def __init__(self, value):
        self.value = value


_MASK32 = (1 << 32) - 1
_MASK64 = (1 << 64) - 1


def _wrap32(v: int) -> int:
    v &= _MASK32
    return v - (1 << 32) if v & (1 << 31) else v


def _wrap64(v: int) -> int:
    v &= _MASK64
    return v - (1 << 64) if v & (1 << 63) else v


def _idiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def interpret(
    module: TypedModule | Module,
    fn_name: str,
    args,
    externals=None,
    pool_size: int = DEFAULT_POOL_SIZE,
    frame_costs=None,
) -> InvokeResult:
    """Run `fn_name(*args)` under the reference semantics.

    `frame_costs` optionally maps function name to (frame-size, advance)
    bytes so the frame-overflow trap fires at exactly the same depth as
    compiled code; the default charges a slot-count estimate. Recursion
    deeper than CPython's stack allows raises RecursionError instead of
    trapping; trap-parity tests use small pools.
    """
    mod = module.module if isinstance(module, TypedModule) else module
    interp = _Interp(mod, externals or {}, pool_size, frame_costs)
    fn = mod.function(fn_name)
    if len(args) != len(fn.params):
        raise ValueError(f"{fn_name} expects {len(fn.params)} args")
    coerced = [
        bits_to_value(canonical_bits(a, ty), ty) for a, ty in zip(args, fn.params)
    ]
    try:
        value = interp.call(fn, coerced)
    except Trap as t:
        return InvokeResult(None, 0, t.code)
    if fn.ret is None:
        return InvokeResult(None, 0, ERR_OK)
    return InvokeResult(value, canonical_bits(value, fn.ret), ERR_OK)


class _Interp:
    def __init__(self, mod: Module, externals, pool_size, frame_costs):
        self.mod = mod
        self.externals = externals
        self.pool_size = pool_size
        self.frame_costs = frame_costs
        self.pool_used = 0

    def frame_cost(self, fn: Function) -> tuple[int, int]:
        if self.frame_costs is not None:
            return self.frame_costs[fn.name]
        size = 8 * fn.nslots
        return size, size + FRAME_ACTIVATION_CHARGE

    def call(self, fn: Function, args):
        size, advance = self.frame_cost(fn)
        if self.pool_used + size > self.pool_size:
            raise Trap(TRAP_FRAME_OVERFLOW)
        self.pool_used += advance
        frame = args + [0] * len(fn.locals)
        try:
            self.stmts(fn.body, frame)
        except _Returned as r:
            return r.value
        finally:
            self.pool_used -= advance
        return None  # void fall-through

    # -- statements --

    def stmts(self, body, frame):
        for s in body:
            self.stmt(s, frame)

    def stmt(self, s, frame):
        kind = type(s)
        if kind is Declare:
            if s.init is not None:
                frame[s.index] = self.eval(s.init, frame)
        elif kind is Assign:
            value = None
            if isinstance(s.target, VarRef):
                frame[s.target.index] = self.eval(s.value, frame)
            else:
                t: ArrayIndex = s.target
                base = self.eval(t.base, frame)
                index = self.eval(t.index, frame)
                value = self.eval(s.value, frame)
                _mem_store(base, index, t.elem, value)
        elif kind is If:
            if self.eval(s.cond, frame):
                self.stmts(s.then, frame)
            else:
                self.stmts(s.orelse, frame)
        elif kind is While:
            while self.eval(s.cond, frame):
                self.stmts(s.body, frame)
        elif kind is Return:
            raise _Returned(None if s.value is None else self.eval(s.value, frame))
        elif kind is ExprStmt:
            self.eval(s.value, frame)
        elif kind is Block:
            self.stmts(s.body, frame)
        else:
            raise TypeError(f"cannot interpret {kind.__name__}")

    # -- expressions --

    def eval(self, e, frame):
        kind = type(e)
        if kind is Literal:
            return bits_to_value(e.bits, e.ty)
        if kind is VarRef:
            return frame[e.index]
        if kind is Binary:
            a = self.eval(e.lhs, frame)
            b = self.eval(e.rhs, frame)
            return _binop(e.op, a, b, e.ty)
        if kind is Compare:
            a = self.eval(e.lhs, frame)
            b = self.eval(e.rhs, frame)
            return 1 if _CMP_FN[e.op](a, b) else 0
        if kind is Call:
            args = [self.eval(a, frame) for a in e.args]
            return self.call(self.mod.functions[e.callee], args)
        if kind is ExternalCall:
            return self.external(e, frame)
        if kind is ArrayIndex:
            base = self.eval(e.base, frame)
            index = self.eval(e.index, frame)
            return _mem_load(base, index, e.elem)
        raise TypeError(f"cannot interpret {kind.__name__}")

    def external(self, e: ExternalCall, frame):
        fn = self.externals.get(e.symbol)
        if fn is None:
            raise KeyError(f"external {e.symbol!r} not registered")
        decl = next(d for d in self.mod.externs if d.name == e.symbol)
        block = [0] * max(1, len(e.args))
        for i, (a, ty) in enumerate(zip(e.args, decl.params)):
            block[i] = canonical_bits(self.eval(a, frame), ty)
        if fn(block):
            raise Trap(ERR_EXTERNAL)
        if decl.ret is None:
            return 0
        return bits_to_value(block[0], decl.ret)


def _binop(op, a, b, ty: ValueType):
    if ty is ValueType.F64:
        if op is BinOp.ADD:
            return a + b
        if op is BinOp.SUB:
            return a - b
        return a * b
    wrap = _wrap32 if ty is ValueType.I32 else _wrap64
    if op is BinOp.ADD:
        return wrap(a + b)
    if op is BinOp.SUB:
        return wrap(a - b)
    if op is BinOp.MUL:
        return wrap(a * b)
    if b == 0:
        raise Trap(TRAP_DIV_BY_ZERO)
    # 64-bit two's complement: INT_MIN / -1 wraps, INT_MIN % -1 is 0
    if op is BinOp.DIV:
        if ty is ValueType.I64 and b == -1:
            return wrap(-a)
        return wrap(_idiv(a, b))
    if ty is ValueType.I64 and b == -1:
        return 0
    return wrap(a - _idiv(a, b) * b)


_CMP_FN = {
    CmpOp.EQ: lambda a, b: a == b,
    CmpOp.NE: lambda a, b: a != b,
    CmpOp.LT: lambda a, b: a < b,
    CmpOp.LE: lambda a, b: a <= b,
    CmpOp.GT: lambda a, b: a > b,
    CmpOp.GE: lambda a, b: a >= b,
}


_CELL = {
    ValueType.I32: (4, ctypes.c_int32),
    ValueType.I64: (8, ctypes.c_int64),
    ValueType.F64: (8, ctypes.c_double),
    ValueType.BOOL: (1, ctypes.c_uint8),
}


def _mem_load(base: int, index: int, elem: ValueType):
    size, cell = _CELL[elem]
    return cell.from_address(base + index * size).value


def _mem_store(base: int, index: int, elem: ValueType, value):
    size, cell = _CELL[elem]
    if elem is ValueType.BOOL:
        value &= 0xFF
    cell.from_address(base + index * size).value = value
