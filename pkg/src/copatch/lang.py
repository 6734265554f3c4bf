"""Typed AST of the small C-like source language and its type checker.

Expressions carry a `ty` annotation that is filled in by `typecheck`. Locals
are pre-declared slots addressed by index (params first, then declared
locals); names only exist in the textual frontend. The checker also runs a
definite-assignment pass so that no program can observe an uninitialized
frame slot, which keeps interpreter and generated code observationally
identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum


class ValueType(Enum):
    I32 = "i32"
    I64 = "i64"
    F64 = "f64"
    BOOL = "bool"
    PTR = "ptr"


NUMERIC = (ValueType.I32, ValueType.I64, ValueType.F64)
INTEGRAL = (ValueType.I32, ValueType.I64)

# Element sizes inside arrays. Frame slots are always 8 bytes.
ELEM_SIZE = {
    ValueType.I32: 4,
    ValueType.I64: 8,
    ValueType.F64: 8,
    ValueType.BOOL: 1,
}


class BinOp(Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"
    MOD = "%"


class CmpOp(Enum):
    EQ = "=="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="


# ---------------------------------------------------------------------------
# expressions


@dataclass
class Expr:
    ty: ValueType | None = field(default=None, init=False, compare=False)


@dataclass
class Literal(Expr):
    """A constant. `bits` is the canonical 64-bit payload once typed.

    Untyped integer literals (no suffix) keep their Python value in `bits`
    until the checker resolves a type from context and canonicalizes.
    """

    bits: int

    @staticmethod
    def of(value, ty: ValueType) -> "Literal":
        lit = Literal(canonical_bits(value, ty))
        lit.ty = ty
        return lit


@dataclass
class VarRef(Expr):
    index: int


@dataclass
class Binary(Expr):
    op: BinOp
    lhs: Expr
    rhs: Expr


@dataclass
class Compare(Expr):
    op: CmpOp
    lhs: Expr
    rhs: Expr


@dataclass
class Call(Expr):
    name: str
    args: list[Expr]
    callee: int | None = None  # function index, resolved by parse or typecheck


@dataclass
class ExternalCall(Expr):
    symbol: str
    args: list[Expr]


@dataclass
class ArrayIndex(Expr):
    base: Expr
    index: Expr
    # element type, inferred from context by typecheck (an annotation, like
    # `ty`: excluded from structural equality)
    elem: ValueType | None = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# statements


class Stmt:
    pass


@dataclass
class Declare(Stmt):
    index: int
    ty: ValueType
    init: Expr | None


@dataclass
class Assign(Stmt):
    target: Expr  # VarRef or ArrayIndex
    value: Expr


@dataclass
class If(Stmt):
    cond: Expr
    then: list[Stmt]
    orelse: list[Stmt]


@dataclass
class While(Stmt):
    cond: Expr
    body: list[Stmt]


@dataclass
class Return(Stmt):
    value: Expr | None


@dataclass
class ExprStmt(Stmt):
    value: Expr


@dataclass
class Block(Stmt):
    body: list[Stmt]


# ---------------------------------------------------------------------------
# module


@dataclass
class Function:
    name: str
    params: list[ValueType]
    ret: ValueType | None
    locals: list[ValueType]  # declared locals, excluding params
    body: list[Stmt]

    @property
    def nslots(self) -> int:
        return len(self.params) + len(self.locals)

    def slot_type(self, index: int) -> ValueType:
        if index < len(self.params):
            return self.params[index]
        return self.locals[index - len(self.params)]


@dataclass
class ExternDecl:
    name: str
    params: list[ValueType]
    ret: ValueType | None


@dataclass
class Module:
    functions: list[Function] = field(default_factory=list)
    externs: list[ExternDecl] = field(default_factory=list)

    def function(self, name: str) -> Function:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)


@dataclass
class TypedModule:
    """A module whose expressions all carry resolved types."""

    module: Module

    @property
    def functions(self) -> list[Function]:
        return self.module.functions

    @property
    def externs(self) -> list[ExternDecl]:
        return self.module.externs

    def function(self, name: str) -> Function:
        return self.module.function(name)


# ---------------------------------------------------------------------------
# errors


class LangError(Exception):
    def __init__(self, msg: str, path: str = ""):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


class TypeMismatch(LangError):
    pass


class UndefinedLocal(LangError):
    pass


class UndefinedFunction(LangError):
    pass


class MissingReturn(LangError):
    pass


# ---------------------------------------------------------------------------
# value canonicalization

_I32_MIN, _I32_MAX = -(1 << 31), (1 << 31) - 1
_U64 = (1 << 64) - 1


def canonical_bits(value, ty: ValueType) -> int:
    """Encode a Python number as the canonical unsigned 64-bit payload.

    I32 values are stored sign-extended so that every frame slot and every
    register slot holds the same 64-bit pattern for a given value.
    """
    if ty is ValueType.F64:
        return struct.unpack("<Q", struct.pack("<d", float(value)))[0]
    if ty is ValueType.BOOL:
        return 1 if value else 0
    if ty is ValueType.I32:
        return (int(value) & 0xFFFFFFFF | (0xFFFFFFFF00000000 if int(value) & 0x80000000 else 0)) & _U64
    return int(value) & _U64


def bits_to_value(bits: int, ty: ValueType):
    """Decode a canonical 64-bit payload back to a Python number."""
    bits &= _U64
    if ty is ValueType.F64:
        return struct.unpack("<d", struct.pack("<Q", bits))[0]
    if ty is ValueType.BOOL:
        return bits & 1
    if ty is ValueType.PTR:
        return bits
    if bits & (1 << 63):
        return bits - (1 << 64)
    return bits


# ---------------------------------------------------------------------------
# type checker


def typecheck(module: Module) -> TypedModule:
    """Annotate every expression with its type; raise on ill-typed modules.

    Idempotent: re-checking an annotated module leaves it structurally
    unchanged.
    """
    seen: set[str] = set()
    for ext in module.externs:
        if ext.name in seen:
            raise TypeMismatch(f"duplicate symbol {ext.name!r}")
        seen.add(ext.name)
    fn_index = {}
    for i, fn in enumerate(module.functions):
        if fn.name in seen:
            raise TypeMismatch(f"duplicate symbol {fn.name!r}")
        seen.add(fn.name)
        fn_index[fn.name] = i
    externs = {e.name: e for e in module.externs}

    for fn in module.functions:
        _check_function(module, fn, fn_index, externs)
    return TypedModule(module)


class _FnChecker:
    def __init__(self, module: Module, fn: Function, fn_index, externs):
        self.module = module
        self.fn = fn
        self.fn_index = fn_index
        self.externs = externs

    # -- expressions -------------------------------------------------------

    def expr(self, e: Expr, expected: ValueType | None, path: str) -> ValueType:
        """Resolve and return e's type; `expected` guides pending literals."""
        if isinstance(e, Literal):
            if e.ty is None:
                ty = expected if expected is not None else ValueType.I32
                if ty not in ELEM_SIZE:
                    raise TypeMismatch(f"literal cannot have type {ty.value}", path)
                e.ty = ty
                e.bits = canonical_bits(e.bits, ty)
            return e.ty
        if isinstance(e, VarRef):
            if not 0 <= e.index < self.fn.nslots:
                raise UndefinedLocal(f"local #{e.index} out of range", path)
            e.ty = self.fn.slot_type(e.index)
            return e.ty
        if isinstance(e, Binary):
            ty = self._operands(e.lhs, e.rhs, expected, path)
            if ty not in NUMERIC:
                raise TypeMismatch(f"{e.op.value} not defined on {ty.value}", path)
            if e.op in (BinOp.DIV, BinOp.MOD) and ty not in INTEGRAL:
                raise TypeMismatch(f"{e.op.value} only defined on integers", path)
            e.ty = ty
            return ty
        if isinstance(e, Compare):
            ty = self._operands(e.lhs, e.rhs, None, path)
            if ty not in NUMERIC:
                raise TypeMismatch(f"{e.op.value} not defined on {ty.value}", path)
            e.ty = ValueType.BOOL
            return e.ty
        if isinstance(e, Call):
            if e.callee is None:
                e.callee = self.fn_index.get(e.name)
                if e.callee is None:
                    raise UndefinedFunction(f"unknown function {e.name!r}", path)
            callee = self.module.functions[e.callee]
            self._args(e.args, callee.params, callee.name, path)
            e.ty = callee.ret
            return self._use(e.ty, expected, path)
        if isinstance(e, ExternalCall):
            decl = self.externs.get(e.symbol)
            if decl is None:
                raise UndefinedFunction(f"unknown external {e.symbol!r}", path)
            self._args(e.args, decl.params, decl.name, path)
            e.ty = decl.ret
            return self._use(e.ty, expected, path)
        if isinstance(e, ArrayIndex):
            base_ty = self.expr(e.base, ValueType.PTR, path + "/base")
            if base_ty is not ValueType.PTR:
                raise TypeMismatch(f"indexing non-pointer {base_ty.value}", path)
            idx_ty = self.expr(e.index, ValueType.I64, path + "/index")
            if idx_ty is not ValueType.I64:
                raise TypeMismatch(f"index must be i64, got {idx_ty.value}", path)
            if e.elem is None:
                if expected is None:
                    raise TypeMismatch("cannot infer element type", path)
                e.elem = expected
            if e.elem not in ELEM_SIZE:
                raise TypeMismatch(f"{e.elem.value} not loadable from arrays", path)
            e.ty = e.elem
            return e.ty
        raise TypeMismatch(f"unknown expression {type(e).__name__}", path)

    def _use(self, ty, expected, path):
        if ty is None:
            raise TypeMismatch("void value used", path)
        return ty

    def _operands(self, lhs: Expr, rhs: Expr, expected, path) -> ValueType:
        # Resolve the side that can stand alone first, then let it drive the
        # pending side; fall back to the outer expectation for e.g. `1 + 2`.
        lty = self._try(lhs, expected, path + "/lhs")
        rty = self.expr(rhs, lty if lty is not None else expected, path + "/rhs")
        if lty is None:
            lty = self.expr(lhs, rty, path + "/lhs")
        if lty is not rty:
            raise TypeMismatch(f"operand types differ: {lty.value} vs {rty.value}", path)
        return lty

    def _try(self, e: Expr, expected, path) -> ValueType | None:
        # defer sides that need context until the sibling is known
        if expected is None:
            if isinstance(e, Literal) and e.ty is None:
                return None
            if isinstance(e, ArrayIndex) and e.elem is None:
                return None
        return self.expr(e, expected, path)

    def _args(self, args, params, name, path):
        if len(args) != len(params):
            raise TypeMismatch(
                f"{name} expects {len(params)} args, got {len(args)}", path
            )
        for i, (a, p) in enumerate(zip(args, params)):
            ty = self.expr(a, p, f"{path}/arg{i}")
            if ty is not p:
                raise TypeMismatch(f"arg {i} of {name}: {ty.value} != {p.value}", path)

    # -- statements ---------------------------------------------------------

    def stmts(self, body: list[Stmt], assigned: set[int], path: str) -> bool:
        """Check a statement list; returns True when it always returns."""
        closed = False
        for i, s in enumerate(body):
            closed = self.stmt(s, assigned, f"{path}[{i}]") or closed
        return closed

    def stmt(self, s: Stmt, assigned: set[int], path: str) -> bool:
        fn = self.fn
        if isinstance(s, Declare):
            if not len(fn.params) <= s.index < fn.nslots:
                raise UndefinedLocal(f"declare #{s.index} out of range", path)
            if fn.slot_type(s.index) is not s.ty:
                raise TypeMismatch("declared type differs from slot type", path)
            if s.init is not None:
                ty = self.expr(s.init, s.ty, path + "/init")
                if ty is not s.ty:
                    raise TypeMismatch(f"init {ty.value} != {s.ty.value}", path)
                assigned.add(s.index)
            return False
        if isinstance(s, Assign):
            if isinstance(s.target, VarRef):
                if not 0 <= s.target.index < fn.nslots:
                    raise UndefinedLocal(f"local #{s.target.index} out of range", path)
                tty = fn.slot_type(s.target.index)
                vty = self.expr(s.value, tty, path + "/value")
                if vty is not tty:
                    raise TypeMismatch(f"assign {vty.value} to {tty.value}", path)
                s.target.ty = tty
                assigned.add(s.target.index)
                self._check_reads(s.value, assigned, path + "/value")
                return False
            if isinstance(s.target, ArrayIndex):
                # Infer the element type from the target first, value second.
                try:
                    tty = self.expr(s.target, None, path + "/target")
                except TypeMismatch:
                    vty = self.expr(s.value, None, path + "/value")
                    tty = self.expr(s.target, vty, path + "/target")
                vty = self.expr(s.value, tty, path + "/value")
                if vty is not tty:
                    raise TypeMismatch(f"store {vty.value} into {tty.value} array", path)
                self._check_reads(s.target, assigned, path + "/target")
                self._check_reads(s.value, assigned, path + "/value")
                return False
            raise TypeMismatch("assign target must be variable or index", path)
        if isinstance(s, If):
            ty = self.expr(s.cond, ValueType.BOOL, path + "/cond")
            if ty is not ValueType.BOOL:
                raise TypeMismatch(f"condition is {ty.value}, not bool", path)
            self._check_reads(s.cond, assigned, path + "/cond")
            a_then = set(assigned)
            a_else = set(assigned)
            t = self.stmts(s.then, a_then, path + "/then")
            e = self.stmts(s.orelse, a_else, path + "/else")
            assigned |= a_then & a_else
            return t and e
        if isinstance(s, While):
            ty = self.expr(s.cond, ValueType.BOOL, path + "/cond")
            if ty is not ValueType.BOOL:
                raise TypeMismatch(f"condition is {ty.value}, not bool", path)
            self._check_reads(s.cond, assigned, path + "/cond")
            self.stmts(s.body, set(assigned), path + "/body")
            return False
        if isinstance(s, Return):
            if fn.ret is None:
                if s.value is not None:
                    raise TypeMismatch("void function returns a value", path)
            else:
                if s.value is None:
                    raise TypeMismatch("missing return value", path)
                ty = self.expr(s.value, fn.ret, path + "/value")
                if ty is not fn.ret:
                    raise TypeMismatch(f"return {ty.value} != {fn.ret.value}", path)
                self._check_reads(s.value, assigned, path + "/value")
            return True
        if isinstance(s, ExprStmt):
            # statement-position calls may be void; anything else must type
            if isinstance(s.value, Call):
                e = s.value
                if e.callee is None:
                    e.callee = self.fn_index.get(e.name)
                    if e.callee is None:
                        raise UndefinedFunction(f"unknown function {e.name!r}", path)
                callee = self.module.functions[e.callee]
                self._args(e.args, callee.params, callee.name, path)
                e.ty = callee.ret
            elif isinstance(s.value, ExternalCall):
                decl = self.externs.get(s.value.symbol)
                if decl is None:
                    raise UndefinedFunction(f"unknown external {s.value.symbol!r}", path)
                self._args(s.value.args, decl.params, decl.name, path)
                s.value.ty = decl.ret
            else:
                self.expr(s.value, None, path)
            self._check_reads(s.value, assigned, path)
            return False
        if isinstance(s, Block):
            return self.stmts(s.body, assigned, path)
        raise TypeMismatch(f"unknown statement {type(s).__name__}", path)

    def _check_reads(self, e: Expr, assigned: set[int], path: str):
        if isinstance(e, VarRef):
            if e.index >= len(self.fn.params) and e.index not in assigned:
                raise UndefinedLocal(f"local #{e.index} read before assignment", path)
        elif isinstance(e, (Binary, Compare)):
            self._check_reads(e.lhs, assigned, path)
            self._check_reads(e.rhs, assigned, path)
        elif isinstance(e, (Call, ExternalCall)):
            for a in e.args:
                self._check_reads(a, assigned, path)
        elif isinstance(e, ArrayIndex):
            self._check_reads(e.base, assigned, path)
            self._check_reads(e.index, assigned, path)


def _check_function(module, fn, fn_index, externs):
    checker = _FnChecker(module, fn, fn_index, externs)
    assigned = set(range(len(fn.params)))
    closed = checker.stmts(fn.body, assigned, fn.name)
    if fn.ret is not None and not closed:
        raise MissingReturn(f"{fn.name}: not all paths return", fn.name)
