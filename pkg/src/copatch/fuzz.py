"""Deterministic random-program generation for differential testing.

Generated modules typecheck by construction and always terminate: loops
count a dedicated local up to a literal bound, and the call graph is
acyclic. Integer division may trap; that is intentional coverage, since
both tiers must trap identically. Programs in "array mode" exercise loads
and stores against a host-provided scratch buffer, indexed only by loop
counters that stay inside the allocation.
"""

from __future__ import annotations

import random

from .lang import (
    ArrayIndex,
    Assign,
    Binary,
    BinOp,
    Call,
    CmpOp,
    Compare,
    Declare,
    Expr,
    ExternalCall,
    ExternDecl,
    Function,
    If,
    Literal,
    Module,
    Return,
    Stmt,
    ValueType,
    VarRef,
    While,
)

SCRATCH_ELEMS = 16
_NUM_TYPES = (ValueType.I32, ValueType.I64, ValueType.F64)
_INT_BIN = (BinOp.ADD, BinOp.SUB, BinOp.MUL, BinOp.DIV, BinOp.MOD)
_F64_BIN = (BinOp.ADD, BinOp.SUB, BinOp.MUL)
_CMPS = tuple(CmpOp)

_I32_POOL = (0, 1, 2, 3, 5, 7, -1, -2, 100, 2**31 - 1, -(2**31))
_I64_POOL = (0, 1, 2, 3, -1, -5, 10**12, 2**63 - 1, -(2**63))
_F64_POOL = (0.0, 1.0, -1.5, 0.5, 3.25, -1024.0, 1e12, -4e-3)


class _Gen:
    def __init__(self, seed: int, budget: int):
        self.rng = random.Random(seed)
        self.budget = max(1, budget)
        self.spent = 0
        self.arrays = seed % 4 == 0 and budget >= 8

    def module(self) -> Module:
        mod = Module()
        if self.arrays:
            mod.externs.append(
                ExternDecl("scratch", [ValueType.I64], ValueType.PTR)
            )
        n_fns = 1 if self.budget < 12 else self.rng.randint(1, 3)
        for i in range(n_fns):
            last = i == n_fns - 1
            share = self.budget if last else max(2, self.budget // (2 * n_fns))
            mod.functions.append(self.function(mod, i, share, last))
        return mod

    def function(self, mod: Module, index: int, budget: int, is_main: bool) -> Function:
        rng = self.rng
        name = "main" if is_main else f"f{index}"
        nparams = rng.randint(0, 3)
        params = [rng.choice(_NUM_TYPES) for _ in range(nparams)]
        ret = rng.choice(_NUM_TYPES + (ValueType.BOOL,))
        fn = Function(name, params, ret, [], [])
        ctx = _FnCtx(self, mod, fn, index)
        body = ctx.body(budget, depth=0)
        body.append(Return(ctx.expr(ret, 2)))
        fn.body = body
        return fn


class _FnCtx:
    def __init__(self, gen: _Gen, mod: Module, fn: Function, fn_index: int):
        self.gen = gen
        self.rng = gen.rng
        self.mod = mod
        self.fn = fn
        self.fn_index = fn_index
        self.vars: dict[ValueType, list[int]] = {}
        self.protected: set[int] = set()  # loop counters: never reassigned
        self.array_var: int | None = None
        for i, ty in enumerate(fn.params):
            self.vars.setdefault(ty, []).append(i)

    def declare(self, ty: ValueType, init: Expr) -> tuple[int, Declare]:
        index = self.fn.nslots
        self.fn.locals.append(ty)
        stmt = Declare(index, ty, init)
        self.vars.setdefault(ty, []).append(index)
        return index, stmt

    # -- statements --

    def body(self, budget: int, depth: int) -> list[Stmt]:
        out: list[Stmt] = []
        # seed a few typed locals so expressions have material to work with
        if depth == 0:
            for ty in self.rng.sample(_NUM_TYPES, 2):
                _i, stmt = self.declare(ty, self.lit(ty))
                out.append(stmt)
            if self.gen.arrays and self.fn.name == "main":
                index = self.fn.nslots
                self.fn.locals.append(ValueType.PTR)
                out.append(
                    Declare(
                        index,
                        ValueType.PTR,
                        ExternalCall("scratch", [Literal.of(SCRATCH_ELEMS, ValueType.I64)]),
                    )
                )
                self.array_var = index
        while budget > 0:
            stmts, cost = self.stmt(budget, depth)
            out.extend(stmts)
            budget -= cost
        return out

    def stmt(self, budget: int, depth: int) -> tuple[list[Stmt], int]:
        rng = self.rng
        roll = rng.random()
        if roll < 0.14 and budget >= 4 and depth < 2:
            return self.if_stmt(budget, depth)
        if roll < 0.24 and budget >= 5 and depth < 2:
            return self.loop(budget, depth)
        if roll < 0.32:
            ty = rng.choice(_NUM_TYPES)
            _i, stmt = self.declare(ty, self.expr(ty, 2))
            return [stmt], 1
        if roll < 0.38 and self.array_var is not None:
            return [self.array_write()], 1
        targets = [
            i
            for lst in self.vars.values()
            for i in lst
            if i not in self.protected and i >= len(self.fn.params)
        ]
        if not targets:
            ty = rng.choice(_NUM_TYPES)
            _i, stmt = self.declare(ty, self.expr(ty, 2))
            return [stmt], 1
        index = rng.choice(targets)
        ty = self.fn.slot_type(index)
        return [Assign(VarRef(index), self.expr(ty, 3))], 1

    def if_stmt(self, budget: int, depth: int) -> tuple[list[Stmt], int]:
        half = max(1, (budget - 2) // 2)
        then = self.body_limited(half, depth + 1)
        orelse = (
            self.body_limited(half, depth + 1) if self.rng.random() < 0.5 else []
        )
        return [If(self.bool_expr(2), then, orelse)], 2 + half * (2 if orelse else 1)

    def loop(self, budget: int, depth: int) -> tuple[list[Stmt], int]:
        trips = self.rng.randint(2, 8)
        counter, decl = self.declare(ValueType.I64, Literal.of(0, ValueType.I64))
        self.protected.add(counter)
        inner = max(1, (budget - 3) // 2)
        body = self.body_limited(inner, depth + 1)
        body.append(
            Assign(
                VarRef(counter),
                Binary(BinOp.ADD, VarRef(counter), Literal.of(1, ValueType.I64)),
            )
        )
        loop = While(
            Compare(CmpOp.LT, VarRef(counter), Literal.of(trips, ValueType.I64)),
            body,
        )
        return [decl, loop], 3 + inner

    def body_limited(self, budget: int, depth: int) -> list[Stmt]:
        # locals declared inside a branch are not definitely assigned
        # outside it; restore the visible pools on exit
        saved = {ty: list(idxs) for ty, idxs in self.vars.items()}
        out = []
        while budget > 0:
            stmts, cost = self.stmt(budget, depth)
            out.extend(stmts)
            budget -= cost
        self.vars = saved
        return out

    def array_write(self) -> Stmt:
        target = ArrayIndex(VarRef(self.array_var), self.array_index())
        return Assign(target, self.expr(ValueType.I64, 2))

    def array_index(self) -> Expr:
        # only in-scope loop counters stay within the scratch bounds
        counters = [
            i for i in self.vars.get(ValueType.I64, ()) if i in self.protected
        ]
        if counters and self.rng.random() < 0.7:
            return VarRef(self.rng.choice(counters))
        return Literal.of(self.rng.randrange(SCRATCH_ELEMS), ValueType.I64)

    # -- expressions --

    def lit(self, ty: ValueType) -> Literal:
        rng = self.rng
        if ty is ValueType.I32:
            return Literal.of(rng.choice(_I32_POOL) if rng.random() < 0.5 else rng.randint(-50, 50), ty)
        if ty is ValueType.I64:
            return Literal.of(rng.choice(_I64_POOL) if rng.random() < 0.5 else rng.randint(-100, 100), ty)
        if ty is ValueType.F64:
            return Literal.of(rng.choice(_F64_POOL), ty)
        return Literal.of(rng.random() < 0.5, ValueType.BOOL)

    def expr(self, ty: ValueType, depth: int) -> Expr:
        rng = self.rng
        if ty is ValueType.BOOL:
            return self.bool_expr(depth)
        if depth <= 0:
            return self.leaf(ty)
        roll = rng.random()
        if roll < 0.30:
            return self.leaf(ty)
        if roll < 0.78:
            ops = _F64_BIN if ty is ValueType.F64 else _INT_BIN
            op = rng.choice(ops)
            if op in (BinOp.DIV, BinOp.MOD) and rng.random() < 0.6:
                op = BinOp.ADD  # keep traps present but not dominant
            return Binary(op, self.expr(ty, depth - 1), self.expr(ty, depth - 1))
        call = self.call_expr(ty, depth)
        if call is not None:
            return call
        if (
            self.array_var is not None
            and ty is ValueType.I64
            and rng.random() < 0.5
        ):
            return ArrayIndex(VarRef(self.array_var), self.array_index(), ValueType.I64)
        return self.leaf(ty)

    def leaf(self, ty: ValueType) -> Expr:
        pool = self.vars.get(ty)
        if pool and self.rng.random() < 0.7:
            return VarRef(self.rng.choice(pool))
        return self.lit(ty)

    def bool_expr(self, depth: int) -> Expr:
        rng = self.rng
        pool = self.vars.get(ValueType.BOOL)
        if pool and rng.random() < 0.2:
            return VarRef(rng.choice(pool))
        ty = rng.choice(_NUM_TYPES)
        return Compare(
            rng.choice(_CMPS), self.expr(ty, depth - 1), self.expr(ty, depth - 1)
        )

    def call_expr(self, ty: ValueType, depth: int) -> Expr | None:
        candidates = [
            (i, f)
            for i, f in enumerate(self.mod.functions)
            if i < self.fn_index and f.ret is ty and len(f.params) <= 3
        ]
        if not candidates:
            return None
        idx, callee = self.rng.choice(candidates)
        args = [self.expr(p, max(0, depth - 2)) for p in callee.params]
        return Call(callee.name, args, callee=idx)


def gen_program(seed: int, size_budget: int = 30) -> Module:
    """Deterministically generate a typecheckable, terminating module."""
    if size_budget < 1:
        raise ValueError("size budget must be >= 1")
    if size_budget == 1:
        fn = Function("main", [], ValueType.I64, [], [Return(Literal.of(seed & 0xFF, ValueType.I64))])
        return Module(functions=[fn])
    return _Gen(seed, size_budget).module()


def input_vectors(module: Module, seed: int, count: int = 3) -> list[list]:
    """Deterministic argument vectors for the module's main function."""
    rng = random.Random(seed ^ 0x5EED)
    fn = module.function("main")
    out = []
    for _ in range(count):
        vec = []
        for ty in fn.params:
            if ty is ValueType.I32:
                vec.append(rng.randint(-(2**31), 2**31 - 1))
            elif ty is ValueType.I64:
                vec.append(rng.randint(-(2**63), 2**63 - 1))
            elif ty is ValueType.F64:
                vec.append(rng.choice(_F64_POOL) * rng.randint(-3, 3))
            else:
                vec.append(rng.randint(0, 1))
        out.append(vec)
    return out
