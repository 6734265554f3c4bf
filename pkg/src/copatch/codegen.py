"""Copy-and-patch code generation: register planning, frame layout, stencil
selection with supernode matching, and CPS call-graph construction.

The compiler performs two post-order traversals of each function body. The
first abstractly evaluates every expression left-to-right, maintaining the
stack of outstanding temporaries: whenever the stack holds more temporaries
than the register budget K, the bottom-most ones are marked spilled, and any
temporary whose lifetime crosses a call is spilled because the stencil
calling protocol is fully caller-saved. The second traversal re-runs the
same walk with the finalized spill set, selecting the most specific stencil
variant per node and linking continuation edges in emission (depth-first,
ordinal-0-first) order.

Register temporaries occupy the stencil value slots in stack order; a
stencil variant with pass-through count p leaves slots 1..p untouched, so a
temporary's slot never changes during its lifetime.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import keyspace as ks
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
    Expr,
    ExprStmt,
    ExternalCall,
    Function,
    If,
    Literal,
    Return,
    Stmt,
    TypedModule,
    ValueType,
    VarRef,
    While,
)
from .stencil import LOC_LIT, LOC_REG, LOC_STACK, StencilKey, StencilLibrary

DEFAULT_K = 3

_BIN_NAME = {op: op.name.lower() for op in BinOp}
_CMP_NAME = {op: op.name.lower() for op in CmpOp}
_FOLD_OPS = (BinOp.ADD, BinOp.SUB, BinOp.MUL)  # literal divisors never fold
_SUPER_TYPES = (ValueType.I32, ValueType.I64)


class CompileError(Exception):
    pass


# ---------------------------------------------------------------------------
# register plan and frame layout


@dataclass
class RegPlan:
    """Spill decisions for one function's temporaries.

    Temporaries are numbered in traversal order, which both passes share.
    `timeline` records ('prod'|'cons', uid) events for slot-reuse layout;
    `pt` maps a producer's uid to its pass-through count.
    """

    K: int
    spilled: set[int] = field(default_factory=set)
    pt: dict[int, int] = field(default_factory=dict)
    timeline: list[tuple[str, int]] = field(default_factory=list)
    ext_slots: int = 0
    temps: int = 0

    @property
    def spill_count(self) -> int:
        return len(self.spilled)


@dataclass
class FrameLayout:
    """Frame offsets: locals first, then reused spill slots, then the
    external-call argument block. All slots are 8 bytes."""

    nslots: int
    spill_offsets: dict[int, int]
    spill_slots: int
    argblock_off: int | None
    frame_size: int
    reuse_events: list[tuple[str, int, int]]

    def local_offset(self, index: int) -> int:
        return 8 * index


def plan_registers(fn: Function, budget: int = DEFAULT_K) -> RegPlan:
    """Plan which expression temporaries live in registers vs the frame."""
    if budget < 0:
        raise ValueError("register budget must be >= 0")
    plan = RegPlan(K=budget)
    # One sweep fixes the spill set; the watermark and call-boundary rules
    # mark temporaries retroactively, so pass-through counts are only final
    # once the set is frozen and are recorded by the second (build)
    # traversal. The event timeline depends only on traversal order.
    sweep = _Walk(fn, plan, deciding=True)
    sweep.run()
    plan.temps = sweep.uid
    return plan


def layout_frame(fn: Function, plan: RegPlan) -> FrameLayout:
    """Assign frame offsets; freed spill slots are reused in LIFO order."""
    nslots = fn.nslots
    base = 8 * nslots
    free: list[int] = []
    offsets: dict[int, int] = {}
    events: list[tuple[str, int, int]] = []
    high = 0
    for what, uid in plan.timeline:
        if uid not in plan.spilled:
            continue
        if what == "prod":
            if free:
                slot = free.pop()
            else:
                slot = high
                high += 1
            offsets[uid] = base + 8 * slot
            events.append(("alloc", uid, slot))
        else:
            slot = (offsets[uid] - base) // 8
            free.append(slot)
            events.append(("free", uid, slot))
    argblock_off = None
    size = base + 8 * high
    if plan.ext_slots:
        argblock_off = size
        size += 8 * plan.ext_slots
    return FrameLayout(nslots, offsets, high, argblock_off, size, events)


# ---------------------------------------------------------------------------
# supernode matching

# most specific first; fixed priority breaks ties
SUPERNODE_PRIORITY = (ks.IF_CMP_VAR_CONST, ks.COMPARE_VAR_CONST, ks.BINARY_VAR_CONST)


def _var_const(e: Expr) -> bool:
    return (
        isinstance(e, (Binary, Compare))
        and isinstance(e.lhs, VarRef)
        and isinstance(e.rhs, Literal)
        and e.lhs.ty in _SUPER_TYPES
    )


def match_supernode(node) -> str | None:
    """Return the most specific supernode shape for a subtree, or None."""
    if isinstance(node, (If, While)):
        if isinstance(node.cond, Compare) and _var_const(node.cond):
            return ks.IF_CMP_VAR_CONST
        return None
    if isinstance(node, Assign) and isinstance(node.target, VarRef):
        return match_supernode(node.value)
    if isinstance(node, Compare) and _var_const(node):
        return ks.COMPARE_VAR_CONST
    if isinstance(node, Binary) and node.op in _FOLD_OPS and _var_const(node):
        return ks.BINARY_VAR_CONST
    return None


# ---------------------------------------------------------------------------
# CPS graph


class CPSNode:
    __slots__ = ("key", "stencil", "conts", "vals", "fixups", "is_call", "dmask", "_conts_q")

    def __init__(self, key: StencilKey, stencil, vals, fixups, is_call=False, nconts=None):
        self.key = key
        self.stencil = stencil
        if nconts is None:
            nconts = ks.cont_count(key.kind)
        self.conts: list[int | None] = [None] * nconts
        self.vals = vals  # array('q'), one value per ordinal; deferred hold 0
        self.fixups = fixups  # (ordinal, kind, payload): 'fn'|'ext'|'pool'
        self.is_call = is_call
        self.dmask = 0  # bitmask of deferred value ordinals
        for ordinal, _k, _p in fixups:
            self.dmask |= 1 << ordinal
        self._conts_q = None  # baked by the emitter after edges are wired


@dataclass
class CPSGraph:
    """Stencil instances in emission order; node 0 is the function entry."""

    fn_name: str
    nodes: list[CPSNode]
    nparams: int
    ret: ValueType | None
    frame_size: int
    spill_count: int
    call_edges: int

    def __len__(self):
        return len(self.nodes)


def build_cps_graph(
    fn: Function,
    plan: RegPlan,
    layout: FrameLayout,
    lib: StencilLibrary,
    module: TypedModule | None = None,
) -> CPSGraph:
    """Select stencils for a function and link them in emission order."""
    if len(fn.params) > ks.MAX_ARITY:
        raise CompileError(f"{fn.name}: more than {ks.MAX_ARITY} parameters")
    builder = _Walk(fn, plan, deciding=False, lib=lib, layout=layout)
    builder.run()
    return CPSGraph(
        fn_name=fn.name,
        nodes=builder.nodes,
        nparams=len(fn.params),
        ret=fn.ret,
        frame_size=layout.frame_size,
        spill_count=plan.spill_count,
        call_edges=builder.call_edges,
    )


def compile_function(
    fn: Function, lib: StencilLibrary, budget: int = DEFAULT_K
) -> CPSGraph:
    plan = plan_registers(fn, budget)
    layout = layout_frame(fn, plan)
    return build_cps_graph(fn, plan, layout, lib)


# ---------------------------------------------------------------------------
# the shared traversal


class _Temp:
    __slots__ = ("uid",)

    def __init__(self, uid):
        self.uid = uid


class _Walk:
    """One traversal of a function body.

    In deciding mode it populates the plan's spill set. Otherwise it reads
    the frozen plan; with a library attached it additionally emits CPS nodes
    (the second compiler pass).
    """

    def __init__(self, fn, plan, deciding, lib=None, layout=None):
        self.fn = fn
        self.plan = plan
        self.deciding = deciding
        self.lib = lib
        self.layout = layout
        self.stack: list[int] = []  # uids of outstanding temporaries
        self.uid = 0
        self.var_temps: set[int] = set()  # results stored straight to locals
        self.nodes: list[CPSNode] = []
        self.pending: list[tuple[int, int]] = []
        self.call_edges = 0
        if lib is not None:
            # per-variant emission info, cached on the (immutable) library
            self.emit_info = getattr(lib, "_emit_info", None)
            if self.emit_info is None:
                self.emit_info = lib._emit_info = {}

    # -- plumbing ------------------------------------------------------------

    def spilled(self, uid: int) -> bool:
        return uid in self.plan.spilled

    def new_temp(self, to_var=False) -> int:
        uid = self.uid
        self.uid += 1
        if to_var:
            # lives in a local's slot; must not consume a spill slot
            self.var_temps.add(uid)
        elif self.deciding:
            self.plan.timeline.append(("prod", uid))
        return uid

    def push(self, uid: int):
        self.stack.append(uid)
        if self.deciding and len(self.stack) > self.plan.K:
            self._watermark()

    def _watermark(self):
        regs = [u for u in self.stack if u not in self.plan.spilled]
        for u in regs[: max(0, len(regs) - self.plan.K)]:
            self.plan.spilled.add(u)

    def pop_group(self, n: int) -> list[int]:
        if n == 0:
            return []
        group = self.stack[-n:]
        del self.stack[-n:]
        if self.deciding:
            for uid in group:
                if uid not in self.var_temps:
                    self.plan.timeline.append(("cons", uid))
        return group

    def call_boundary(self):
        """Everything still outstanding lives across a call: spill it."""
        if self.deciding:
            self.plan.spilled.update(self.stack)

    def cur_pt(self) -> int:
        return sum(1 for u in self.stack if u not in self.plan.spilled)

    def record_pt(self, uid: int, pt: int):
        if self.lib is not None:
            self.plan.pt[uid] = pt

    def loc_of(self, uid: int) -> str:
        return LOC_STACK if self.spilled(uid) else LOC_REG

    # -- node emission --------------------------------------------------------

    def emit(self, key: StencilKey, roles: dict | None = None, is_call=False) -> int:
        """Append a CPS node, wiring all pending edges to it."""
        if self.lib is None:
            return -1
        info = self.emit_info.get(key)
        if info is None:
            info = (
                self.lib.select(key),
                len(ks.value_holes(key)),
                ks.hole_roles(key),
                ks.cont_count(key.kind),
            )
            self.emit_info[key] = info
        stencil, nholes, table, nconts = info
        vals = [0] * nholes
        fixups = []
        if roles:
            for role, value in roles.items():
                ordinal = table[role]
                if value.__class__ is tuple:
                    fixups.append((ordinal, value[0], value[1]))
                else:
                    vals[ordinal] = value
        node = CPSNode(key, stencil, vals, fixups, is_call, nconts)
        nodes = self.nodes
        idx = len(nodes)
        nodes.append(node)
        pending = self.pending
        if pending:
            for i, ordinal in pending:
                nodes[i].conts[ordinal] = idx
            pending.clear()
        if nconts:
            pending.append((idx, 0))  # ordinal-0 edge is followed first
        return idx

    def slot_off(self, uid: int) -> int:
        return self.layout.spill_offsets[uid] if self.layout is not None else 0

    # -- statements ------------------------------------------------------------

    def run(self):
        fn = self.fn
        if self.lib is not None:
            self.emit(
                StencilKey(ks.ENTRY, n=len(fn.params)),
                {
                    "framesize": self.layout.frame_size,
                    "limit": ("pool", "limit"),
                },
            )
        closed = self.stmts(fn.body)
        if not closed:
            # void functions may fall off the end
            self.emit(StencilKey(ks.RET))
            if self.lib is not None:
                self.pending.clear()

    def stmts(self, body: list[Stmt]) -> bool:
        for s in body:
            if self.stmt(s):
                return True  # statically unreachable code is not emitted
        return False

    def stmt(self, s: Stmt) -> bool:
        assert not self.stack, "temporaries never live across statements"
        if isinstance(s, Declare):
            if s.init is not None:
                self.assign_to_slot(s.index, s.init)
            return False
        if isinstance(s, Assign):
            if isinstance(s.target, VarRef):
                self.assign_to_slot(s.target.index, s.value)
            else:
                self.array_store(s.target, s.value)
            return False
        if isinstance(s, If):
            return self.if_stmt(s)
        if isinstance(s, While):
            self.while_stmt(s)
            return False
        if isinstance(s, Return):
            self.return_stmt(s)
            return True
        if isinstance(s, ExprStmt):
            self.expr(s.value)
            self.pop_group(1)  # dead result
            return False
        if isinstance(s, Block):
            return self.stmts(s.body)
        raise CompileError(f"cannot lower {type(s).__name__}")

    # statement helpers

    def assign_to_slot(self, index: int, value: Expr):
        """Store an expression into a frame slot, spilling at the producer."""
        off = 8 * index
        if isinstance(value, Literal):
            self.emit(
                StencilKey(ks.VAR_STORE, ty=value.ty.value, locs=(LOC_LIT,)),
                {"var": off, "lit": _signed(value.bits)},
            )
            return
        self.expr(value, spill_to=off)
        self.pop_group(1)

    def array_store(self, target: ArrayIndex, value: Expr):
        b = self.force_temp(target.base)
        i = self.force_temp(target.index)
        v = self.force_temp(value)
        group = self.pop_group(3)
        locs = tuple(self.loc_of(u) for u in group)
        roles = {}
        if self.lib is not None:
            for name, u in zip(("base", "idx", "val"), group):
                if self.spilled(u):
                    roles[name] = self.slot_off(u)
        self.emit(
            StencilKey(ks.ARRAY_STORE, ty=target.elem.value, locs=locs), roles
        )

    def if_stmt(self, s: If) -> bool:
        self.branch_head(s)
        branch_idx = len(self.nodes) - 1
        closed_then = self.stmts(s.then)
        pend_then = list(self.pending)
        self.pending = [(branch_idx, 1)] if self.lib is not None else []
        closed_else = self.stmts(s.orelse)
        self.pending = pend_then + self.pending
        return closed_then and closed_else

    def while_stmt(self, s: While):
        head = len(self.nodes)
        self.branch_head(s)
        branch_idx = len(self.nodes) - 1
        closed = self.stmts(s.body)
        if not closed:
            jump = self.emit(StencilKey(ks.JUMP))
            if self.lib is not None:
                self.nodes[jump].conts[0] = head
                self.pending.clear()
        self.pending = [(branch_idx, 1)] if self.lib is not None else []

    def branch_head(self, s):
        """Lower an if/while condition to a two-way branch node."""
        if match_supernode(s) == ks.IF_CMP_VAR_CONST:
            cond = s.cond
            self.emit(
                StencilKey(
                    ks.IF_CMP_VAR_CONST,
                    op=_CMP_NAME[cond.op],
                    ty=cond.lhs.ty.value,
                ),
                {"var": 8 * cond.lhs.index, "lit": _signed(cond.rhs.bits)},
            )
            return
        uid = self.force_temp(s.cond)
        (uid,) = self.pop_group(1)
        roles = {"cond": self.slot_off(uid)} if self.spilled(uid) else None
        self.emit(StencilKey(ks.BRANCH, locs=(self.loc_of(uid),)), roles)

    def return_stmt(self, s: Return):
        if s.value is None:
            self.emit(StencilKey(ks.RET))
        elif isinstance(s.value, Literal):
            self.emit(
                StencilKey(ks.RET, ty=s.value.ty.value, locs=(LOC_LIT,)),
                {"lit": _signed(s.value.bits)},
            )
        else:
            uid = self.force_temp(s.value)
            (uid,) = self.pop_group(1)
            if self.spilled(uid):
                self.emit(
                    StencilKey(ks.RET, locs=(LOC_STACK,)), {"val": self.slot_off(uid)}
                )
            else:
                self.emit(StencilKey(ks.RET, locs=(LOC_REG,)))
        if self.lib is not None:
            self.pending.clear()

    # -- expressions -------------------------------------------------------------

    def force_temp(self, e: Expr) -> int:
        """Evaluate e all the way to a temporary on the stack."""
        return self.expr(e)

    def expr(self, e: Expr, spill_to: int | None = None) -> int:
        """Evaluate an expression; returns the uid of the produced temporary.

        With spill_to set, the top producer writes its result directly to
        that frame offset instead of a register (assignment lowering), and
        the returned temporary is the pseudo-entry left on the stack.
        """
        if isinstance(e, Literal):
            return self.produce(
                ks.LITERAL, {"lit": _signed(e.bits)}, ty=e.ty.value, spill_to=spill_to
            )
        if isinstance(e, VarRef):
            return self.produce(
                ks.VAR_LOAD, {"var": 8 * e.index}, spill_to=spill_to
            )
        if isinstance(e, Binary) and match_supernode(e) == ks.BINARY_VAR_CONST:
            return self.produce(
                ks.BINARY_VAR_CONST,
                {"var": 8 * e.lhs.index, "lit": _signed(e.rhs.bits)},
                op=_BIN_NAME[e.op],
                ty=e.ty.value,
                spill_to=spill_to,
            )
        if isinstance(e, Compare) and match_supernode(e) == ks.COMPARE_VAR_CONST:
            return self.produce(
                ks.COMPARE_VAR_CONST,
                {"var": 8 * e.lhs.index, "lit": _signed(e.rhs.bits)},
                op=_CMP_NAME[e.op],
                ty=e.lhs.ty.value,
                spill_to=spill_to,
            )
        if isinstance(e, (Binary, Compare)):
            return self.binary(e, spill_to)
        if isinstance(e, Call):
            return self.call(e, spill_to)
        if isinstance(e, ExternalCall):
            return self.external(e, spill_to)
        if isinstance(e, ArrayIndex):
            return self.array_load(e, spill_to)
        raise CompileError(f"cannot lower {type(e).__name__}")

    def binary(self, e, spill_to):
        kind = ks.BINARY if isinstance(e, Binary) else ks.COMPARE
        op = _BIN_NAME[e.op] if isinstance(e, Binary) else _CMP_NAME[e.op]
        ty = e.lhs.ty if kind == ks.COMPARE else e.ty
        fold_rhs = (
            isinstance(e.rhs, Literal)
            and (kind == ks.COMPARE or e.op in _FOLD_OPS)
        )
        building = self.lib is not None
        lhs_uid = self.force_temp(e.lhs)
        roles = {}
        if fold_rhs:
            (lhs_uid,) = self.pop_group(1)
            locs = (self.loc_of(lhs_uid), LOC_LIT)
            if building:
                if self.spilled(lhs_uid):
                    roles["lhs"] = self.slot_off(lhs_uid)
                roles["rhs_lit"] = _signed(e.rhs.bits)
        else:
            self.force_temp(e.rhs)
            group = self.pop_group(2)
            locs = tuple(self.loc_of(u) for u in group)
            if building:
                if self.spilled(group[0]):
                    roles["lhs"] = self.slot_off(group[0])
                if self.spilled(group[1]):
                    roles["rhs"] = self.slot_off(group[1])
        return self.produce(
            kind, roles, op=op, ty=ty.value, locs=locs, spill_to=spill_to
        )

    def call(self, e: Call, spill_to):
        callee = e.callee
        if self.lib is not None and len(e.args) > ks.MAX_ARITY:
            raise CompileError(f"call to {e.name}: more than {ks.MAX_ARITY} args")
        advance = (
            self.layout.frame_size + ks.FRAME_ACTIVATION_CHARGE if self.layout else 0
        )
        self.produce(ks.CALL_FRAME, {"framesize": advance})
        for a in e.args:
            self.force_temp(a)
        group = self.pop_group(1 + len(e.args))
        self.call_boundary()
        locs = tuple(self.loc_of(u) for u in group)
        roles = {"target": ("fn", callee)}
        if self.lib is not None:
            if self.spilled(group[0]):
                roles["nf"] = self.slot_off(group[0])
            for i, uid in enumerate(group[1:]):
                if self.spilled(uid):
                    roles[f"arg{i}"] = self.slot_off(uid)
        self.call_edges += 1
        return self.produce(
            ks.CALL_INVOKE,
            roles,
            locs=locs,
            n=len(e.args),
            spill_to=spill_to,
            is_call=True,
            pt_zero=True,
        )

    def external(self, e: ExternalCall, spill_to):
        if len(e.args) > ks.MAX_EXT_ARITY:
            raise CompileError(f"{e.symbol}: more than {ks.MAX_EXT_ARITY} args")
        if self.deciding:
            self.plan.ext_slots = max(self.plan.ext_slots, len(e.args), 1)
        for a in e.args:
            self.force_temp(a)
        group = self.pop_group(len(e.args))
        self.call_boundary()
        locs = tuple(self.loc_of(u) for u in group)
        roles = {
            "argblock": self.layout.argblock_off if self.layout else 0,
            "adapter": ("ext", e.symbol),
        }
        if self.lib is not None:
            for i, uid in enumerate(group):
                if self.spilled(uid):
                    roles[f"arg{i}"] = self.slot_off(uid)
        return self.produce(
            ks.EXTERNAL_CALL,
            roles,
            locs=locs,
            n=len(e.args),
            spill_to=spill_to,
            is_call=True,
            pt_zero=True,
        )

    def array_load(self, e: ArrayIndex, spill_to):
        self.force_temp(e.base)
        self.force_temp(e.index)
        group = self.pop_group(2)
        locs = tuple(self.loc_of(u) for u in group)
        roles = {}
        if self.lib is not None:
            for name, uid in zip(("base", "idx"), group):
                if self.spilled(uid):
                    roles[name] = self.slot_off(uid)
        return self.produce(
            ks.ARRAY_LOAD, roles, ty=e.elem.value, locs=locs, spill_to=spill_to
        )

    def produce(
        self,
        kind: str,
        roles: dict,
        op=None,
        ty=None,
        locs=(),
        n=0,
        spill_to=None,
        is_call=False,
        pt_zero=False,
    ) -> int:
        """Common tail of every value-producing stencil."""
        pt = 0 if pt_zero else self.cur_pt()
        if spill_to is not None:
            # assignment target: the producer stores straight to the slot
            uid = self.new_temp(to_var=True)
            if self.lib is not None:
                key = StencilKey(kind, op, ty, locs, pt, True, n)
                roles = dict(roles)
                roles["out"] = spill_to
                self.emit(key, roles, is_call)
            self.record_pt(uid, pt)
            self.push(uid)
            self.plan.spilled.add(uid)  # occupies no register slot
            return uid
        uid = self.new_temp()
        self.push(uid)
        spilled = self.spilled(uid)
        self.record_pt(uid, pt)
        if self.lib is not None:
            key = StencilKey(kind, op, ty, locs, pt, spilled, n)
            if spilled:
                roles = dict(roles)
                roles["out"] = self.slot_off(uid)
            self.emit(key, roles, is_call)
        return uid


def _signed(bits: int) -> int:
    bits &= (1 << 64) - 1
    return bits - (1 << 64) if bits & (1 << 63) else bits
