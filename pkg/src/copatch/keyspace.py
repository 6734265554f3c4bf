"""Shared vocabulary of the stencil key space.

Defines the node kinds, the per-variant hole layout (which value ordinals a
stencil declares, in order, and their nominal widths), and continuation
counts. This is the contract between the code generator, the synthetic
stencil fabric used in tests, and the build-time extractor driving the C
sources.
"""

from __future__ import annotations

from functools import lru_cache

from .stencil import LOC_LIT, LOC_REG, LOC_STACK, StencilKey

# node kinds
LITERAL = "literal"
VAR_LOAD = "var_load"
VAR_STORE = "var_store"
BINARY = "binary"
COMPARE = "compare"
BRANCH = "branch"
JUMP = "jump"
RET = "ret"
ENTRY = "entry"
CALL_FRAME = "call_frame"
CALL_INVOKE = "call_invoke"
EXTERNAL_CALL = "external_call"
IF_CMP_VAR_CONST = "if_cmp_var_const"
BINARY_VAR_CONST = "binary_var_const"
COMPARE_VAR_CONST = "compare_var_const"
ARRAY_LOAD = "array_load"
ARRAY_STORE = "array_store"
THUNK = "thunk"

ALL_KINDS = [
    LITERAL, VAR_LOAD, VAR_STORE, BINARY, COMPARE, BRANCH, JUMP, RET, ENTRY,
    CALL_FRAME, CALL_INVOKE, EXTERNAL_CALL, IF_CMP_VAR_CONST, BINARY_VAR_CONST,
    COMPARE_VAR_CONST, ARRAY_LOAD, ARRAY_STORE, THUNK,
]

BIN_OPS = ["add", "sub", "mul", "div", "mod"]
CMP_OPS = ["eq", "ne", "lt", "le", "gt", "ge"]

# result/error codes shared between generated code and the interpreter
ERR_OK = 0
ERR_EXTERNAL = 1
TRAP_DIV_BY_ZERO = 2
TRAP_FRAME_OVERFLOW = 3

# Every call advances the frame pointer by the caller's frame size plus this
# charge, so recursion depth stays proportional to the pool even for empty
# frames and native-stack use stays bounded by the pool size.
FRAME_ACTIVATION_CHARGE = 32

# value slots available beyond the frame pointer in the stencil signature
VALUE_SLOTS = 5
# register budget ceiling baked into the manifest (pass-through maximum)
MAX_PT = 3
# maximum function/call arity the stencil set covers
MAX_ARITY = 4
# maximum external-call arity
MAX_EXT_ARITY = 4

_WIDE_TYPES = ("i64", "f64", "ptr")


def lit_width(ty: str) -> int:
    return 64 if ty in _WIDE_TYPES else 32


CONT_COUNT = {k: 1 for k in ALL_KINDS}
CONT_COUNT[BRANCH] = CONT_COUNT[IF_CMP_VAR_CONST] = 2
CONT_COUNT[RET] = CONT_COUNT[THUNK] = 0


def cont_count(kind: str) -> int:
    return CONT_COUNT[kind]


def has_elidable_tail(kind: str) -> bool:
    """Single-continuation stencils must end in an elidable trailing jump.

    Conditional stencils keep both edges as explicit jumps; that is what
    makes the jump-retention law exact.
    """
    return cont_count(kind) == 1


@lru_cache(maxsize=None)
def value_holes(key: StencilKey) -> tuple[tuple[str, int], ...]:
    """Ordered (role, nominal-width) list of the value ordinals of a variant.

    The position in the list is the hole's ordinal. Codegen binds values by
    role; the C sources receive the ordinal assignment as preprocessor
    definitions.
    """
    k = key.kind
    holes: list[tuple[str, int]] = []
    if k == LITERAL:
        holes.append(("lit", lit_width(key.ty)))
    elif k == VAR_LOAD:
        holes.append(("var", 32))
    elif k == VAR_STORE:
        holes.append(("var", 32))
        if key.locs[0] == LOC_STACK:
            holes.append(("src", 32))
        elif key.locs[0] == LOC_LIT:
            holes.append(("lit", lit_width(key.ty)))
    elif k in (BINARY, COMPARE):
        if key.locs[0] == LOC_STACK:
            holes.append(("lhs", 32))
        elif key.locs[0] == LOC_LIT:
            holes.append(("lhs_lit", lit_width(key.ty)))
        if key.locs[1] == LOC_STACK:
            holes.append(("rhs", 32))
        elif key.locs[1] == LOC_LIT:
            holes.append(("rhs_lit", lit_width(key.ty)))
    elif k == BRANCH:
        if key.locs[0] == LOC_STACK:
            holes.append(("cond", 32))
    elif k == RET:
        if key.locs:
            if key.locs[0] == LOC_STACK:
                holes.append(("val", 32))
            elif key.locs[0] == LOC_LIT:
                holes.append(("lit", lit_width(key.ty)))
    elif k == ENTRY:
        holes.append(("framesize", 32))
        holes.append(("limit", 64))
    elif k == CALL_FRAME:
        holes.append(("framesize", 32))
    elif k == CALL_INVOKE:
        if key.locs[0] == LOC_STACK:  # locs[0] is the new-frame location
            holes.append(("nf", 32))
        for i, loc in enumerate(key.locs[1:]):
            if loc == LOC_STACK:
                holes.append((f"arg{i}", 32))
        holes.append(("target", 32))
    elif k == EXTERNAL_CALL:
        holes.append(("argblock", 32))
        for i, loc in enumerate(key.locs[: key.n]):
            if loc == LOC_STACK:
                holes.append((f"arg{i}", 32))
        holes.append(("adapter", 64))
    elif k in (IF_CMP_VAR_CONST, BINARY_VAR_CONST, COMPARE_VAR_CONST):
        holes.append(("var", 32))
        holes.append(("lit", lit_width(key.ty)))
    elif k in (ARRAY_LOAD, ARRAY_STORE):
        if any(loc == LOC_LIT for loc in key.locs):
            raise ValueError("literal operands of array ops are materialized first")
        names = ("base", "idx", "val")
        for name, loc in zip(names, key.locs):
            if loc == LOC_STACK:
                holes.append((name, 32))
    elif k == JUMP:
        pass
    elif k == THUNK:
        holes.append(("target", 32))
        holes.append(("pool", 64))
    else:
        raise ValueError(f"unknown kind {k!r}")
    if key.spill:
        holes.append(("out", 32))
    return tuple(holes)


@lru_cache(maxsize=None)
def hole_roles(key: StencilKey) -> dict[str, int]:
    """Map role name to value ordinal for one variant."""
    return {role: i for i, (role, _w) in enumerate(value_holes(key))}


def needs_wide_model(key: StencilKey) -> bool:
    """True when the variant holds any 64-bit hole (compiled medium model)."""
    return any(w == 64 for _r, w in value_holes(key))
