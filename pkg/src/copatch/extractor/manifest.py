"""Stencil manifests: the finite configuration space the library covers.

A manifest is a list of generator entries. Each entry names a node kind and
explicit domains for the key fields; expansion takes the Cartesian product,
applies the entry's named filter predicates, and yields a sorted,
duplicate-free key list together with the preprocessor definitions that
instantiate the C generator source for each key.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .. import keyspace as ks
from ..stencil import LOC_LIT, LOC_REG, LOC_STACK, StencilKey


class EmptyExpansion(Exception):
    pass


@dataclass
class Entry:
    kind: str
    source: str
    ops: list = field(default_factory=lambda: [None])
    types: list = field(default_factory=lambda: [None])
    locs: list = field(default_factory=lambda: [""])  # e.g. ["RR", "RS"]
    pt: list = field(default_factory=lambda: [0])
    spill: list = field(default_factory=lambda: [False])
    n: list = field(default_factory=lambda: [0])
    filters: list = field(default_factory=list)


@dataclass
class Manifest:
    entries: list[Entry]

    def to_json(self) -> str:
        return json.dumps(
            {"version": 1, "entries": [vars(e) for e in self.entries]},
            indent=1,
        )

    @staticmethod
    def from_json(text: str) -> "Manifest":
        doc = json.loads(text)
        return Manifest([Entry(**e) for e in doc["entries"]])

    @staticmethod
    def load(path) -> "Manifest":
        with open(path) as f:
            return Manifest.from_json(f.read())


# -- filter predicates -------------------------------------------------------

_PRODUCERS = {
    ks.LITERAL,
    ks.VAR_LOAD,
    ks.BINARY,
    ks.COMPARE,
    ks.BINARY_VAR_CONST,
    ks.COMPARE_VAR_CONST,
    ks.ARRAY_LOAD,
}


def _reg_inputs(key: StencilKey) -> int:
    return sum(1 for l in key.locs if l == LOC_REG)


def _not_both_lit(key: StencilKey) -> bool:
    return not (key.locs and all(l == LOC_LIT for l in key.locs))


def _no_lit_divisor(key: StencilKey) -> bool:
    if key.op in ("div", "mod") and len(key.locs) == 2:
        return key.locs[1] != LOC_LIT
    return True


def _no_f64_divmod(key: StencilKey) -> bool:
    return not (key.ty == "f64" and key.op in ("div", "mod"))


def _watermark_reachable(key: StencilKey) -> bool:
    """Prune pass-through counts the planner can never request."""
    if key.pt + _reg_inputs(key) > ks.MAX_PT:
        return False
    if key.kind in _PRODUCERS and not key.spill and key.pt + 1 > ks.MAX_PT:
        return False
    return True


FILTERS = {
    "not_both_lit": _not_both_lit,
    "no_lit_divisor": _no_lit_divisor,
    "no_f64_divmod": _no_f64_divmod,
    "watermark_reachable": _watermark_reachable,
}


# -- expansion ----------------------------------------------------------------


def expand(manifest: Manifest) -> list[tuple[StencilKey, dict]]:
    """All (key, compile parameters) pairs, sorted by canonical key bytes."""
    out: dict[StencilKey, dict] = {}
    for entry in manifest.entries:
        preds = [FILTERS[name] for name in entry.filters]
        produced = 0
        for op, ty, locs, pt, spill, n in itertools.product(
            entry.ops, entry.types, entry.locs, entry.pt, entry.spill, entry.n
        ):
            key = StencilKey(
                entry.kind, op, ty, tuple(locs or ""), int(pt), bool(spill), int(n)
            )
            if not all(p(key) for p in preds):
                continue
            if key in out:
                raise ValueError(f"duplicate key {key.canonical().decode()}")
            out[key] = compile_params(key, entry.source)
            produced += 1
        if produced == 0:
            raise EmptyExpansion(
                f"entry {entry.kind} ({entry.source}) expanded to nothing"
            )
    if not out:
        raise EmptyExpansion("manifest produced no stencils")
    return sorted(out.items(), key=lambda kv: kv[0].canonical())


_TY_CODE = {"i32": 0, "i64": 1, "f64": 2, "bool": 3, "ptr": 4}
_OP_CODE = {
    "add": 0, "sub": 1, "mul": 2, "div": 3, "mod": 4,
    "eq": 0, "ne": 1, "lt": 2, "le": 3, "gt": 4, "ge": 5,
}
_LOC_CODE = {LOC_REG: 0, LOC_STACK: 1, LOC_LIT: 2}


def compile_params(key: StencilKey, source: str) -> dict:
    """Preprocessor definitions + code model that instantiate one variant."""
    defines: dict[str, str] = {"CP_STENCIL": key.symbol()}
    if key.op is not None:
        defines["OP"] = str(_OP_CODE[key.op])
    if key.ty is not None:
        defines["TY"] = str(_TY_CODE[key.ty])
    defines["PT"] = str(key.pt)
    defines["SPILL"] = "1" if key.spill else "0"
    defines["N"] = str(key.n)
    for i, loc in enumerate(key.locs):
        defines[f"LOC{i}"] = str(_LOC_CODE[loc])

    # slot positions: register operands sit above the pass-throughs in
    # evaluation order; the result replaces the first consumed slot
    slot = key.pt + 1
    names = _operand_names(key)
    for name, loc in zip(names, key.locs):
        if loc == LOC_REG:
            defines[f"POS_{name.upper()}"] = str(slot)
            slot += 1

    for role, _width in ks.value_holes(key):
        defines[f"ORD_{role.upper()}"] = str(ks.hole_roles(key)[role])

    # continuation argument lists (the uniform six-slot signature)
    slots = ["cp_f"] + [f"s{i}" for i in range(1, 6)]
    defines["CP_CONT_ARGS"] = ", ".join(slots)
    out_slots = list(slots)
    out_slots[key.pt + 1] = "(r)"
    defines["CP_CONT_ARGS_OUT(r)"] = ", ".join(out_slots)
    defines["CP_CONT_ARGS_CLOBBERED(r)"] = ", ".join(
        ["cp_f", "(r)"] + ["0"] * 4
    )
    if key.kind == ks.THUNK:
        args = ["CP_VAL(ORD_POOL)"]
        args += [f"cp_argv[{i}]" for i in range(key.n)]
        args += ["0"] * (5 - key.n)
        defines["CP_THUNK_CALL_ARGS"] = ", ".join(args)

    return {
        "source": source,
        "defines": defines,
        "wide_model": ks.needs_wide_model(key),
    }


def _operand_names(key: StencilKey):
    if key.kind in (ks.BINARY, ks.COMPARE):
        return ["lhs", "rhs"]
    if key.kind == ks.CALL_INVOKE:
        return ["nf"] + [f"arg{i}" for i in range(key.n)]
    if key.kind == ks.EXTERNAL_CALL:
        return [f"arg{i}" for i in range(key.n)]
    if key.kind == ks.ARRAY_LOAD:
        return ["base", "idx"]
    if key.kind == ks.ARRAY_STORE:
        return ["base", "idx", "val"]
    if key.kind in (ks.BRANCH,):
        return ["cond"]
    if key.kind in (ks.VAR_STORE,):
        return ["src"]
    if key.kind == ks.RET:
        return ["val"]
    return []


# -- the default manifest ------------------------------------------------------


def _locs2(choices="RSL", exclude_lhs_lit=True):
    out = []
    for a in choices:
        for b in choices:
            if exclude_lhs_lit and a == LOC_LIT:
                continue
            out.append(a + b)
    return out


def default_manifest() -> Manifest:
    """The stencil set the code generator targets (see stencils/)."""
    int_ops = ["add", "sub", "mul", "div", "mod"]
    cmp_ops = ["eq", "ne", "lt", "le", "gt", "ge"]
    pt_all = list(range(ks.MAX_PT + 1))
    rs2 = [a + b for a in "RS" for b in "RS"]
    entries = [
        Entry(
            ks.LITERAL, "literal.c", types=["i32", "i64", "f64", "bool"],
            pt=pt_all, spill=[False, True], filters=["watermark_reachable"],
        ),
        Entry(
            ks.VAR_LOAD, "var_load.c",
            pt=pt_all, spill=[False, True], filters=["watermark_reachable"],
        ),
        Entry(ks.VAR_STORE, "var_store.c", locs=["R", "S"]),
        Entry(
            ks.VAR_STORE, "var_store.c", locs=["L"],
            types=["i32", "i64", "f64", "bool"],
        ),
        Entry(
            ks.BINARY, "binary.c", ops=int_ops, types=["i32", "i64"],
            locs=_locs2(), pt=pt_all, spill=[False, True],
            filters=["not_both_lit", "no_lit_divisor", "watermark_reachable"],
        ),
        Entry(
            ks.BINARY, "binary.c", ops=["add", "sub", "mul"], types=["f64"],
            locs=_locs2(), pt=pt_all, spill=[False, True],
            filters=["not_both_lit", "watermark_reachable"],
        ),
        Entry(
            ks.COMPARE, "compare.c", ops=cmp_ops, types=["i32", "i64", "f64"],
            locs=_locs2(), pt=pt_all, spill=[False, True],
            filters=["not_both_lit", "watermark_reachable"],
        ),
        Entry(ks.BRANCH, "branch.c", locs=["R", "S"]),
        Entry(ks.JUMP, "jump.c"),
        Entry(ks.RET, "ret.c", locs=["", "R", "S"]),
        Entry(
            ks.RET, "ret.c", locs=["L"], types=["i32", "i64", "f64", "bool"],
        ),
        Entry(ks.ENTRY, "entry.c", n=list(range(ks.MAX_ARITY + 1))),
        Entry(ks.CALL_FRAME, "call_frame.c", spill=[False, True]),
        *[
            Entry(
                ks.CALL_INVOKE, "call_invoke.c",
                locs=["".join(c) for c in itertools.product("RS", repeat=1 + n)],
                spill=[False, True], n=[n],
            )
            for n in range(ks.MAX_ARITY + 1)
        ],
        *[
            Entry(
                ks.EXTERNAL_CALL, "external_call.c",
                locs=["".join(c) for c in itertools.product("RS", repeat=n)] or [""],
                spill=[False, True], n=[n],
            )
            for n in range(ks.MAX_EXT_ARITY + 1)
        ],
        Entry(
            ks.IF_CMP_VAR_CONST, "if_cmp_var_const.c",
            ops=cmp_ops, types=["i32", "i64"],
        ),
        Entry(
            ks.BINARY_VAR_CONST, "binary_var_const.c",
            ops=["add", "sub", "mul"], types=["i32", "i64"],
            pt=pt_all, spill=[False, True], filters=["watermark_reachable"],
        ),
        Entry(
            ks.COMPARE_VAR_CONST, "compare_var_const.c",
            ops=cmp_ops, types=["i32", "i64"],
            pt=pt_all, spill=[False, True], filters=["watermark_reachable"],
        ),
        Entry(
            ks.ARRAY_LOAD, "array_load.c", types=["i32", "i64", "f64", "bool"],
            locs=rs2, pt=pt_all, spill=[False, True],
            filters=["watermark_reachable"],
        ),
        Entry(
            ks.ARRAY_STORE, "array_store.c", types=["i32", "i64", "f64", "bool"],
            locs=[a + b for a in rs2 for b in "RS"],
        ),
        Entry(ks.THUNK, "thunk.c", n=list(range(ks.MAX_ARITY + 1))),
    ]
    return Manifest(entries)
