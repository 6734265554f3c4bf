"""Differential testing of the two tiers over the fuzz corpus.

Every program runs through generated machine code and the reference
interpreter on the same input vectors, with the scratch arena reset to the
same state before each run; results compare bit-exactly, including error
flags and traps. Disagreements are minimized by statement pruning before
being reported.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .fuzz import gen_program, input_vectors
from .hostlib import Arena, standard_registry
from .interp import interpret
from .lang import LangError, Module, typecheck
from .parser import unparse
from .runtime import compile_module
from .stencil import StencilLibrary


@dataclass
class DiffReport:
    programs: int = 0
    vectors: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def compare_module(
    module: Module,
    lib: StencilLibrary,
    vectors,
    arena: Arena | None = None,
) -> tuple[bool, list]:
    """Run main() on every vector through both tiers; returns mismatches."""
    tm = typecheck(module)
    registry, arena = standard_registry(arena)
    cm = compile_module(tm, lib, registry=registry)
    bad = []
    try:
        for vec in vectors:
            arena.reset()
            got = cm.invoke("main", vec)
            arena.reset()
            want = interpret(
                tm, "main", vec,
                externals=registry.raw_map(),
                frame_costs=cm.frame_costs,
            )
            if got.key() != want.key():
                bad.append((vec, got, want))
    finally:
        cm.close()
    return not bad, bad


def run_differential(
    lib: StencilLibrary,
    seed: int = 0,
    count: int = 1000,
    budget: int = 30,
    vectors_per_program: int = 3,
) -> DiffReport:
    report = DiffReport()
    arena = Arena()
    for s in range(seed, seed + count):
        module = gen_program(s, budget)
        vectors = input_vectors(module, s, vectors_per_program)
        try:
            ok, bad = compare_module(module, lib, vectors, arena)
        except Exception as exc:  # compile/typecheck bugs count as failures
            report.failures.append((s, None, repr(exc), None, unparse(module)))
            report.programs += 1
            continue
        report.programs += 1
        report.vectors += len(vectors)
        if not ok:
            vec, got, want = bad[0]
            small = minimize(module, lib, vec, arena)
            report.failures.append((s, vec, got, want, unparse(small)))
    return report


def minimize(module: Module, lib: StencilLibrary, vec, arena: Arena) -> Module:
    """Statement-pruning reducer: keep removing statements while the tiers
    still disagree on `vec`. Candidates that no longer typecheck are
    rejected; anything else that still diverges is a smaller reproducer."""

    def disagrees(candidate: Module) -> bool:
        try:
            ok, _bad = compare_module(copy.deepcopy(candidate), lib, [vec], arena)
        except LangError:
            return False
        except Exception:
            return True
        return not ok

    current = copy.deepcopy(module)
    changed = True
    while changed:
        changed = False
        for path, idx in _deletion_points(current):
            candidate = copy.deepcopy(current)
            del _resolve_body(candidate, path)[idx]
            if disagrees(candidate):
                current = candidate
                changed = True
                break  # re-enumerate against the smaller tree
    return current


def _deletion_points(module: Module):
    """(body-path, statement-index) pairs, deepest bodies first so inner
    statements are tried before the constructs that contain them."""
    from .lang import If, While

    points = []

    def walk(path, body):
        for i, s in enumerate(body):
            if isinstance(s, If):
                walk(path + (("then", i),), s.then)
                walk(path + (("else", i),), s.orelse)
            elif isinstance(s, While):
                walk(path + (("body", i),), s.body)
        for i in range(len(body)):
            points.append((path, i))

    for fi, fn in enumerate(module.functions):
        walk((("fn", fi),), fn.body)
    return points


def _resolve_body(module: Module, path):
    body = None
    for step, idx in path:
        if step == "fn":
            body = module.functions[idx].body
        elif step == "then":
            body = body[idx].then
        elif step == "else":
            body = body[idx].orelse
        else:
            body = body[idx].body
    return body
