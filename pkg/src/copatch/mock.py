"""Synthetic stencils for tests and toolchain-free benchmarks.

Fabricated stencils carry realistic patch records (absolute value holes,
pc-relative continuation sites, an elidable trailing jump on every
single-continuation kind) over inert filler bytes, so the whole planner,
graph builder and emitter run without a compiled stencil library.
"""

from __future__ import annotations

import hashlib

from . import keyspace as ks
from .stencil import (
    ARCH_ANY,
    PatchRecord,
    Stencil,
    StencilKey,
    StencilLibrary,
    cont,
    val,
)


def fabricate(key: StencilKey) -> Stencil:
    """Build a deterministic synthetic stencil for one key."""
    holes = ks.value_holes(key)  # validates the key shape
    nconts = ks.cont_count(key.kind)
    code = bytearray(hashlib.sha1(key.canonical()).digest()[:4])
    patches = []
    for ordinal, (_role, width) in enumerate(holes):
        code.append(0x4D)
        site = len(code)
        code += bytes(width // 8)
        patches.append(PatchRecord(site, width, 0, False, True, val(ordinal)))
    if nconts == 2:
        # conditional: both edges are explicit, non-elidable jumps
        code.append(0xEB)
        site = len(code)
        code += bytes(4)
        patches.append(PatchRecord(site, 32, -4, True, True, cont(1)))
    tail = None
    if nconts >= 1:
        tail_off = len(code)
        code.append(0xE9)
        site = len(code)
        code += bytes(4)
        patches.append(PatchRecord(site, 32, -4, True, True, cont(0)))
        if ks.has_elidable_tail(key.kind):
            tail = (tail_off, 5)
    return Stencil(key, bytes(code), tuple(patches), tail)


class MockLibrary(StencilLibrary):
    """Stencil library that fabricates variants on first use."""

    def __init__(self):
        super().__init__(arch=ARCH_ANY)

    def select(self, key: StencilKey) -> Stencil:
        st = self.stencils.get(key)
        if st is None:
            st = fabricate(key)
            self.stencils[key] = st
        return st
