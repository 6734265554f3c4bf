"""Depth-first contiguous emission of a CPS graph, with jump elision.

Stencils are copied in graph order into a target region. A node whose
ordinal-0 successor is the next emitted node has its elidable trailing jump
truncated; every other continuation edge is patched with the successor's
address. Call targets, external adapter addresses and frame-pool constants
are unresolved at emit time and recorded as fixups for `link_module`.
"""

from __future__ import annotations

import struct
from array import array
from dataclasses import dataclass, field

from . import kernel
from .codegen import CPSGraph
from .stencil import (
    HOLE_CONT,
    HOLE_EXT,
    HOLE_VAL,
    PatchOverflow,
    PatchRecord,
    StencilLibrary,
)


class EmitOverflow(Exception):
    def __init__(self, needed: int):
        super().__init__(f"emission region too small, need {needed} more bytes")
        self.needed = needed


class UnresolvedExternal(Exception):
    def __init__(self, name: str):
        super().__init__(f"external symbol {name!r} is not registered")
        self.name = name


@dataclass
class ByteRegion:
    """Plain in-memory emission target for tests and benchmarks."""

    buffer: bytearray
    base: int = 0x7F0000000000
    fill: int = 0

    @property
    def capacity(self) -> int:
        return len(self.buffer)


@dataclass
class Fixup:
    kind: str  # 'fn' | 'ext' | 'pool'
    payload: object  # function index, symbol name, or 'base'/'limit'
    record: PatchRecord
    node_addr: int  # absolute address the owning stencil was copied to
    buf_off: int  # region-relative offset of the copy


@dataclass
class CompiledFunction:
    """One emitted function and its inspection data.

    `retained_jumps` counts continuation edges that kept a jump (a
    conditional node contributes one per edge); `spans` maps each CPS node
    to its [start, end) region offsets.
    """

    name: str
    base_off: int
    entry_off: int
    length: int
    retained_jumps: int
    spans: list[tuple[int, int]]
    fixups: list[Fixup] = field(repr=False, default_factory=list)
    frame_size: int = 0
    spill_count: int = 0
    call_edges: int = 0
    node_count: int = 0


def expected_retained_jumps(graph: CPSGraph, elide: bool = True) -> int:
    """The jump-retention law, computed from graph geometry alone.

    A node needs a jump per continuation edge except an unconditional edge
    to the immediately following node; conditional nodes always keep both.
    """
    count = 0
    for i, node in enumerate(graph.nodes):
        if len(node.conts) == 2:
            count += 2
        elif len(node.conts) == 1:
            if not (elide and node.conts[0] == i + 1):
                count += 1
    return count


def emit(
    graph: CPSGraph,
    lib: StencilLibrary,
    region,
    elide: bool = True,
) -> CompiledFunction:
    """Copy and patch a whole CPS graph into `region`."""
    nodes = graph.nodes
    n = len(nodes)
    start = region.fill

    offs = [0] * n
    sizes = [0] * n
    elided = [False] * n
    off = start
    for i, node in enumerate(nodes):
        st = node.stencil or lib.select(node.key)
        size = len(st.code)
        if (
            elide
            and st.tail is not None
            and node.conts
            and node.conts[0] == i + 1
        ):
            size -= st.tail[1]
            elided[i] = True
        offs[i] = off
        sizes[i] = size
        off += size
    needed = off - start
    if off > region.capacity:
        raise EmitOverflow(off - region.capacity)

    base = region.base
    buffer = region.buffer
    patcher = kernel.patch_and_copy
    retained = 0
    fixups: list[Fixup] = []
    for i, node in enumerate(nodes):
        st = node.stencil or lib.select(node.key)
        sites, widths, flags, addends, targets = st.packed
        values = array("q", bytes(8 * len(targets)))
        copy_len = sizes[i]
        node_addr = base + offs[i]
        deferred = (
            {ordinal: (k, p) for ordinal, k, p in node.fixups}
            if node.fixups
            else None
        )
        for pi, (tkind, targ) in enumerate(targets):
            if tkind == HOLE_CONT:
                values[pi] = base + offs[node.conts[targ]]
            elif tkind == HOLE_VAL and (deferred is None or targ not in deferred):
                values[pi] = _wrap64(node.vals[targ])
            else:
                # resolved at link; a self-referential placeholder keeps
                # pc-relative sites in range meanwhile
                p = st.patches[pi]
                values[pi] = node_addr + p.site if p.sub_site else 0
                if p.site + p.width // 8 <= copy_len:
                    kind, payload = (
                        ("ext", targ) if tkind == HOLE_EXT else deferred[targ]
                    )
                    fixups.append(Fixup(kind, payload, p, node_addr, offs[i]))
        bad = patcher(
            buffer, offs[i], node_addr, st.code, copy_len,
            sites, widths, flags, addends, values,
        )
        if bad >= 0:
            raise PatchOverflow(st.patches[bad], values[bad])
        nconts = len(node.conts)
        if nconts:
            retained += nconts - (1 if elided[i] else 0)

    region.fill = start + needed
    return CompiledFunction(
        name=graph.fn_name,
        base_off=start,
        entry_off=offs[0] if n else start,
        length=needed,
        retained_jumps=retained,
        spans=[(offs[i], offs[i] + sizes[i]) for i in range(n)],
        fixups=fixups,
        frame_size=graph.frame_size,
        spill_count=graph.spill_count,
        call_edges=graph.call_edges,
        node_count=n,
    )


def link_module(
    funcs: list[CompiledFunction],
    region,
    entries: dict[object, int],
    externals: dict[str, int],
    pool_base: int = 0,
    pool_limit: int = 0,
) -> None:
    """Patch deferred holes: call targets, adapters, frame-pool constants."""
    for cf in funcs:
        for fx in cf.fixups:
            if fx.kind == "fn":
                value = entries[fx.payload]
            elif fx.kind == "ext":
                if fx.payload not in externals:
                    raise UnresolvedExternal(fx.payload)
                value = externals[fx.payload]
            elif fx.payload == "base":
                value = pool_base
            else:
                value = pool_limit
            apply_patch(region.buffer, fx.record, fx.node_addr, fx.buf_off, value)


def apply_patch(buffer, record: PatchRecord, node_addr: int, buf_off: int, value: int):
    """Write one patch into already-emitted code (link-time fixups)."""
    v = record.addend
    if record.add_target:
        v += value
    if record.sub_site:
        v -= node_addr + record.site
    v &= (1 << 64) - 1
    if v & (1 << 63):
        v -= 1 << 64
    if record.width == 32:
        if not -(1 << 31) <= v < (1 << 31):
            raise PatchOverflow(record, v)
        struct.pack_into("<I", buffer, buf_off + record.site, v & 0xFFFFFFFF)
    else:
        struct.pack_into("<Q", buffer, buf_off + record.site, v & (1 << 64) - 1)


def _wrap64(v: int) -> int:
    v &= (1 << 64) - 1
    return v - (1 << 64) if v & (1 << 63) else v
