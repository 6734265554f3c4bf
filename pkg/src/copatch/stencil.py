"""Binary stencil data model: code bytes, patch records, keys, library.

A stencil is machine code with holes. Each hole is described by a
PatchRecord whose value is computed at materialization time as

    value = addend (+ target-address) (- (dest-address + site-offset))

truncated to the record width. The two flags cover absolute-64, absolute-32
and pc-relative-32 patches without naming platform relocation types.

The serialized library format (little-endian throughout):

    magic 'CPSL', u16 version, u16 arch-tag, u32 stencil-count
    per stencil, ordered by canonical key bytes:
        u32 key-length, key bytes (canonical ASCII form)
        u32 code-length, code bytes
        u16 patch-count, patches as
            {u32 site, u8 width, u8 flags, i64 addend, u8 target-kind, payload}
            payload: ordinal targets u16; external targets u16 length + UTF-8
        u8 tail-present, then {u32 offset, u32 length} when present
"""

from __future__ import annotations

import struct
from array import array
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple

from . import kernel

VERSION = 1

ARCH_ANY = 0  # synthetic/mock libraries, loadable everywhere
ARCH_X86_64 = 1

_ARCH_NAMES = {ARCH_ANY: "any", ARCH_X86_64: "x86_64"}


def host_arch() -> int:
    import platform

    return ARCH_X86_64 if platform.machine() in ("x86_64", "AMD64") else ARCH_ANY


# ---------------------------------------------------------------------------
# holes

HOLE_CONT = 0
HOLE_VAL = 1
HOLE_EXT = 2


class Hole(NamedTuple):
    """A patch target: continuation ordinal, value ordinal, or external symbol."""

    kind: int
    arg: int | str

    def __str__(self):
        if self.kind == HOLE_CONT:
            return f"cont{self.arg}"
        if self.kind == HOLE_VAL:
            return f"val{self.arg}"
        return f"ext:{self.arg}"


def cont(n: int) -> Hole:
    return Hole(HOLE_CONT, n)


def val(n: int) -> Hole:
    return Hole(HOLE_VAL, n)


def ext(name: str) -> Hole:
    return Hole(HOLE_EXT, name)


class PatchRecord(NamedTuple):
    site: int  # byte offset of the patched scalar within the code
    width: int  # 32 or 64
    addend: int
    sub_site: bool  # subtract the absolute address of the patch site
    add_target: bool  # add the hole value (an address or raw 64-bit value)
    target: Hole


# ---------------------------------------------------------------------------
# keys

LOC_REG = "R"
LOC_STACK = "S"
LOC_LIT = "L"


class StencilKey(NamedTuple):
    """Identifies one stencil variant; canonical form doubles as map key."""

    kind: str
    op: str | None = None
    ty: str | None = None
    locs: tuple[str, ...] = ()
    pt: int = 0
    spill: bool = False
    n: int = 0  # arity for entry/call/external-call/thunk kinds

    def canonical(self) -> bytes:
        return (
            f"{self.kind}:{self.op or '_'}:{self.ty or '_'}:"
            f"{''.join(self.locs) or '_'}:p{self.pt}:s{int(self.spill)}:n{self.n}"
        ).encode()

    @staticmethod
    def from_canonical(blob: bytes) -> "StencilKey":
        kind, op, ty, locs, pt, spill, n = blob.decode().split(":")
        return StencilKey(
            kind,
            None if op == "_" else op,
            None if ty == "_" else ty,
            () if locs == "_" else tuple(locs),
            int(pt[1:]),
            spill[1:] == "1",
            int(n[1:]),
        )

    def symbol(self) -> str:
        return "__cp_stencil_" + self.canonical().hex()


# ---------------------------------------------------------------------------
# stencils


@dataclass
class Stencil:
    key: StencilKey
    code: bytes
    patches: tuple[PatchRecord, ...]
    tail: tuple[int, int] | None = None  # elidable (offset, length)
    _packed: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for p in self.patches:
            if p.site + p.width // 8 > len(self.code):
                raise ValueError(f"patch at {p.site} exceeds code length")
        if self.tail is not None:
            off, length = self.tail
            if off + length != len(self.code):
                raise ValueError("elidable tail must end at code length")
            inside = [
                p
                for p in self.patches
                if p.target == cont(0) and off <= p.site < off + length
            ]
            if len(inside) != 1:
                raise ValueError("elidable tail must hold exactly one cont0 patch")

    @property
    def packed(self):
        """Per-stencil emission data baked once: flat patch arrays for the
        kernel. External-symbol targets pack as kind 2 with argument -1;
        their names stay in `patches` for link-time resolution."""
        if self._packed is None:
            sites = array("I", (p.site for p in self.patches))
            widths = array("B", (p.width for p in self.patches))
            flags = array(
                "B", (p.sub_site | (p.add_target << 1) for p in self.patches)
            )
            addends = array("q", (p.addend for p in self.patches))
            tkinds = array("B", (p.target.kind for p in self.patches))
            targs = array(
                "q",
                (
                    -1 if p.target.kind == HOLE_EXT else p.target.arg
                    for p in self.patches
                ),
            )
            has_ext = any(p.target.kind == HOLE_EXT for p in self.patches)
            self._packed = (sites, widths, flags, addends, tkinds, targs, has_ext)
        return self._packed


@dataclass
class StencilLibrary:
    arch: int = ARCH_ANY
    version: int = VERSION
    stencils: dict[StencilKey, Stencil] = field(default_factory=dict)

    def add(self, stencil: Stencil):
        self.stencils[stencil.key] = stencil

    def select(self, key: StencilKey) -> Stencil:
        try:
            return self.stencils[key]
        except KeyError:
            raise MissingVariant(key) from None

    def __len__(self):
        return len(self.stencils)

    def __iter__(self) -> Iterator[Stencil]:
        return iter(self.stencils.values())


def select(lib: StencilLibrary, key: StencilKey) -> Stencil:
    return lib.select(key)


# ---------------------------------------------------------------------------
# errors


class StencilError(Exception):
    pass


class MissingVariant(StencilError):
    def __init__(self, key: StencilKey):
        super().__init__(f"no stencil for {key.canonical().decode()}")
        self.key = key


class MissingHoleValue(StencilError):
    def __init__(self, target: Hole):
        super().__init__(f"no value bound for hole {target}")
        self.target = target


class PatchOverflow(StencilError):
    def __init__(self, record: PatchRecord, value: int):
        super().__init__(
            f"patch value {value:#x} does not fit signed 32 bits at site {record.site}"
        )
        self.record = record
        self.value = value


class BadMagic(StencilError):
    pass


class VersionMismatch(StencilError):
    pass


class ArchMismatch(StencilError):
    pass


class TruncatedFile(StencilError):
    pass


# ---------------------------------------------------------------------------
# materialization


def materialize(
    stencil: Stencil,
    dest_address: int,
    hole_values: Mapping[Hole, int],
    elide_tail: bool = False,
) -> tuple[bytes, int]:
    """Instantiate a stencil at `dest_address` and return (bytes, length).

    Every patch site is overwritten with its computed value; with
    `elide_tail` the trailing jump span is truncated from the copy.
    """
    if elide_tail and stencil.tail is None:
        raise StencilError("stencil has no elidable tail")
    copy_len = len(stencil.code)
    if elide_tail:
        copy_len -= stencil.tail[1]

    values = array("q")
    for p in stencil.patches:
        if p.site >= copy_len:
            values.append(0)
            continue
        if p.target not in hole_values:
            raise MissingHoleValue(p.target)
        values.append(_signed64(hole_values[p.target]))

    out = bytearray(copy_len)
    sites, widths, flags, addends = stencil.packed[:4]
    bad = kernel.patch_and_copy(
        out, 0, dest_address, stencil.code, copy_len, sites, widths, flags, addends, values
    )
    if bad >= 0:
        record = stencil.patches[bad]
        raise PatchOverflow(record, _patch_value(record, dest_address, values[bad]))
    return bytes(out), copy_len


def _signed64(v: int) -> int:
    v &= (1 << 64) - 1
    return v - (1 << 64) if v & (1 << 63) else v


def _patch_value(record: PatchRecord, dest_address: int, target_value: int) -> int:
    value = record.addend
    if record.add_target:
        value += target_value
    if record.sub_site:
        value -= dest_address + record.site
    return value


# ---------------------------------------------------------------------------
# library serialization

_HEADER = struct.Struct("<4sHHI")
_PATCH_HEAD = struct.Struct("<IBBqB")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


def serialize(lib: StencilLibrary) -> bytes:
    out = bytearray()
    out += _HEADER.pack(b"CPSL", lib.version, lib.arch, len(lib.stencils))
    for key in sorted(lib.stencils, key=lambda k: k.canonical()):
        st = lib.stencils[key]
        blob = key.canonical()
        out += _U32.pack(len(blob)) + blob
        out += _U32.pack(len(st.code)) + st.code
        out += _U16.pack(len(st.patches))
        for p in st.patches:
            flags = p.sub_site | (p.add_target << 1)
            out += _PATCH_HEAD.pack(p.site, p.width, flags, p.addend, p.target.kind)
            if p.target.kind == HOLE_EXT:
                name = p.target.arg.encode()
                out += _U16.pack(len(name)) + name
            else:
                out += _U16.pack(p.target.arg)
        if st.tail is None:
            out += b"\x00"
        else:
            out += b"\x01" + _U32.pack(st.tail[0]) + _U32.pack(st.tail[1])
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"need {n} bytes at offset {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))


def deserialize(data: bytes, expect_arch: int | None = None) -> StencilLibrary:
    r = _Reader(data)
    magic, version, arch, count = r.unpack(_HEADER)
    if magic != b"CPSL":
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionMismatch(f"file version {version}, supported {VERSION}")
    if expect_arch is not None and arch not in (ARCH_ANY, expect_arch):
        raise ArchMismatch(
            f"library for {_ARCH_NAMES.get(arch, arch)}, host wants "
            f"{_ARCH_NAMES.get(expect_arch, expect_arch)}"
        )
    lib = StencilLibrary(arch=arch, version=version)
    for _ in range(count):
        (keylen,) = r.unpack(_U32)
        key = StencilKey.from_canonical(r.take(keylen))
        (codelen,) = r.unpack(_U32)
        code = r.take(codelen)
        (npatch,) = r.unpack(_U16)
        patches = []
        for _ in range(npatch):
            site, width, flags, addend, kind = r.unpack(_PATCH_HEAD)
            if kind == HOLE_EXT:
                (namelen,) = r.unpack(_U16)
                target = ext(r.take(namelen).decode())
            else:
                (ordinal,) = r.unpack(_U16)
                target = Hole(kind, ordinal)
            patches.append(
                PatchRecord(site, width, addend, bool(flags & 1), bool(flags & 2), target)
            )
        tail = None
        if r.take(1) == b"\x01":
            (toff,) = r.unpack(_U32)
            (tlen,) = r.unpack(_U32)
            tail = (toff, tlen)
        lib.add(Stencil(key, code, tuple(patches), tail))
    if r.pos != len(data):
        raise TruncatedFile(f"{len(data) - r.pos} trailing bytes")
    return lib


def load_library(path, expect_arch: int | None = None) -> StencilLibrary:
    with open(path, "rb") as f:
        return deserialize(f.read(), expect_arch)


def save_library(lib: StencilLibrary, path):
    data = serialize(lib)
    with open(path, "wb") as f:
        f.write(data)
    return len(data)
