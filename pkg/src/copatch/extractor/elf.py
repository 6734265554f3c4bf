"""Minimal ELF64 relocatable-object reader.

Only what stencil extraction needs: section bytes, the symbol table, and
RELA relocation entries. Anything outside the x86-64 relocation kinds the
patch model covers is rejected rather than approximated.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass


class ElfError(Exception):
    pass


class UnknownRelocationKind(ElfError):
    def __init__(self, rtype: int, symbol: str):
        super().__init__(f"relocation type {rtype} against {symbol!r} not supported")
        self.rtype = rtype
        self.symbol = symbol


class HoleOutOfCode(ElfError):
    pass


# x86-64 relocation types we understand
R_X86_64_64 = 1
R_X86_64_PC32 = 2
R_X86_64_PLT32 = 4
R_X86_64_32 = 10
R_X86_64_32S = 11

SUPPORTED_RELOCS = {R_X86_64_64, R_X86_64_PC32, R_X86_64_PLT32, R_X86_64_32, R_X86_64_32S}

_EHDR = struct.Struct("<16sHHIQQQIHHHHHH")
_SHDR = struct.Struct("<IIQQQQIIQQ")
_SYM = struct.Struct("<IBBHQQ")
_RELA = struct.Struct("<QQq")

SHT_SYMTAB = 2
SHT_RELA = 4


@dataclass
class Symbol:
    name: str
    section: int
    value: int
    size: int
    info: int

    @property
    def is_function(self) -> bool:
        return self.info & 0xF == 2  # STT_FUNC


@dataclass
class Reloc:
    section: int  # section the relocation applies to
    offset: int
    rtype: int
    symbol: str
    addend: int


@dataclass
class ObjectImage:
    """Parsed relocatable object: section bytes, symbols, relocations."""

    sections: list[bytes]
    section_names: list[str]
    symbols: dict[str, Symbol]
    relocs: list[Reloc]

    def function_bytes(self, name: str) -> bytes:
        sym = self.symbols[name]
        return self.sections[sym.section][sym.value : sym.value + sym.size]

    def function_relocs(self, name: str) -> list[Reloc]:
        sym = self.symbols[name]
        lo, hi = sym.value, sym.value + sym.size
        out = [
            r
            for r in self.relocs
            if r.section == sym.section and lo <= r.offset < hi
        ]
        out.sort(key=lambda r: r.offset)
        return out


def parse_object(data: bytes) -> ObjectImage:
    if len(data) < _EHDR.size or data[:4] != b"\x7fELF":
        raise ElfError("not an ELF object")
    (
        ident,
        e_type,
        e_machine,
        _ver,
        _entry,
        _phoff,
        e_shoff,
        _flags,
        _ehsize,
        _phentsize,
        _phnum,
        e_shentsize,
        e_shnum,
        e_shstrndx,
    ) = _EHDR.unpack_from(data, 0)
    if ident[4] != 2 or ident[5] != 1:
        raise ElfError("need little-endian ELF64")
    if e_type != 1:  # ET_REL
        raise ElfError("not a relocatable object")
    if e_machine != 62:  # EM_X86_64
        raise ElfError(f"unsupported machine {e_machine}")

    shdrs = []
    for i in range(e_shnum):
        shdrs.append(_SHDR.unpack_from(data, e_shoff + i * e_shentsize))
    shstr = _section_body(data, shdrs[e_shstrndx])

    sections: list[bytes] = []
    names: list[str] = []
    for sh in shdrs:
        names.append(_cstr(shstr, sh[0]))
        # SHT_NOBITS has no file content
        sections.append(b"" if sh[1] == 8 else _section_body(data, sh))

    symbols: dict[str, Symbol] = {}
    sym_by_index: dict[int, str] = {}
    relocs: list[Reloc] = []
    for idx, sh in enumerate(shdrs):
        if sh[1] == SHT_SYMTAB:
            strtab = sections[sh[6]]  # sh_link
            body = sections[idx]
            count = len(body) // _SYM.size
            for i in range(count):
                name_off, info, _other, shndx, value, size = _SYM.unpack_from(
                    body, i * _SYM.size
                )
                name = _cstr(strtab, name_off)
                sym_by_index[i] = name
                if name:
                    symbols[name] = Symbol(name, shndx, value, size, info)
    for idx, sh in enumerate(shdrs):
        if sh[1] == SHT_RELA:
            target = sh[7]  # sh_info: section relocated
            body = sections[idx]
            for i in range(len(body) // _RELA.size):
                offset, info, addend = _RELA.unpack_from(body, i * _RELA.size)
                relocs.append(
                    Reloc(target, offset, info & 0xFFFFFFFF, sym_by_index[info >> 32], addend)
                )
    return ObjectImage(sections, names, symbols, relocs)


def _section_body(data: bytes, sh) -> bytes:
    off, size = sh[4], sh[5]
    return data[off : off + size]


def _cstr(table: bytes, off: int) -> str:
    end = table.index(b"\x00", off)
    return table[off:end].decode()
