"""Drive the C toolchain over the manifest and assemble the stencil library.

Each stencil is one translation unit compiled at maximum optimization with
a fixed flag set; holes are extern-symbol references, so the relocation
records of the object file locate them exactly. Variants with 64-bit holes
are compiled under the medium code model (the big-extern-array declaration
in holes.h then forces movabs/R_X86_64_64 for those symbols).
"""

from __future__ import annotations

import concurrent.futures
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .. import keyspace as ks
from ..stencil import (
    ARCH_X86_64,
    PatchRecord,
    Stencil,
    StencilKey,
    StencilLibrary,
    cont,
    ext,
    save_library,
    val,
)
from . import elf
from .elf import HoleOutOfCode, ObjectImage, UnknownRelocationKind
from .manifest import Manifest, expand


class ToolchainMissing(Exception):
    pass


class CompileFailed(Exception):
    def __init__(self, key: StencilKey, stderr: str):
        super().__init__(f"{key.canonical().decode()}: {stderr.strip()[:2000]}")
        self.key = key
        self.stderr = stderr


class NoTrailingJump(Exception):
    def __init__(self, key: StencilKey):
        super().__init__(
            f"{key.canonical().decode()}: must-elide stencil does not end in "
            "an unconditional jump to continuation 0"
        )
        self.key = key


BASE_FLAGS = [
    "-O2",
    "-fno-pic",
    "-fno-stack-protector",
    "-fomit-frame-pointer",
    "-fno-asynchronous-unwind-tables",
    "-fno-unwind-tables",
    "-fcf-protection=none",
    "-fno-jump-tables",
    "-std=c11",
    "-Wall",
    "-Werror",
]


def find_toolchain(explicit: str | None = None) -> str:
    cc = explicit or os.environ.get("COPATCH_CC", "clang")
    path = shutil.which(cc)
    if path is None:
        raise ToolchainMissing(f"C compiler {cc!r} not found on PATH")
    return path


def compile_stencil(
    key: StencilKey,
    params: dict,
    src_dir,
    out_path,
    toolchain: str,
) -> None:
    """Compile one stencil translation unit to an object file."""
    cmd = [toolchain, *BASE_FLAGS]
    if params["wide_model"]:
        cmd.append("-mcmodel=medium")
    for name, value in params["defines"].items():
        cmd.append(f"-D{name}={value}")
    cmd += ["-c", str(Path(src_dir) / params["source"]), "-o", str(out_path)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CompileFailed(key, proc.stderr or proc.stdout)


def load_object(path) -> ObjectImage:
    with open(path, "rb") as f:
        return elf.parse_object(f.read())


_RELOC_SHAPE = {
    # rtype -> (width, sub_site, add_target)
    elf.R_X86_64_64: (64, False, True),
    elf.R_X86_64_PC32: (32, True, True),
    elf.R_X86_64_PLT32: (32, True, True),
    elf.R_X86_64_32: (32, False, True),
    elf.R_X86_64_32S: (32, False, True),
}


def extract(obj: ObjectImage, key: StencilKey) -> Stencil:
    """Turn one compiled stencil function into a Stencil."""
    symbol = key.symbol()
    if symbol not in obj.symbols:
        raise KeyError(f"symbol {symbol} not in object")
    code = obj.function_bytes(symbol)
    sym = obj.symbols[symbol]
    patches = []
    for r in obj.function_relocs(symbol):
        if r.rtype not in _RELOC_SHAPE:
            raise UnknownRelocationKind(r.rtype, r.symbol)
        width, sub_site, add_target = _RELOC_SHAPE[r.rtype]
        site = r.offset - sym.value
        if site + width // 8 > len(code):
            raise HoleOutOfCode(f"{symbol}: patch at {site} beyond {len(code)}")
        patches.append(
            PatchRecord(site, width, r.addend, sub_site, add_target, _target(r.symbol))
        )
    tail = None
    if ks.has_elidable_tail(key.kind):
        tail = _trailing_jump(key, code, patches)
    return Stencil(key, code, tuple(patches), tail)


def _target(symbol: str):
    if symbol.startswith("__cp_cont_"):
        return cont(int(symbol[10:]))
    if symbol.startswith("__cp_val_"):
        return val(int(symbol[9:]))
    return ext(symbol)


def _trailing_jump(key, code, patches):
    """The elidable tail: a final `jmp rel32` whose sole relocation is the
    last patch site, ends at code length, and targets continuation 0."""
    if len(code) >= 5 and code[-5] == 0xE9 and patches:
        last = max(patches, key=lambda p: p.site)
        if (
            last.site == len(code) - 4
            and last.width == 32
            and last.sub_site
            and last.target == cont(0)
        ):
            return (len(code) - 5, 5)
    raise NoTrailingJump(key)


@dataclass
class BuildSummary:
    stencils: int
    code_bytes: int
    out: str
    arch: str = "x86_64"

    def as_json(self) -> dict:
        return {
            "stencils": self.stencils,
            "code_bytes": self.code_bytes,
            "out": self.out,
            "arch": self.arch,
        }


def build_library(
    manifest: Manifest,
    src_dir,
    out_path,
    toolchain: str | None = None,
    jobs: int = 0,
    keep_objects=None,
) -> BuildSummary:
    """Compile and extract every manifest key; write the library atomically."""
    cc = find_toolchain(toolchain)
    pairs = expand(manifest)
    jobs = jobs or os.cpu_count() or 1
    lib = StencilLibrary(arch=ARCH_X86_64)

    with tempfile.TemporaryDirectory(prefix="copatch-objs-") as tmp:
        obj_dir = Path(keep_objects) if keep_objects else Path(tmp)
        obj_dir.mkdir(parents=True, exist_ok=True)

        def one(pair):
            key, params = pair
            obj_path = obj_dir / (key.symbol() + ".o")
            compile_stencil(key, params, src_dir, obj_path, cc)
            return key, extract(load_object(obj_path), key)

        if jobs > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(one, pairs))
        else:
            results = [one(p) for p in pairs]

    for _key, stencil in results:
        lib.add(stencil)

    out_path = Path(out_path)
    tmp_path = out_path.with_suffix(out_path.suffix + ".tmp")
    size = save_library(lib, tmp_path)
    os.replace(tmp_path, out_path)
    total_code = sum(len(s.code) for s in lib)
    return BuildSummary(len(lib), total_code, str(out_path))
