"""Build-time stencil extraction: manifest expansion, toolchain driving,
object-file parsing, and stencil library construction."""

from .manifest import EmptyExpansion, Manifest, default_manifest, expand
from .build import (
    CompileFailed,
    ToolchainMissing,
    build_library,
    compile_stencil,
    extract,
)
from .elf import HoleOutOfCode, ObjectImage, UnknownRelocationKind

__all__ = [
    "Manifest",
    "default_manifest",
    "expand",
    "EmptyExpansion",
    "ObjectImage",
    "UnknownRelocationKind",
    "HoleOutOfCode",
    "compile_stencil",
    "extract",
    "build_library",
    "CompileFailed",
    "ToolchainMissing",
]
