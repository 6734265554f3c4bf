"""copatch: a copy-and-patch baseline JIT for a small C-like language.

The package splits into a build-time half that turns parameterized C snippets
into a patchable binary stencil library, and a runtime half that compiles
source to executable machine code by copying stencils contiguously and
patching holes. An AST interpreter with identical semantics serves as the
differential-testing oracle and performance baseline.
"""

from .lang import Module, TypedModule, ValueType, typecheck
from .parser import parse, unparse

__all__ = [
    "Module",
    "TypedModule",
    "ValueType",
    "typecheck",
    "parse",
    "unparse",
]

__version__ = "0.1.0"
