"""Standard host functions for programs, benchmarks and the fuzz harness."""

from __future__ import annotations

import ctypes

from .runtime import ExternalRegistry


class Arena:
    """Zeroed scratch memory handed out to generated code and interpreter.

    Both tiers call the same allocator, so a differential run observes the
    same addresses and contents. reset() rewinds and re-zeroes.
    """

    def __init__(self, capacity: int = 1 << 20):
        self._buf = ctypes.create_string_buffer(capacity)
        self.capacity = capacity
        self.used = 0

    def reset(self):
        ctypes.memset(self._buf, 0, self.used or 1)
        self.used = 0

    def alloc(self, nbytes: int) -> int:
        nbytes = (max(0, nbytes) + 7) & ~7
        if self.used + nbytes > self.capacity:
            raise MemoryError("arena exhausted")
        addr = ctypes.addressof(self._buf) + self.used
        self.used += nbytes
        return addr


def standard_registry(arena: Arena | None = None) -> tuple[ExternalRegistry, Arena]:
    """Registry with the externals the bundled programs rely on.

    alloc_i64(n) / scratch(n): n zeroed 8-byte slots from the arena.
    print_i64(x): writes one line to stdout, never fails.
    fail_always(): signals external failure (exercises error unwinding).
    """
    arena = arena or Arena()
    reg = ExternalRegistry()

    def alloc(block) -> bool:
        block[0] = arena.alloc(8 * _signed(block[0]))
        return False

    def print_i64(block) -> bool:
        print(_signed(block[0]))
        return False

    def fail_always(block) -> bool:
        return True

    reg.register("alloc_i64", alloc, 1)
    reg.register("scratch", alloc, 1)
    reg.register("print_i64", print_i64, 1)
    reg.register("fail_always", fail_always, 0)
    return reg, arena


def _signed(bits: int) -> int:
    bits &= (1 << 64) - 1
    return bits - (1 << 64) if bits & (1 << 63) else bits
