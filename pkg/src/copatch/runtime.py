"""Executable-memory management and the host boundary of generated code.

Regions are write-xor-execute: emission happens into a writable anonymous
mapping which is sealed (mprotect to read+execute) before any invocation.
Calls enter generated code through a per-function entry thunk, itself a
stencil, whose holes are the target entry and the frame-pool base. External
functions are Python callables wrapped as C callbacks taking one argument
block; a true return signals failure, which generated code propagates to
the entry as the error flag.
"""

from __future__ import annotations

import ctypes
import errno
import mmap as _mmap
from dataclasses import dataclass, field

from . import keyspace as ks
from .codegen import CPSGraph, CPSNode, compile_function, DEFAULT_K
from .emit import CompiledFunction, EmitOverflow, UnresolvedExternal, emit, link_module
from .interp import DEFAULT_POOL_SIZE, InvokeResult
from .lang import TypedModule, bits_to_value, canonical_bits
from .stencil import StencilKey, StencilLibrary

_libc = ctypes.CDLL(None, use_errno=True)
_libc.mprotect.restype = ctypes.c_int
_libc.mprotect.argtypes = (ctypes.c_void_p, ctypes.c_size_t, ctypes.c_int)

_PAGE = _mmap.PAGESIZE


class RuntimeFault(Exception):
    pass


class OutOfMemory(RuntimeFault):
    pass


class PlatformDenied(RuntimeFault):
    pass


class StateError(RuntimeFault):
    pass


class DuplicateSymbol(RuntimeFault):
    pass


class SignatureMismatch(RuntimeFault):
    pass


class _RetPair(ctypes.Structure):
    _fields_ = [("v", ctypes.c_uint64), ("e", ctypes.c_uint64)]


_THUNK_PROTO = ctypes.CFUNCTYPE(_RetPair, ctypes.POINTER(ctypes.c_uint64))
_ADAPTER_PROTO = ctypes.CFUNCTYPE(ctypes.c_bool, ctypes.POINTER(ctypes.c_uint64))


class ExecRegion:
    """Anonymous mapping that is either writable or executable, never both."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        capacity = (capacity + _PAGE - 1) & ~(_PAGE - 1)
        try:
            self._mm = _mmap.mmap(
                -1, capacity, prot=_mmap.PROT_READ | _mmap.PROT_WRITE
            )
        except (OSError, ValueError) as exc:
            if getattr(exc, "errno", None) in (errno.EPERM, errno.EACCES):
                raise PlatformDenied(str(exc)) from exc
            raise OutOfMemory(str(exc)) from exc
        self._export = ctypes.c_char.from_buffer(self._mm)
        self.base = ctypes.addressof(self._export)
        self.capacity = capacity
        self.fill = 0
        self.state = "writable"

    @property
    def buffer(self):
        if self.state != "writable":
            raise StateError("region is sealed; write-xor-execute")
        return self._mm

    def seal(self):
        """Flip the mapping to read+execute. x86-64 needs no icache flush."""
        if self.state == "executable":
            return
        rc = _libc.mprotect(
            self.base, self.capacity, _mmap.PROT_READ | _mmap.PROT_EXEC
        )
        if rc != 0:
            raise PlatformDenied(f"mprotect failed (errno {ctypes.get_errno()})")
        self.state = "executable"

    def close(self):
        if self._mm is None:
            return
        _libc.mprotect(self.base, self.capacity, _mmap.PROT_READ | _mmap.PROT_WRITE)
        self.state = "writable"
        del self._export
        self._mm.close()
        self._mm = None


def alloc_exec(capacity: int) -> ExecRegion:
    return ExecRegion(capacity)


class FramePool:
    """Contiguous frame storage for generated code (not the native stack)."""

    def __init__(self, size: int = DEFAULT_POOL_SIZE):
        self._buf = ctypes.create_string_buffer(size)
        self.base = ctypes.addressof(self._buf)
        self.size = size

    @property
    def limit(self) -> int:
        return self.base + self.size


class _CBlock:
    """Argument block view handed to external adapters (arity u64 slots)."""

    __slots__ = ("_ptr", "_n")

    def __init__(self, ptr, n):
        self._ptr = ptr
        self._n = n

    def __len__(self):
        return self._n

    def __getitem__(self, i):
        if not 0 <= i < self._n:
            raise IndexError(i)
        return self._ptr[i]

    def __setitem__(self, i, value):
        if not 0 <= i < self._n:
            raise IndexError(i)
        self._ptr[i] = value & (1 << 64) - 1


class ExternalRegistry:
    """Named host functions callable from both tiers.

    A raw external takes the argument block (arity 64-bit slots, result
    written to slot 0) and returns True to signal failure. Python
    exceptions are converted to the failure flag.
    """

    def __init__(self):
        self._raw: dict[str, tuple[object, int]] = {}
        self._callbacks: dict[str, object] = {}

    def register(self, name: str, fn, arity: int):
        if name in self._raw:
            raise DuplicateSymbol(name)
        self._raw[name] = (fn, arity)

    def register_typed(self, name: str, params, ret, fn):
        """Wrap a Python function taking/returning typed values."""

        def raw(block) -> bool:
            args = [bits_to_value(block[i], ty) for i, ty in enumerate(params)]
            result = fn(*args)
            if ret is not None:
                block[0] = canonical_bits(result, ret)
            return False

        self.register(name, raw, len(params))

    def raw_map(self) -> dict:
        """name -> raw callable, as the interpreter consumes externals."""
        return {name: fn for name, (fn, _a) in self._raw.items()}

    def address_of(self, name: str) -> int:
        if name not in self._callbacks:
            fn, arity = self._raw[name]
            nslots = max(1, arity)

            def adapter(ptr, _fn=fn, _n=nslots):
                try:
                    return bool(_fn(_CBlock(ptr, _n)))
                except Exception:
                    return True

            cb = _ADAPTER_PROTO(adapter)
            self._callbacks[name] = cb
        return ctypes.cast(self._callbacks[name], ctypes.c_void_p).value

    def addresses(self) -> dict[str, int]:
        return {name: self.address_of(name) for name in self._raw}

    def __contains__(self, name):
        return name in self._raw


def register_external(registry: ExternalRegistry, name: str, fn, arity: int):
    registry.register(name, fn, arity)


# ---------------------------------------------------------------------------
# whole-module compilation


@dataclass
class CompiledModule:
    """Linked, sealed machine code for every function of a module."""

    tmod: TypedModule
    region: ExecRegion
    pool: FramePool
    registry: ExternalRegistry
    functions: list[CompiledFunction]
    graphs: list[CPSGraph]
    thunk_offsets: dict[str, int]
    frame_costs: dict[str, tuple[int, int]] = field(default_factory=dict)
    _thunks: dict[str, object] = field(default_factory=dict, repr=False)

    def function(self, name: str) -> CompiledFunction:
        for cf in self.functions:
            if cf.name == name:
                return cf
        raise KeyError(name)

    def invoke(self, name: str, args) -> InvokeResult:
        if self.region.state != "executable":
            raise StateError("region not sealed")
        fn = self.tmod.function(name)
        if len(args) != len(fn.params):
            raise SignatureMismatch(
                f"{name} expects {len(fn.params)} args, got {len(args)}"
            )
        argv = (ctypes.c_uint64 * max(1, len(args)))()
        for i, (a, ty) in enumerate(zip(args, fn.params)):
            argv[i] = canonical_bits(a, ty)
        thunk = self._thunks.get(name)
        if thunk is None:
            thunk = _THUNK_PROTO(self.region.base + self.thunk_offsets[name])
            self._thunks[name] = thunk
        r = thunk(argv)
        if r.e != ks.ERR_OK:
            return InvokeResult(None, 0, int(r.e))
        if fn.ret is None:
            return InvokeResult(None, 0, ks.ERR_OK)
        return InvokeResult(bits_to_value(r.v, fn.ret), int(r.v), ks.ERR_OK)

    def close(self):
        self.region.close()


def compile_module(
    tmod: TypedModule,
    lib: StencilLibrary,
    registry: ExternalRegistry | None = None,
    pool_size: int = DEFAULT_POOL_SIZE,
    budget: int = DEFAULT_K,
    elide: bool = True,
) -> CompiledModule:
    """Compile, emit, link and seal a whole module."""
    registry = registry or ExternalRegistry()
    graphs = [compile_function(fn, lib, budget) for fn in tmod.functions]
    thunk_graphs = [_thunk_graph(lib, i, fn) for i, fn in enumerate(tmod.functions)]

    worst = sum(
        sum(len(n.stencil.code) for n in g.nodes) for g in graphs + thunk_graphs
    )
    upper = max(_PAGE, worst + _PAGE)
    while True:
        region = ExecRegion(upper)
        try:
            funcs = [emit(g, lib, region, elide=elide) for g in graphs]
            thunks = [emit(g, lib, region, elide=elide) for g in thunk_graphs]
        except EmitOverflow:
            region.close()
            upper *= 2
            continue
        break

    pool = FramePool(pool_size)
    entries = {
        i: region.base + cf.entry_off for i, cf in enumerate(funcs)
    }
    externals = {}
    for decl in tmod.externs:
        if decl.name in registry:
            externals[decl.name] = registry.address_of(decl.name)
    try:
        link_module(
            funcs + thunks,
            region,
            entries,
            externals,
            pool_base=pool.base,
            pool_limit=pool.limit,
        )
    except UnresolvedExternal:
        region.close()
        raise
    region.seal()

    frame_costs = {
        fn.name: (g.frame_size, g.frame_size + ks.FRAME_ACTIVATION_CHARGE)
        for fn, g in zip(tmod.functions, graphs)
    }
    return CompiledModule(
        tmod=tmod,
        region=region,
        pool=pool,
        registry=registry,
        functions=funcs,
        graphs=graphs,
        thunk_offsets={
            fn.name: t.entry_off for fn, t in zip(tmod.functions, thunks)
        },
        frame_costs=frame_costs,
    )


def _thunk_graph(lib: StencilLibrary, fn_index: int, fn) -> CPSGraph:
    key = StencilKey(ks.THUNK, n=len(fn.params))
    node = CPSNode(
        key,
        lib.select(key),
        vals=[0, 0],
        fixups=[(0, "fn", fn_index), (1, "pool", "base")],
    )
    return CPSGraph(
        fn_name=fn.name + ".thunk",
        nodes=[node],
        nparams=len(fn.params),
        ret=fn.ret,
        frame_size=0,
        spill_count=0,
        call_edges=0,
    )
