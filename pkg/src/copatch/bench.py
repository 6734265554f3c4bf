"""Benchmark harness: microbenchmarks, compile-time scaling, optimization
breakdown, startup latency, and the emission-kernel comparison.

All timings come from a monotonic high-resolution clock with the garbage
collector disabled, repeated at least 30 times; reports carry the mean and
the 95% confidence interval as one JSON object per benchmark.
"""

from __future__ import annotations

import gc
import math
import statistics
import time
from dataclasses import dataclass
from importlib import resources

from . import kernel as kernel_mod
from .codegen import compile_function, plan_registers, layout_frame, build_cps_graph
from .emit import ByteRegion, emit
from .fuzz import gen_program
from .hostlib import standard_registry
from .interp import interpret
from .lang import (
    Assign,
    Binary,
    BinOp,
    Declare,
    Function,
    Literal,
    Module,
    Return,
    ValueType,
    VarRef,
)
from .mock import MockLibrary
from .parser import parse
from .lang import typecheck
from .runtime import compile_module
from .stencil import StencilLibrary

SCHEMA = 1
DEFAULT_REPS = 30

# benchmark name -> (program, function, arguments)
MICRO = {
    "fib": ("fib.cpl", "fib", [23]),
    "sieve": ("sieve.cpl", "sieve", [10000]),
    "quicksort": ("quicksort.cpl", "qmain", [1200]),
}


@dataclass
class Timing:
    mean: float
    ci95: float
    reps: int

    def as_json(self):
        return {"mean": self.mean, "ci95": self.ci95, "reps": self.reps}


def measure(fn, reps: int = DEFAULT_REPS, setup=None) -> Timing:
    """Mean seconds and CI95 over `reps` calls of fn()."""
    samples = []
    gc_was = gc.isenabled()
    gc.disable()
    try:
        for _ in range(reps):
            if setup is not None:
                setup()
            t0 = time.perf_counter_ns()
            fn()
            samples.append((time.perf_counter_ns() - t0) / 1e9)
    finally:
        if gc_was:
            gc.enable()
    mean = statistics.fmean(samples)
    sd = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return Timing(mean, 1.96 * sd / math.sqrt(len(samples)), len(samples))


def load_program(name: str):
    text = resources.files("copatch.programs").joinpath(name).read_text()
    return typecheck(parse(text))


def bench_micro(lib: StencilLibrary, reps: int = DEFAULT_REPS) -> list[dict]:
    """Fig-17-style microbenchmarks: startup and execution for both tiers."""
    out = []
    for name, (program, fn_name, args) in MICRO.items():
        source = resources.files("copatch.programs").joinpath(program).read_text()
        ast_build = measure(lambda: typecheck(parse(source)), reps)
        tm = typecheck(parse(source))

        compile_t = measure(
            lambda: [compile_function(f, lib) for f in tm.functions], reps
        )

        registry, arena = standard_registry()
        cm = compile_module(tm, lib, registry=registry)
        cf = cm.function(fn_name)

        def run_jit():
            arena.reset()
            return cm.invoke(fn_name, args)

        def run_interp():
            arena.reset()
            return interpret(tm, fn_name, args, externals=registry.raw_map())

        jit_result = run_jit()
        interp_result = run_interp()
        if jit_result.key() != interp_result.key():
            raise AssertionError(f"{name}: tier disagreement")

        jit = measure(run_jit, reps)
        interp = measure(run_interp, reps)
        out.append(
            {
                "schema": SCHEMA,
                "name": name,
                "args": args,
                "result": interp_result.value,
                "ast_build_s": ast_build.as_json(),
                "compile_s": compile_t.as_json(),
                "jit_exec_s": jit.as_json(),
                "interp_exec_s": interp.as_json(),
                "speedup": interp.mean / jit.mean,
                "retained_jumps": sum(f.retained_jumps for f in cm.functions),
                "spill_count": sum(f.spill_count for f in cm.functions),
                "emitted_bytes": sum(f.length for f in cm.functions),
            }
        )
        cm.close()
    return out


def increment_module(n_statements: int) -> Module:
    """The scaling workload: a function of N `x = x + y` statements."""
    body = [
        Declare(0, ValueType.I64, Literal.of(1, ValueType.I64)),
        Declare(1, ValueType.I64, Literal.of(2, ValueType.I64)),
    ]
    for _ in range(n_statements):
        body.append(Assign(VarRef(0), Binary(BinOp.ADD, VarRef(0), VarRef(1))))
    body.append(Return(VarRef(0)))
    fn = Function("inc", [], ValueType.I64, [ValueType.I64, ValueType.I64], body)
    return Module(functions=[fn])


def bench_scaling(
    sizes=(100, 1000, 5000, 10000), reps: int = DEFAULT_REPS
) -> list[dict]:
    """Per-statement compile time as program size grows (mock stencils)."""
    lib = MockLibrary()
    out = []
    region = ByteRegion(bytearray(64 << 20))
    for n in sizes:
        tm = typecheck(increment_module(n))
        fn = tm.function("inc")

        def compile_once():
            region.fill = 0
            plan = plan_registers(fn)
            layout = layout_frame(fn, plan)
            graph = build_cps_graph(fn, plan, layout, lib)
            emit(graph, lib, region)

        t = measure(compile_once, reps)
        out.append(
            {
                "schema": SCHEMA,
                "name": f"scaling-{n}",
                "statements": n,
                "compile_s": t.as_json(),
                "per_statement_us": t.mean / n * 1e6,
            }
        )
    base = out[0]["per_statement_us"]
    for row in out:
        row["ratio_vs_smallest"] = row["per_statement_us"] / base
    return out


def bench_breakdown(lib: StencilLibrary, reps: int = DEFAULT_REPS) -> list[dict]:
    """Execution cost of disabling jump elision and register planning."""
    out = []
    for name, (program, fn_name, args) in MICRO.items():
        tm = load_program(program)
        row = {"schema": SCHEMA, "name": name}
        base = None
        for label, kwargs in (
            ("optimized", {}),
            ("no_elide", {"elide": False}),
            ("k0", {"budget": 0}),
        ):
            registry, arena = standard_registry()
            cm = compile_module(tm, lib, registry=registry, **kwargs)

            def run():
                arena.reset()
                cm.invoke(fn_name, args)

            t = measure(run, reps)
            row[f"{label}_s"] = t.as_json()
            if label == "optimized":
                base = t.mean
            else:
                row[f"{label}_slowdown"] = t.mean / base
            cm.close()
        out.append(row)
    return out


def bench_startup(lib: StencilLibrary, reps: int = 200) -> dict:
    """Compile latency for the Fibonacci AST (AST build and library load
    excluded), the paper's headline startup-delay number."""
    tm = load_program("fib.cpl")
    fn = tm.function("fib")
    region = ByteRegion(bytearray(1 << 16))
    samples = []
    gc.disable()
    try:
        for _ in range(reps):
            region.fill = 0
            t0 = time.perf_counter_ns()
            plan = plan_registers(fn)
            layout = layout_frame(fn, plan)
            graph = build_cps_graph(fn, plan, layout, lib)
            emit(graph, lib, region)
            samples.append(time.perf_counter_ns() - t0)
    finally:
        gc.enable()
    samples.sort()
    return {
        "schema": SCHEMA,
        "name": "startup-fib",
        "reps": reps,
        "kernel": kernel_mod.BACKEND,
        "mean_us": statistics.fmean(samples) / 1e3,
        "median_us": samples[len(samples) // 2] / 1e3,
        "min_us": samples[0] / 1e3,
    }


def bench_kernels(reps: int = DEFAULT_REPS) -> list[dict]:
    """Compiled vs pure-Python emission kernel on the same workload."""
    from . import _kernel_py

    backends = [("python", _kernel_py.patch_and_copy)]
    try:
        from . import _kernel  # type: ignore[attr-defined]

        backends.insert(0, ("cython", _kernel.patch_and_copy))
    except ImportError:
        pass

    lib = MockLibrary()
    tm = typecheck(increment_module(2000))
    fn = tm.function("inc")
    graph = compile_function(fn, lib)
    region = ByteRegion(bytearray(8 << 20))
    saved = kernel_mod.patch_and_copy
    out = []
    try:
        for label, impl in backends:
            kernel_mod.patch_and_copy = impl

            def emit_once():
                region.fill = 0
                emit(graph, lib, region)

            t = measure(emit_once, reps)
            out.append(
                {
                    "schema": SCHEMA,
                    "name": f"kernel-{label}",
                    "emit_s": t.as_json(),
                    "nodes": len(graph.nodes),
                    "ns_per_node": t.mean / len(graph.nodes) * 1e9,
                }
            )
    finally:
        kernel_mod.patch_and_copy = saved
    if len(out) == 2:
        out[0]["speedup_vs_python"] = out[1]["emit_s"]["mean"] / out[0]["emit_s"]["mean"]
    return out
