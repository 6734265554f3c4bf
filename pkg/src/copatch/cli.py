"""Command-line interface: compile, run, fuzz-diff, benchmark, and the
build-time stencil library builder.

The stencil library path comes from --lib or the CP_STENCIL_LIB environment
variable. Exit status is nonzero on any failure, including any fuzz
disagreement between the two tiers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .lang import LangError, Module, ValueType, typecheck
from .parser import SyntaxError_, parse, unparse


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="copatch")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a program and inspect the result")
    p.add_argument("file")
    p.add_argument("--emit", choices=("graph", "hex", "report"), default="report")
    p.add_argument("--lib", default=None)
    p.add_argument("--budget", type=int, default=None, help="register budget K")
    p.set_defaults(handler=cmd_compile)

    p = sub.add_parser("run", help="run a function in a program")
    p.add_argument("file")
    p.add_argument("function")
    p.add_argument("args", nargs="*")
    p.add_argument("--tier", choices=("jit", "interp"), default="jit")
    p.add_argument("--lib", default=None)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("fuzz", help="differential-test random programs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--max-stmts", type=int, default=30)
    p.add_argument("--lib", default=None)
    p.set_defaults(handler=cmd_fuzz)

    p = sub.add_parser("gen", help="print a generated fuzz program")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=30)
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument(
        "--suite",
        choices=("micro", "scaling", "breakdown", "startup", "kernels"),
        default="micro",
    )
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--lib", default=None)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("build-stencils", help="build the stencil library")
    p.add_argument("--manifest", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--toolchain", default=None)
    p.add_argument("--jobs", type=int, default=0)
    p.add_argument("--keep-objects", default=None)
    p.set_defaults(handler=cmd_build_stencils)

    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (SyntaxError_, LangError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _load_module(path) -> Module:
    with open(path, encoding="utf-8") as f:
        return parse(f.read())


def _library(args):
    from .stencil import host_arch, load_library

    path = args.lib or os.environ.get("CP_STENCIL_LIB")
    if not path:
        print(
            "error: no stencil library; pass --lib or set CP_STENCIL_LIB",
            file=sys.stderr,
        )
        raise SystemExit(2)
    return load_library(path, host_arch())


def cmd_compile(args) -> int:
    from .codegen import DEFAULT_K, compile_function
    from .emit import ByteRegion, emit, expected_retained_jumps

    tm = typecheck(_load_module(args.file))
    lib = _library(args)
    budget = args.budget if args.budget is not None else DEFAULT_K
    region = ByteRegion(bytearray(1 << 22))
    for fn in tm.functions:
        graph = compile_function(fn, lib, budget)
        cf = emit(graph, lib, region)
        if args.emit == "graph":
            print(f"fn {fn.name}:")
            for i, node in enumerate(graph.nodes):
                conts = ",".join(str(c) for c in node.conts)
                print(f"  {i:3d} {node.key.canonical().decode():44s} -> [{conts}]")
        elif args.emit == "hex":
            print(f"fn {fn.name}: {cf.length} bytes at +{cf.base_off:#x}")
            code = bytes(region.buffer[cf.base_off : cf.base_off + cf.length])
            for (start, end), node in zip(cf.spans, graph.nodes):
                sl = code[start - cf.base_off : end - cf.base_off]
                print(f"  +{start - cf.base_off:04x} {sl.hex():48s} {node.key.kind}")
        else:
            report = {
                "schema": 1,
                "function": fn.name,
                "nodes": cf.node_count,
                "emitted_bytes": cf.length,
                "retained_jumps": cf.retained_jumps,
                "expected_retained_jumps": expected_retained_jumps(graph),
                "spill_count": cf.spill_count,
                "frame_size": cf.frame_size,
                "call_edges": cf.call_edges,
            }
            print(json.dumps(report))
    return 0


def _parse_arg(text: str, ty: ValueType):
    if ty is ValueType.F64:
        return float(text)
    if ty is ValueType.BOOL:
        return text in ("1", "true", "True")
    return int(text, 0)


def cmd_run(args) -> int:
    from .hostlib import standard_registry
    from .interp import interpret

    tm = typecheck(_load_module(args.file))
    fn = tm.function(args.function)
    if len(args.args) != len(fn.params):
        print(
            f"error: {args.function} takes {len(fn.params)} args", file=sys.stderr
        )
        return 2
    values = [_parse_arg(a, ty) for a, ty in zip(args.args, fn.params)]
    registry, _arena = standard_registry()
    if args.tier == "interp":
        result = interpret(tm, args.function, values, externals=registry.raw_map())
    else:
        from .runtime import compile_module

        cm = compile_module(tm, _library(args), registry=registry)
        result = cm.invoke(args.function, values)
    if result.trap:
        print(f"trap: {result.trap}", file=sys.stderr)
        return 3
    if result.error_flag:
        print("error: external call failed", file=sys.stderr)
        return 3
    if result.value is not None:
        print(result.value)
    return 0


def cmd_gen(args) -> int:
    from .fuzz import gen_program

    print(unparse(gen_program(args.seed, args.budget)), end="")
    return 0


def cmd_fuzz(args) -> int:
    from .difftest import run_differential

    lib = _library(args)
    report = run_differential(
        lib, seed=args.seed, count=args.count, budget=args.max_stmts
    )
    print(
        f"fuzz: {report.programs} programs, {report.vectors} runs, "
        f"{len(report.failures)} disagreements"
    )
    if report.failures:
        seed, vec, got, want, source = report.failures[0]
        print(f"first disagreement: seed={seed} args={vec}", file=sys.stderr)
        print(f"  jit:    {got}", file=sys.stderr)
        print(f"  interp: {want}", file=sys.stderr)
        print("minimized reproducer:", file=sys.stderr)
        print(source, file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    from . import bench

    reps = args.reps
    if args.suite == "micro":
        rows = bench.bench_micro(_library(args), reps or bench.DEFAULT_REPS)
    elif args.suite == "scaling":
        rows = bench.bench_scaling(reps=reps or bench.DEFAULT_REPS)
    elif args.suite == "breakdown":
        rows = bench.bench_breakdown(_library(args), reps or bench.DEFAULT_REPS)
    elif args.suite == "startup":
        rows = [bench.bench_startup(_library(args), reps or 200)]
    else:
        rows = bench.bench_kernels(reps or bench.DEFAULT_REPS)
    text = json.dumps(rows, indent=1)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    print(text)
    return 0


def cmd_build_stencils(args) -> int:
    from .extractor import build_library
    from .extractor.manifest import Manifest

    manifest = Manifest.load(args.manifest)
    try:
        summary = build_library(
            manifest,
            args.src,
            args.out,
            toolchain=args.toolchain,
            jobs=args.jobs,
            keep_objects=args.keep_objects,
        )
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary.as_json()))
    return 0


if __name__ == "__main__":
    sys.exit(main())
