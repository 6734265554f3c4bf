"""Textual frontend: parse `.cpl` source into a Module and print it back.

The grammar is a small C-like language with mandatory braces:

    module   := (extern | function)*
    extern   := 'extern' 'fn' NAME '(' params? ')' ('->' type)? ';'
    function := 'fn' NAME '(' params? ')' ('->' type)? block
    stmt     := 'let' NAME ':' type ('=' expr)? ';'
              | 'if' '(' expr ')' block ('else' (block | ifstmt))?
              | 'while' '(' expr ')' block
              | 'return' expr? ';'
              | expr ('=' expr)? ';'
    expr     := additive (CMPOP additive)?
    additive := term (('+'|'-') term)*
    term     := unary (('*'|'/'|'%') unary)*
    unary    := '-' unary | postfix
    postfix  := primary ('[' expr ']')*
    primary  := INT | FLOAT | 'true' | 'false' | NAME | NAME '(' args ')'
              | '(' expr ')'

Integer literals are untyped until the checker resolves them from context;
the suffixes `i32`, `i64`, `f64` force a type. `parse(print(m))` returns a
structurally identical module.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .lang import (
    ArrayIndex,
    Assign,
    Binary,
    BinOp,
    Block,
    Call,
    CmpOp,
    Compare,
    Declare,
    Expr,
    ExprStmt,
    ExternalCall,
    ExternDecl,
    Function,
    If,
    Literal,
    Module,
    Return,
    Stmt,
    ValueType,
    VarRef,
    While,
    bits_to_value,
)


@dataclass
class SourceSpan:
    start: int
    end: int
    line: int
    column: int


class SyntaxError_(Exception):
    def __init__(self, span: SourceSpan, expected: set[str], got: str):
        self.span = span
        self.expected = expected
        self.got = got
        want = ", ".join(sorted(expected))
        super().__init__(
            f"line {span.line}:{span.column}: expected {want}, got {got!r}"
        )


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|->|[-+*/%<>=(){}\[\],:;])
    """,
    re.VERBOSE,
)

KEYWORDS = {"fn", "let", "if", "else", "while", "return", "extern", "true", "false"}
TYPES = {t.value: t for t in ValueType}
_CMP = {op.value: op for op in CmpOp}


@dataclass
class Token:
    kind: str  # 'int' | 'float' | 'name' | 'op' | 'kw' | 'eof'
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(pos, pos + 1, line, pos - line_start + 1)
            raise SyntaxError_(span, {"token"}, text[pos])
        kind = m.lastgroup
        tok = m.group()
        if kind == "ws":
            line += tok.count("\n")
            if "\n" in tok:
                line_start = m.start() + tok.rindex("\n") + 1
        else:
            if kind == "name" and tok in KEYWORDS:
                kind = "kw"
            span = SourceSpan(m.start(), m.end(), line, m.start() - line_start + 1)
            tokens.append(Token(kind, tok, span))
        pos = m.end()
    tokens.append(
        Token("eof", "", SourceSpan(pos, pos, line, pos - line_start + 1))
    )
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.fn_names: dict[str, int] = {}
        self.extern_names: set[str] = set()
        self.call_fixups: list[Call] = []

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected: set[str]):
        raise SyntaxError_(self.cur.span, expected, self.cur.text or "<eof>")

    def expect(self, text: str) -> Token:
        if self.cur.text != text:
            self.fail({text})
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.cur.text == text:
            self.advance()
            return True
        return False

    # -- declarations -------------------------------------------------------

    def module(self) -> Module:
        mod = Module()
        while self.cur.kind != "eof":
            if self.cur.text == "extern":
                mod.externs.append(self.extern())
            elif self.cur.text == "fn":
                fn = self.function()
                self.fn_names[fn.name] = len(mod.functions)
                mod.functions.append(fn)
            else:
                self.fail({"fn", "extern"})
        for call in self.call_fixups:
            if call.name not in self.extern_names:
                call.callee = self.fn_names.get(call.name)
        _rewrite_externals(mod)
        return mod

    def extern(self) -> ExternDecl:
        self.expect("extern")
        self.expect("fn")
        name = self.name()
        params = self.param_types()
        ret = self.ret_type()
        self.expect(";")
        self.extern_names.add(name)
        return ExternDecl(name, params, ret)

    def function(self) -> Function:
        self.expect("fn")
        name = self.name()
        self.expect("(")
        params: list[ValueType] = []
        scope: dict[str, int] = {}
        if not self.accept(")"):
            while True:
                pname = self.name()
                self.expect(":")
                scope[pname] = len(params)
                params.append(self.type_())
                if not self.accept(","):
                    break
            self.expect(")")
        ret = self.ret_type()
        fn = Function(name, params, ret, [], [])
        fn.body = self.block(fn, scope)
        return fn

    def param_types(self) -> list[ValueType]:
        self.expect("(")
        params = []
        if not self.accept(")"):
            while True:
                if self.cur.kind == "name":  # optional parameter names
                    self.advance()
                    self.expect(":")
                params.append(self.type_())
                if not self.accept(","):
                    break
            self.expect(")")
        return params

    def ret_type(self) -> ValueType | None:
        if self.accept("->"):
            return self.type_()
        return None

    def name(self) -> str:
        if self.cur.kind != "name":
            self.fail({"identifier"})
        return self.advance().text

    def type_(self) -> ValueType:
        tok = self.cur
        if tok.kind == "name" and tok.text in TYPES:
            self.advance()
            return TYPES[tok.text]
        self.fail(set(TYPES))

    # -- statements ---------------------------------------------------------

    def block(self, fn: Function, scope: dict[str, int]) -> list[Stmt]:
        self.expect("{")
        inner = dict(scope)
        body: list[Stmt] = []
        while not self.accept("}"):
            body.append(self.stmt(fn, inner))
        return body

    def stmt(self, fn: Function, scope: dict[str, int]) -> Stmt:
        tok = self.cur
        if tok.text == "let":
            self.advance()
            name = self.name()
            self.expect(":")
            ty = self.type_()
            init = self.expr(fn, scope) if self.accept("=") else None
            self.expect(";")
            index = fn.nslots
            fn.locals.append(ty)
            scope[name] = index
            return Declare(index, ty, init)
        if tok.text == "if":
            return self.if_stmt(fn, scope)
        if tok.text == "while":
            self.advance()
            self.expect("(")
            cond = self.expr(fn, scope)
            self.expect(")")
            return While(cond, self.block(fn, scope))
        if tok.text == "return":
            self.advance()
            if self.accept(";"):
                return Return(None)
            value = self.expr(fn, scope)
            self.expect(";")
            return Return(value)
        value = self.expr(fn, scope)
        if self.accept("="):
            rhs = self.expr(fn, scope)
            self.expect(";")
            if not isinstance(value, (VarRef, ArrayIndex)):
                self.fail({"assignable target"})
            return Assign(value, rhs)
        self.expect(";")
        return ExprStmt(value)

    def if_stmt(self, fn: Function, scope: dict[str, int]) -> If:
        self.expect("if")
        self.expect("(")
        cond = self.expr(fn, scope)
        self.expect(")")
        then = self.block(fn, scope)
        orelse: list[Stmt] = []
        if self.accept("else"):
            if self.cur.text == "if":
                orelse = [self.if_stmt(fn, scope)]
            else:
                orelse = self.block(fn, scope)
        return If(cond, then, orelse)

    # -- expressions --------------------------------------------------------

    def expr(self, fn, scope) -> Expr:
        lhs = self.additive(fn, scope)
        if self.cur.text in _CMP:
            op = _CMP[self.advance().text]
            rhs = self.additive(fn, scope)
            return Compare(op, lhs, rhs)
        return lhs

    def additive(self, fn, scope) -> Expr:
        e = self.term(fn, scope)
        while self.cur.text in ("+", "-"):
            op = BinOp.ADD if self.advance().text == "+" else BinOp.SUB
            e = Binary(op, e, self.term(fn, scope))
        return e

    def term(self, fn, scope) -> Expr:
        e = self.unary(fn, scope)
        ops = {"*": BinOp.MUL, "/": BinOp.DIV, "%": BinOp.MOD}
        while self.cur.text in ops:
            op = ops[self.advance().text]
            e = Binary(op, e, self.unary(fn, scope))
        return e

    def unary(self, fn, scope) -> Expr:
        if self.cur.text == "-":
            self.advance()
            inner = self.unary(fn, scope)
            if isinstance(inner, Literal):
                if inner.ty is None:
                    inner.bits = -inner.bits
                    return inner
                if inner.ty is not ValueType.BOOL:
                    return Literal.of(-bits_to_value(inner.bits, inner.ty), inner.ty)
            zero = Literal(0)  # `-x` desugars to `0 - x`
            return Binary(BinOp.SUB, zero, inner)
        return self.postfix(fn, scope)

    def postfix(self, fn, scope) -> Expr:
        e = self.primary(fn, scope)
        while self.accept("["):
            index = self.expr(fn, scope)
            self.expect("]")
            e = ArrayIndex(e, index)
        return e

    def primary(self, fn, scope) -> Expr:
        tok = self.cur
        if tok.kind == "int":
            self.advance()
            value = int(tok.text)
            if self.cur.kind == "name" and self.cur.text in ("i32", "i64", "f64"):
                suffix = self.advance().text
                return Literal.of(value, TYPES[suffix])
            return Literal(value)  # type pending
        if tok.kind == "float":
            self.advance()
            if self.cur.kind == "name" and self.cur.text == "f64":
                self.advance()
            return Literal.of(float(tok.text), ValueType.F64)
        if tok.text in ("true", "false"):
            self.advance()
            return Literal.of(tok.text == "true", ValueType.BOOL)
        if tok.text == "(":
            self.advance()
            e = self.expr(fn, scope)
            self.expect(")")
            return e
        if tok.kind == "name":
            name = self.advance().text
            if self.accept("("):
                args = []
                if not self.accept(")"):
                    while True:
                        args.append(self.expr(fn, scope))
                        if not self.accept(","):
                            break
                    self.expect(")")
                call = Call(name, args)
                self.call_fixups.append(call)
                return call
            if name not in scope:
                span = tok.span
                raise SyntaxError_(span, {"declared variable"}, name)
            return VarRef(scope[name])
        self.fail({"expression"})


def _rewrite_externals(mod: Module):
    """Replace Call nodes that target declared externs with ExternalCall."""
    extern_names = {e.name for e in mod.externs}

    def fix_expr(e: Expr) -> Expr:
        if isinstance(e, Call):
            e.args = [fix_expr(a) for a in e.args]
            if e.name in extern_names:
                return ExternalCall(e.name, e.args)
            return e
        if isinstance(e, Binary) or isinstance(e, Compare):
            e.lhs = fix_expr(e.lhs)
            e.rhs = fix_expr(e.rhs)
        elif isinstance(e, ArrayIndex):
            e.base = fix_expr(e.base)
            e.index = fix_expr(e.index)
        elif isinstance(e, ExternalCall):
            e.args = [fix_expr(a) for a in e.args]
        return e

    def fix_stmts(body: list[Stmt]):
        for s in body:
            if isinstance(s, Declare) and s.init is not None:
                s.init = fix_expr(s.init)
            elif isinstance(s, Assign):
                s.target = fix_expr(s.target)
                s.value = fix_expr(s.value)
            elif isinstance(s, If):
                s.cond = fix_expr(s.cond)
                fix_stmts(s.then)
                fix_stmts(s.orelse)
            elif isinstance(s, While):
                s.cond = fix_expr(s.cond)
                fix_stmts(s.body)
            elif isinstance(s, Return) and s.value is not None:
                s.value = fix_expr(s.value)
            elif isinstance(s, ExprStmt):
                s.value = fix_expr(s.value)

    for fn in mod.functions:
        fix_stmts(fn.body)


def parse(text: str) -> Module:
    """Parse source text into a raw (untyped) Module."""
    return _Parser(text).module()


# ---------------------------------------------------------------------------
# printer

_PREC = {
    BinOp.ADD: 10,
    BinOp.SUB: 10,
    BinOp.MUL: 20,
    BinOp.DIV: 20,
    BinOp.MOD: 20,
}


def unparse(mod: Module) -> str:
    """Pretty-print a module so that parse(unparse(m)) == m structurally."""
    out: list[str] = []
    for ext in mod.externs:
        params = ", ".join(f"a{i}: {t.value}" for i, t in enumerate(ext.params))
        ret = f" -> {ext.ret.value}" if ext.ret else ""
        out.append(f"extern fn {ext.name}({params}){ret};")
    for fn in mod.functions:
        out.append(_print_function(mod, fn))
    return "\n".join(out) + ("\n" if out else "")


def _print_function(mod: Module, fn: Function) -> str:
    params = ", ".join(f"p{i}: {t.value}" for i, t in enumerate(fn.params))
    ret = f" -> {fn.ret.value}" if fn.ret else ""
    lines = [f"fn {fn.name}({params}){ret} {{"]
    _print_stmts(mod, fn, fn.body, lines, "    ")
    lines.append("}")
    return "\n".join(lines)


def _var(fn: Function, index: int) -> str:
    return f"p{index}" if index < len(fn.params) else f"v{index}"


def _print_stmts(mod, fn, body, lines, indent):
    for s in body:
        _print_stmt(mod, fn, s, lines, indent)


def _print_stmt(mod, fn, s, lines, indent):
    if isinstance(s, Declare):
        init = f" = {_expr(mod, fn, s.init, 0)}" if s.init is not None else ""
        lines.append(f"{indent}let {_var(fn, s.index)}: {s.ty.value}{init};")
    elif isinstance(s, Assign):
        lines.append(
            f"{indent}{_expr(mod, fn, s.target, 0)} = {_expr(mod, fn, s.value, 0)};"
        )
    elif isinstance(s, If):
        lines.append(f"{indent}if ({_expr(mod, fn, s.cond, 0)}) {{")
        _print_stmts(mod, fn, s.then, lines, indent + "    ")
        if s.orelse:
            lines.append(f"{indent}}} else {{")
            _print_stmts(mod, fn, s.orelse, lines, indent + "    ")
        lines.append(f"{indent}}}")
    elif isinstance(s, While):
        lines.append(f"{indent}while ({_expr(mod, fn, s.cond, 0)}) {{")
        _print_stmts(mod, fn, s.body, lines, indent + "    ")
        lines.append(f"{indent}}}")
    elif isinstance(s, Return):
        if s.value is None:
            lines.append(f"{indent}return;")
        else:
            lines.append(f"{indent}return {_expr(mod, fn, s.value, 0)};")
    elif isinstance(s, ExprStmt):
        lines.append(f"{indent}{_expr(mod, fn, s.value, 0)};")
    elif isinstance(s, Block):
        _print_stmts(mod, fn, s.body, lines, indent)
    else:
        raise TypeError(f"cannot print {type(s).__name__}")


def _literal(e: Literal) -> str:
    if e.ty is None:
        return str(e.bits)
    if e.ty is ValueType.BOOL:
        return "true" if e.bits & 1 else "false"
    if e.ty is ValueType.F64:
        v = bits_to_value(e.bits, ValueType.F64)
        text = repr(v)
        return text if ("." in text or "e" in text or "E" in text) else text + ".0"
    v = bits_to_value(e.bits, e.ty)
    return f"{v}{e.ty.value}" if e.ty in (ValueType.I32, ValueType.I64) else str(v)


def _expr(mod: Module, fn: Function, e: Expr, parent_prec: int) -> str:
    if isinstance(e, Literal):
        text = _literal(e)
        if text.startswith("-"):
            return f"({text})" if parent_prec > 0 else text
        return text
    if isinstance(e, VarRef):
        return _var(fn, e.index)
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        lhs = _expr(mod, fn, e.lhs, prec - 1)
        rhs = _expr(mod, fn, e.rhs, prec)
        text = f"{lhs} {e.op.value} {rhs}"
        return f"({text})" if parent_prec >= prec else text
    if isinstance(e, Compare):
        lhs = _expr(mod, fn, e.lhs, 5)
        rhs = _expr(mod, fn, e.rhs, 5)
        text = f"{lhs} {e.op.value} {rhs}"
        return f"({text})" if parent_prec >= 5 else text
    if isinstance(e, Call):
        name = mod.functions[e.callee].name if e.callee not in (None, -1) else e.name
        args = ", ".join(_expr(mod, fn, a, 0) for a in e.args)
        return f"{name}({args})"
    if isinstance(e, ExternalCall):
        args = ", ".join(_expr(mod, fn, a, 0) for a in e.args)
        return f"{e.symbol}({args})"
    if isinstance(e, ArrayIndex):
        base = _expr(mod, fn, e.base, 100)
        return f"{base}[{_expr(mod, fn, e.index, 0)}]"
    raise TypeError(f"cannot print {type(e).__name__}")
