"""Recursive-descent parser for MiniDist source text.

The grammar is strict three-address form: conditions, call arguments and
field-store values are expressions over atoms (variables and literals) only.
Nested calls or field accesses are rejected with a hint to introduce a
temporary, so statement numbering is stable and every heap access is its own
statement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import builtins as _builtins
from .ir import (Assign, Atom, Binary, Branch, Call, Check, Component, Expr,
                 FieldLoad, FieldStore, Function, INIT_FUNCTION, LibCall,
                 LibSpec, Lit, LoopHead, New, Program, Return, RpcCall,
                 RpcEntry, Spawn, Stmt, Unary, Var, number_statements)

KEYWORDS = {
    "component", "shared", "entry", "fn", "if", "else", "while", "return",
    "spawn", "rpc", "check", "new", "true", "false", "null",
}
SHARED_KINDS = {"map", "list", "queue", "int"}
PARAM_TYPES = {"int", "bool", "str", "obj", "list", "map", "queue"}
ALLOC_KINDS = {"obj", "list", "map", "queue"}

PUNCT = ["||", "&&", "==", "!=", "<=", ">=", "{", "}", "(", ")", ";", ":",
         ",", ".", "=", "<", ">", "+", "-", "*", "/", "%", "!"]


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # ident | int | string | punct | eof
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#" or src.startswith("//", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n and src[j] != '"':
                if src[j] == "\\" and j + 1 < n:
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(src[j + 1], src[j + 1]))
                    j += 2
                else:
                    buf.append(src[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string", line, col)
            toks.append(Token("string", "".join(buf), line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("int", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(Token("ident", src[i:j], line, col))
            col += j - i
            i = j
            continue
        for p in PUNCT:
            if src.startswith(p, i):
                toks.append(Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks: list[Token], libspecs: dict[str, LibSpec]):
        self.toks = toks
        self.pos = 0
        self.libspecs = libspecs
        self.methods = {k.split(".", 1)[1] for k in libspecs if "." in k}
        self.free = {k for k in libspecs if "." not in k}

    # -- token plumbing
    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def ident(self, what: str = "identifier") -> Token:
        t = self.next()
        if t.kind != "ident" or t.text in KEYWORDS:
            raise ParseError(f"expected {what}, found {t.text!r}", t.line, t.col)
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def err(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.col)

    # -- grammar
    def program(self) -> Program:
        components: dict[str, Component] = {}
        while not self.at(""):
            comp = self.component()
            if comp.name in components:
                raise ParseError(f"duplicate component {comp.name!r}", comp.line, 1)
            components[comp.name] = comp
        entrypoints = [(c.name, f.name)
                       for c in components.values()
                       for f in c.functions.values() if f.entry]
        prog = Program(components=components, libspecs=dict(self.libspecs),
                       entrypoints=entrypoints)
        for fn in prog.functions():
            number_statements(fn)
        return prog

    def component(self) -> Component:
        kw = self.expect("component")
        name = self.ident("component name").text
        self.expect("{")
        shareds: list[tuple[str, str]] = []
        functions: dict[str, Function] = {}
        while not self.at("}"):
            if self.at("shared"):
                self.next()
                sname = self.ident("shared name").text
                self.expect(":")
                kind = self.next()
                if kind.text not in SHARED_KINDS:
                    raise ParseError(f"bad shared kind {kind.text!r}", kind.line, kind.col)
                self.expect(";")
                if any(s[0] == sname for s in shareds):
                    raise ParseError(f"duplicate shared {sname!r}", kind.line, kind.col)
                shareds.append((sname, kind.text))
            else:
                fn = self.function(name)
                if fn.name in functions:
                    raise ParseError(f"duplicate function {fn.name!r} in {name}", fn.line, 1)
                functions[fn.name] = fn
        self.expect("}")
        comp = Component(name=name, shareds=tuple(shareds), functions=functions,
                         line=kw.line)
        functions[INIT_FUNCTION] = self._init_function(comp)
        return comp

    def _init_function(self, comp: Component) -> Function:
        """Implicit startup function initializing the shared globals."""
        body: list[Stmt] = [RpcEntry(params=())]
        for sname, kind in comp.shareds:
            if kind == "int":
                body.append(Assign(target=sname, expr=Lit(0)))
            else:
                body.append(New(target=sname, alloc_kind=kind))
        return Function(component=comp.name, name=INIT_FUNCTION, params=(),
                        entry=False, body=body)

    def function(self, comp: str) -> Function:
        entry = False
        if self.at("entry"):
            self.next()
            entry = True
        kw = self.expect("fn")
        name = self.ident("function name").text
        self.expect("(")
        params: list[tuple[str, str]] = []
        while not self.at(")"):
            pname = self.ident("parameter name").text
            ptype = "obj"
            if self.at(":"):
                self.next()
                t = self.next()
                if t.text not in PARAM_TYPES:
                    raise ParseError(f"bad parameter type {t.text!r}", t.line, t.col)
                ptype = t.text
            params.append((pname, ptype))
            if self.at(","):
                self.next()
        self.expect(")")
        body: list[Stmt] = [RpcEntry(params=tuple(p[0] for p in params))]
        body[0].line = kw.line
        body.extend(self.block())
        return Function(component=comp, name=name, params=tuple(params),
                        entry=entry, body=body, line=kw.line)

    def block(self) -> list[Stmt]:
        self.expect("{")
        out: list[Stmt] = []
        while not self.at("}"):
            out.append(self.statement())
        self.expect("}")
        return out

    def statement(self) -> Stmt:
        t = self.peek()
        if t.text == "if":
            return self.if_stmt()
        if t.text == "while":
            return self.while_stmt()
        if t.text == "return":
            self.next()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return self._loc(Return(value=value), t)
        if t.text == "check":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.expect(";")
            return self._loc(Check(cond=cond), t)
        if t.text == "spawn":
            self.next()
            fn = self.ident("function name").text
            args = self.paren_args()
            self.expect(";")
            return self._loc(Spawn(func=fn, args=args), t)
        if t.text == "rpc":
            stmt = self.rpc_expr(target=None)
            self.expect(";")
            return self._loc(stmt, t)
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.err(f"expected statement, found {t.text!r}")
        # ident-led statements
        name = self.next().text
        nxt = self.peek()
        if nxt.text == "=":
            self.next()
            return self._loc(self.assign_rhs(name), t)
        if nxt.text == ".":
            self.next()
            member = self.ident("field or method name").text
            if self.at("("):
                args = self.paren_args()
                self.expect(";")
                if member not in self.methods:
                    raise ParseError(f"unknown builtin method {member!r}", t.line, t.col)
                return self._loc(LibCall(target=None, base=name, method=member, args=args), t)
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return self._loc(FieldStore(base=name, field_name=member, value=value), t)
        if nxt.text == "(":
            args = self.paren_args()
            self.expect(";")
            if name in self.free:
                return self._loc(LibCall(target=None, base=None, method=name, args=args), t)
            return self._loc(Call(target=None, func=name, args=args), t)
        raise self.err(f"cannot parse statement starting with {name!r}")

    def assign_rhs(self, target: str) -> Stmt:
        t = self.peek()
        if t.text == "new":
            self.next()
            kind = self.next()
            if kind.text not in ALLOC_KINDS:
                raise ParseError(f"bad allocation kind {kind.text!r}", kind.line, kind.col)
            self.expect(";")
            return New(target=target, alloc_kind=kind.text)
        if t.text == "rpc":
            stmt = self.rpc_expr(target=target)
            self.expect(";")
            return stmt
        if t.kind == "ident" and t.text not in KEYWORDS:
            one = self.peek(1)
            if one.text == "(":
                name = self.next().text
                args = self.paren_args()
                self.expect(";")
                if name in self.free:
                    return LibCall(target=target, base=None, method=name, args=args)
                return Call(target=target, func=name, args=args)
            if one.text == ".":
                two = self.peek(2)
                three = self.peek(3)
                if two.kind == "ident" and three.text == "(":
                    base = self.next().text
                    self.next()  # .
                    method = self.next().text
                    args = self.paren_args()
                    self.expect(";")
                    if method not in self.methods:
                        raise ParseError(f"unknown builtin method {method!r}", t.line, t.col)
                    return LibCall(target=target, base=base, method=method, args=args)
                if two.kind == "ident":
                    base = self.next().text
                    self.next()
                    fieldname = self.next().text
                    self.expect(";")
                    return FieldLoad(target=target, base=base, field_name=fieldname)
        expr = self.expr()
        self.expect(";")
        return Assign(target=target, expr=expr)

    def rpc_expr(self, target: Optional[str]) -> RpcCall:
        self.expect("rpc")
        comp = self.ident("component name").text
        self.expect(".")
        fn = self.ident("function name").text
        args = self.paren_args()
        return RpcCall(target=target, component=comp, func=fn, args=args)

    def if_stmt(self) -> Branch:
        t = self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then_body = self.block()
        else_body: list[Stmt] = []
        if self.at("else"):
            self.next()
            else_body = self.block()
        return self._loc(Branch(cond=cond, then_body=then_body, else_body=else_body), t)

    def while_stmt(self) -> LoopHead:
        t = self.expect("while")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        body = self.block()
        return self._loc(LoopHead(cond=cond, body=body), t)

    def paren_args(self) -> tuple[Atom, ...]:
        self.expect("(")
        args: list[Atom] = []
        while not self.at(")"):
            args.append(self.atom())
            if self.at(","):
                self.next()
        self.expect(")")
        return tuple(args)

    # -- expressions over atoms (precedence climbing)
    def expr(self) -> Expr:
        return self.binary(0)

    _LEVELS = [["||"], ["&&"], ["==", "!="], ["<", "<=", ">", ">="],
               ["+", "-"], ["*", "/", "%"]]

    def binary(self, level: int) -> Expr:
        if level >= len(self._LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        while self.peek().text in self._LEVELS[level]:
            op = self.next().text
            right = self.binary(level + 1)
            left = Binary(op=op, left=left, right=right)
        return left

    def unary(self) -> Expr:
        t = self.peek()
        if t.text in ("!", "-"):
            self.next()
            return Unary(op=t.text, operand=self.unary())
        return self.primary()

    def primary(self) -> Expr:
        t = self.peek()
        if t.text == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        atom = self.atom()
        nxt = self.peek()
        if nxt.text in (".", "("):
            raise self.err("expression too complex for this position; "
                           "introduce a temporary")
        return atom

    def atom(self) -> Atom:
        t = self.next()
        if t.kind == "int":
            return Lit(int(t.text))
        if t.kind == "string":
            return Lit(t.text)
        if t.text == "true":
            return Lit(True)
        if t.text == "false":
            return Lit(False)
        if t.text == "null":
            return Lit(None)
        if t.kind == "ident" and t.text not in KEYWORDS:
            if self.peek().text in (".", "("):
                raise self.err("expression too complex for this position; "
                               "introduce a temporary")
            return Var(t.text)
        raise ParseError(f"expected value, found {t.text!r}", t.line, t.col)

    def _loc(self, stmt: Stmt, tok: Token) -> Stmt:
        stmt.line = tok.line
        return stmt


def parse_program(text: str,
                  extra_libspecs: Optional[dict[str, LibSpec]] = None) -> Program:
    """Parse source text into a numbered Program. Raises ParseError."""
    specs = _builtins.core_libspecs()
    if extra_libspecs:
        specs.update(extra_libspecs)
    return _Parser(tokenize(text), specs).program()
