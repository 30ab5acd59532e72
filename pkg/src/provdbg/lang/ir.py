"""IR for MiniDist: components, functions, statements, AMLs, access nodes.

Everything here is immutable after construction and safe to share across
threads. Statement ids are (component, function, ordinal) with ordinals
assigned in pre-order over the structured body; ordinal 0 is the synthetic
entry statement binding the formal parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Lit:
    value: object  # int | bool | str | None

    def __str__(self) -> str:
        if self.value is None:
            return "null"
        if isinstance(self.value, bool):
            return "true" if self.value else "false"
        if isinstance(self.value, str):
            return '"%s"' % self.value.replace("\\", "\\\\").replace('"', '\\"')
        return str(self.value)


Atom = Union[Var, Lit]


@dataclass(frozen=True)
class Unary:
    op: str  # ! or -
    operand: "Expr"

    def __str__(self) -> str:
        return f"{self.op}{_paren(self.operand)}"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self) -> str:
        return f"{_paren(self.left)} {self.op} {_paren(self.right)}"


Expr = Union[Var, Lit, Unary, Binary]


def _paren(e: Expr) -> str:
    if isinstance(e, (Var, Lit)):
        return str(e)
    return f"({e})"


def expr_vars(e: Expr) -> list[str]:
    """Variable names read by an expression, in source order, deduplicated."""
    out: list[str] = []

    def walk(x: Expr) -> None:
        if isinstance(x, Var):
            if x.name not in out:
                out.append(x.name)
        elif isinstance(x, Unary):
            walk(x.operand)
        elif isinstance(x, Binary):
            walk(x.left)
            walk(x.right)

    walk(e)
    return out


# ----------------------------------------------------------------------- AMLs

STAR = "*"


@dataclass(frozen=True)
class Local:
    component: str
    function: str
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Global:
    component: str
    name: str

    def __str__(self) -> str:
        return f"@{self.name}"


@dataclass(frozen=True)
class Ref:
    """Heap reference (base, field); field '*' is the reachable-heap pseudo field."""

    base: Union[Local, Global]
    field: str

    def __str__(self) -> str:
        return f"{self.base}.{self.field}"


AML = Union[Local, Global, Ref]


def aml_base(aml: AML) -> Union[Local, Global]:
    return aml.base if isinstance(aml, Ref) else aml


# ----------------------------------------------------------------- statements

@dataclass(frozen=True, order=True)
class StmtId:
    component: str
    function: str
    ordinal: int

    def __str__(self) -> str:
        return f"{self.component}/{self.function}/{self.ordinal}"


@dataclass
class Stmt:
    sid: StmtId = field(init=False, default=None)  # type: ignore[assignment]
    line: int = field(init=False, default=0)

    @property
    def kind(self) -> str:
        return type(self).__name__


@dataclass
class RpcEntry(Stmt):
    """Synthetic ordinal-0 statement binding formals. For `entry` functions it
    is the RPC/external deserialization boundary."""

    params: tuple[str, ...]


@dataclass
class Assign(Stmt):
    target: str
    expr: Expr


@dataclass
class New(Stmt):
    target: str
    alloc_kind: str  # obj | list | map | queue


@dataclass
class FieldLoad(Stmt):
    target: str
    base: str
    field_name: str


@dataclass
class FieldStore(Stmt):
    base: str
    field_name: str
    value: Expr


@dataclass
class Branch(Stmt):
    cond: Expr
    then_body: list[Stmt] = field(default_factory=list)
    else_body: list[Stmt] = field(default_factory=list)


@dataclass
class LoopHead(Stmt):
    cond: Expr
    body: list[Stmt] = field(default_factory=list)


@dataclass
class Call(Stmt):
    target: Optional[str]
    func: str
    args: tuple[Atom, ...]


@dataclass
class Return(Stmt):
    value: Optional[Expr]


@dataclass
class LibCall(Stmt):
    target: Optional[str]
    base: Optional[str]  # None for free builtins (now/rand/input)
    method: str          # unqualified source name
    args: tuple[Atom, ...]
    spec_key: str = ""   # kind-qualified key into libspecs, set by validation


@dataclass
class RpcCall(Stmt):
    target: Optional[str]
    component: str
    func: str
    args: tuple[Atom, ...]


@dataclass
class Spawn(Stmt):
    func: str
    args: tuple[Atom, ...]


@dataclass
class Check(Stmt):
    cond: Expr


# ------------------------------------------------------------------ functions

INIT_FUNCTION = "<init>"


@dataclass
class Function:
    component: str
    name: str
    params: tuple[tuple[str, str], ...]  # (name, declared type)
    entry: bool
    body: list[Stmt]           # structured; body[0] is the RpcEntry
    line: int = 0
    # filled by number_statements:
    stmts: dict[int, Stmt] = field(default_factory=dict)
    order: list[int] = field(default_factory=list)

    @property
    def synthetic(self) -> bool:
        return self.name == INIT_FUNCTION

    def stmt(self, ordinal: int) -> Stmt:
        return self.stmts[ordinal]


@dataclass
class Component:
    name: str
    shareds: tuple[tuple[str, str], ...]  # (name, kind in map|list|queue|int)
    functions: dict[str, Function]
    line: int = 0


@dataclass
class Program:
    components: dict[str, Component]
    libspecs: dict[str, "LibSpec"]
    entrypoints: list[tuple[str, str]]

    def function(self, comp: str, fn: str) -> Function:
        return self.components[comp].functions[fn]

    def functions(self) -> Iterator[Function]:
        for comp in self.components.values():
            for f in comp.functions.values():
                yield f

    def stmt(self, sid: StmtId) -> Stmt:
        return self.components[sid.component].functions[sid.function].stmts[sid.ordinal]

    def all_stmts(self) -> Iterator[Stmt]:
        for f in self.functions():
            for o in f.order:
                yield f.stmts[o]


@dataclass(frozen=True)
class LibSpec:
    """Effect summary for one builtin (kind-qualified name, e.g. 'map.put').

    base_effects: accesses on the (base, *) pseudo location, in order.
    ret_write:    whether the call writes a return local.
    ret_star:     whether the return local gets a (ret, *) write (opaque helpers).
    arg_star:     per-argument (arg, *) access ('R'/'W'/None), for opaque helpers.
    """

    name: str
    base_effects: tuple[str, ...] = ()
    ret_write: bool = False
    ret_star: Optional[str] = None
    arg_star: tuple[Optional[str], ...] = ()
    nondet: bool = False
    witness: str = "none"  # none | arrayIndex | elementValue | key
    blocking: bool = False


# --------------------------------------------------------------- access nodes

READ = "R"
WRITE = "W"


@dataclass(frozen=True)
class AccessNode:
    sid: StmtId
    type: str  # R | W
    aml: AML

    def __str__(self) -> str:
        return f"{self.sid}/{self.type}/{self.aml}"

    def sort_key(self) -> tuple:
        return (self.sid.component, self.sid.function, self.sid.ordinal,
                self.type, str(self.aml))


def number_statements(fn: Function) -> None:
    """Assign pre-order StmtIds over the structured body and index them."""
    fn.stmts.clear()
    fn.order.clear()
    counter = 0

    def assign(stmts: list[Stmt]) -> None:
        nonlocal counter
        for s in stmts:
            s.sid = StmtId(fn.component, fn.name, counter)
            fn.stmts[counter] = s
            fn.order.append(counter)
            counter += 1
            if isinstance(s, Branch):
                assign(s.then_body)
                assign(s.else_body)
            elif isinstance(s, LoopHead):
                assign(s.body)

    assign(fn.body)


def parse_node_text(text: str) -> tuple[StmtId, str, str]:
    """Split 'comp/fn/ordinal/R|W/amlText' into (StmtId, type, aml text)."""
    parts = text.split("/")
    if len(parts) != 5:
        raise ValueError(f"bad node coordinate {text!r} (want comp/fn/ord/R|W/aml)")
    comp, fn, ordtext, typ, amltext = parts
    if typ not in (READ, WRITE):
        raise ValueError(f"bad access type in {text!r}")
    return StmtId(comp, fn, int(ordtext)), typ, amltext


def resolve_aml_text(sid: StmtId, text: str) -> AML:
    """Parse an AML relative to a statement's function context."""
    if text.startswith("@"):
        base_text, dot, fieldname = text[1:].partition(".")
        base: Union[Local, Global] = Global(sid.component, base_text)
    else:
        base_text, dot, fieldname = text.partition(".")
        base = Local(sid.component, sid.function, base_text)
    return Ref(base, fieldname) if dot else base
