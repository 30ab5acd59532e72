"""Pretty-printer and JSON (de)serialization for MiniDist programs."""

from __future__ import annotations

from typing import Optional

from .ir import (Assign, Atom, Binary, Branch, Call, Check, Expr, FieldLoad,
                 FieldStore, Function, LibCall, Lit, LoopHead, New, Program,
                 Return, RpcCall, RpcEntry, Spawn, Stmt, Unary, Var)


def pretty_print(program: Program) -> str:
    out: list[str] = []
    for comp in program.components.values():
        out.append(f"component {comp.name} {{")
        for sname, skind in comp.shareds:
            out.append(f"  shared {sname} : {skind} ;")
        for fn in comp.functions.values():
            if fn.synthetic:
                continue
            params = ", ".join(
                name if ptype == "obj" else f"{name}: {ptype}"
                for name, ptype in fn.params)
            marker = "entry " if fn.entry else ""
            out.append(f"  {marker}fn {fn.name}({params}) {{")
            _print_body(fn.body[1:], out, indent=2)
            out.append("  }")
        out.append("}")
    return "\n".join(out) + ("\n" if out else "")


def _print_body(stmts: list[Stmt], out: list[str], indent: int) -> None:
    pad = "  " * indent
    for s in stmts:
        if isinstance(s, Branch):
            out.append(f"{pad}if ({s.cond}) {{")
            _print_body(s.then_body, out, indent + 1)
            if s.else_body:
                out.append(f"{pad}}} else {{")
                _print_body(s.else_body, out, indent + 1)
            out.append(f"{pad}}}")
        elif isinstance(s, LoopHead):
            out.append(f"{pad}while ({s.cond}) {{")
            _print_body(s.body, out, indent + 1)
            out.append(f"{pad}}}")
        else:
            out.append(pad + _stmt_text(s))


def _stmt_text(s: Stmt) -> str:
    if isinstance(s, Assign):
        return f"{s.target} = {s.expr} ;"
    if isinstance(s, New):
        return f"{s.target} = new {s.alloc_kind} ;"
    if isinstance(s, FieldLoad):
        return f"{s.target} = {s.base}.{s.field_name} ;"
    if isinstance(s, FieldStore):
        return f"{s.base}.{s.field_name} = {s.value} ;"
    if isinstance(s, Call):
        head = f"{s.target} = " if s.target else ""
        return f"{head}{s.func}({_args(s.args)}) ;"
    if isinstance(s, Return):
        return f"return {s.value} ;" if s.value is not None else "return ;"
    if isinstance(s, LibCall):
        head = f"{s.target} = " if s.target else ""
        callee = f"{s.base}.{s.method}" if s.base else s.method
        return f"{head}{callee}({_args(s.args)}) ;"
    if isinstance(s, RpcCall):
        head = f"{s.target} = " if s.target else ""
        return f"{head}rpc {s.component}.{s.func}({_args(s.args)}) ;"
    if isinstance(s, Spawn):
        return f"spawn {s.func}({_args(s.args)}) ;"
    if isinstance(s, Check):
        return f"check({s.cond}) ;"
    raise AssertionError(f"unprintable statement {s!r}")


def _args(args: tuple[Atom, ...]) -> str:
    return ", ".join(str(a) for a in args)


# --------------------------------------------------------------- JSON export

def program_to_json(program: Program) -> dict:
    """One object per component, statements as arrays (structured)."""
    return {
        "components": [
            {
                "name": comp.name,
                "shared": [{"name": n, "kind": k} for n, k in comp.shareds],
                "functions": [
                    {
                        "name": fn.name,
                        "entry": fn.entry,
                        "params": [{"name": n, "type": t} for n, t in fn.params],
                        "body": _body_json(fn.body[1:]),
                    }
                    for fn in comp.functions.values() if not fn.synthetic
                ],
            }
            for comp in program.components.values()
        ]
    }


def _body_json(stmts: list[Stmt]) -> list[dict]:
    out = []
    for s in stmts:
        d: dict = {"kind": s.kind, "ordinal": s.sid.ordinal, "text": None}
        if isinstance(s, Branch):
            d["cond"] = str(s.cond)
            d["then"] = _body_json(s.then_body)
            d["else"] = _body_json(s.else_body)
        elif isinstance(s, LoopHead):
            d["cond"] = str(s.cond)
            d["body"] = _body_json(s.body)
        else:
            d["text"] = _stmt_text(s)
        out.append(d)
    return out


def program_from_json(doc: dict, extra_libspecs=None) -> Program:
    """Rebuild a Program by re-parsing the canonical printed form."""
    from .parser import parse_program

    lines: list[str] = []
    for comp in doc["components"]:
        lines.append(f"component {comp['name']} {{")
        for sh in comp["shared"]:
            lines.append(f"  shared {sh['name']} : {sh['kind']} ;")
        for fn in comp["functions"]:
            params = ", ".join(
                p["name"] if p["type"] == "obj" else f"{p['name']}: {p['type']}"
                for p in fn["params"])
            marker = "entry " if fn["entry"] else ""
            lines.append(f"  {marker}fn {fn['name']}({params}) {{")
            _emit_body(fn["body"], lines, 2)
            lines.append("  }")
        lines.append("}")
    return parse_program("\n".join(lines), extra_libspecs=extra_libspecs)


def _emit_body(body: list[dict], lines: list[str], indent: int) -> None:
    pad = "  " * indent
    for d in body:
        if d["kind"] == "Branch":
            lines.append(f"{pad}if ({d['cond']}) {{")
            _emit_body(d["then"], lines, indent + 1)
            if d["else"]:
                lines.append(f"{pad}}} else {{")
                _emit_body(d["else"], lines, indent + 1)
            lines.append(f"{pad}}}")
        elif d["kind"] == "LoopHead":
            lines.append(f"{pad}while ({d['cond']}) {{")
            _emit_body(d["body"], lines, indent + 1)
            lines.append(f"{pad}}}")
        else:
            lines.append(pad + d["text"])
