"""Seeded random MiniDist program generator.

Produces always-valid, always-terminating programs used by the brute-force
analysis oracles and the dynamic soundness sweeps. Generated loops count up
to a literal bound, calls only target earlier functions (no recursion), and
every name is defined before use.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass
class SynthConfig:
    seed: int = 0
    components: int = 1
    functions_per_component: int = 3
    max_depth: int = 2
    max_block_len: int = 5
    allow_spawn: bool = True
    allow_rpc: bool = True
    allow_check: bool = True


class _FnState:
    def __init__(self, rng: random.Random, shareds: list[tuple[str, str]]):
        self.rng = rng
        self.ints: list[str] = []
        self.objs: list[str] = []
        self.colls: dict[str, str] = {}  # name -> list|map|queue
        self.shareds = shareds
        self.tmp = 0

    def fresh(self, prefix: str = "v") -> str:
        self.tmp += 1
        return f"{prefix}{self.tmp}"


def generate_program(cfg: SynthConfig) -> str:
    rng = random.Random(cfg.seed)
    comps = [f"C{i}" for i in range(cfg.components)]
    out: list[str] = []
    entry_sigs: dict[str, list[tuple[str, list[str]]]] = {c: [] for c in comps}
    plain_sigs: dict[str, list[tuple[str, list[str]]]] = {c: [] for c in comps}

    for ci, comp in enumerate(comps):
        out.append(f"component {comp} {{")
        shareds = []
        for kind in rng.sample(["int", "map", "list", "queue"], k=rng.randint(1, 3)):
            name = f"g_{kind}"
            shareds.append((name, kind))
            out.append(f"  shared {name} : {kind} ;")
        callable_comps = comps[:ci]  # rpc only to earlier components
        for fi in range(cfg.functions_per_component):
            entry = fi == 0 or rng.random() < 0.5
            nparams = rng.randint(0, 2)
            params = []
            ptypes = []
            for pi in range(nparams):
                ptype = rng.choice(["int", "int", "obj"])
                params.append(f"p{pi}: {ptype}")
                ptypes.append(ptype)
            name = f"f{fi}"
            marker = "entry " if entry else ""
            out.append(f"  {marker}fn {name}({', '.join(params)}) {{")
            st = _FnState(rng, shareds)
            st.ints = [f"p{i}" for i, t in enumerate(ptypes) if t == "int"]
            st.objs = [f"p{i}" for i, t in enumerate(ptypes) if t == "obj"]
            seed_var = st.fresh()
            out.append(f"    {seed_var} = {rng.randint(0, 9)} ;")
            st.ints.append(seed_var)
            _gen_block(out, st, cfg, depth=0, indent="    ",
                       callees=plain_sigs[comp][:],
                       rpc_targets=[(c, n, ts) for c in callable_comps
                                    for n, ts in entry_sigs[c]])
            out.append("  }")
            sig = (name, ptypes)
            (entry_sigs if entry else plain_sigs)[comp].append(sig)
        out.append("}")
    return "\n".join(out) + "\n"


def _int_expr(st: _FnState) -> str:
    rng = st.rng
    a = rng.choice(st.ints) if st.ints and rng.random() < 0.8 else str(rng.randint(0, 9))
    if rng.random() < 0.5:
        b = rng.choice(st.ints) if st.ints and rng.random() < 0.5 else str(rng.randint(1, 9))
        return f"{a} {rng.choice(['+', '-', '*'])} {b}"
    return a


def _cond(st: _FnState) -> str:
    rng = st.rng
    a = rng.choice(st.ints) if st.ints else str(rng.randint(0, 9))
    return f"{a} {rng.choice(['<', '<=', '>', '>=', '==', '!='])} {rng.randint(0, 9)}"


def _gen_block(out: list[str], st: _FnState, cfg: SynthConfig, depth: int,
               indent: str, callees: list, rpc_targets: list) -> None:
    rng = st.rng
    for _ in range(rng.randint(1, cfg.max_block_len)):
        kind = rng.random()
        if kind < 0.22:
            v = st.fresh()
            out.append(f"{indent}{v} = {_int_expr(st)} ;")
            st.ints.append(v)
        elif kind < 0.34:
            v = st.fresh("o")
            out.append(f"{indent}{v} = new obj ;")
            st.objs.append(v)
            if st.ints:
                out.append(f"{indent}{v}.val = {rng.choice(st.ints)} ;")
        elif kind < 0.46 and st.objs:
            o = rng.choice(st.objs)
            if rng.random() < 0.5 and st.ints:
                out.append(f"{indent}{o}.val = {_int_expr(st)} ;")
            else:
                v = st.fresh()
                out.append(f"{indent}{v} = {o}.val ;")
                st.ints.append(v)
        elif kind < 0.60:
            _gen_libcall(out, st, indent)
        elif kind < 0.68 and depth < cfg.max_depth:
            out.append(f"{indent}if ({_cond(st)}) {{")
            saved = (list(st.ints), list(st.objs), dict(st.colls))
            _gen_block(out, st, cfg, depth + 1, indent + "  ", callees, rpc_targets)
            st.ints, st.objs, st.colls = list(saved[0]), list(saved[1]), dict(saved[2])
            if rng.random() < 0.5:
                out.append(f"{indent}}} else {{")
                _gen_block(out, st, cfg, depth + 1, indent + "  ", callees, rpc_targets)
                st.ints, st.objs, st.colls = list(saved[0]), list(saved[1]), dict(saved[2])
            out.append(f"{indent}}}")
        elif kind < 0.76 and depth < cfg.max_depth:
            i = st.fresh("i")
            bound = rng.randint(1, 3)
            out.append(f"{indent}{i} = 0 ;")
            out.append(f"{indent}while ({i} < {bound}) {{")
            st.ints.append(i)
            saved = (list(st.ints), list(st.objs), dict(st.colls))
            _gen_block(out, st, cfg, depth + 1, indent + "  ", callees, rpc_targets)
            st.ints, st.objs, st.colls = saved[0], saved[1], saved[2]
            out.append(f"{indent}  {i} = {i} + 1 ;")
            out.append(f"{indent}}}")
        elif kind < 0.82 and callees:
            name, ptypes = rng.choice(callees)
            args = [_pick_arg(st, t) for t in ptypes]
            v = st.fresh()
            out.append(f"{indent}{v} = {name}({', '.join(args)}) ;")
        elif kind < 0.86 and cfg.allow_rpc and rpc_targets:
            comp, name, ptypes = rng.choice(rpc_targets)
            args = [_pick_arg(st, t) for t in ptypes]
            out.append(f"{indent}rpc {comp}.{name}({', '.join(args)}) ;")
        elif kind < 0.90 and cfg.allow_spawn and callees:
            name, ptypes = rng.choice(callees)
            args = [_pick_arg(st, t) for t in ptypes]
            out.append(f"{indent}spawn {name}({', '.join(args)}) ;")
        elif kind < 0.94:
            v = st.fresh()
            out.append(f"{indent}{v} = rand({rng.randint(2, 10)}) ;")
            st.ints.append(v)
        elif kind < 0.97 and cfg.allow_check and st.ints:
            out.append(f"{indent}check({rng.choice(st.ints)} > 100) ;")
        else:
            v = st.fresh()
            out.append(f"{indent}{v} = now() ;")
            st.ints.append(v)


def _pick_arg(st: _FnState, ptype: str) -> str:
    rng = st.rng
    if ptype == "int":
        return rng.choice(st.ints) if st.ints else str(rng.randint(0, 9))
    if st.objs:
        return rng.choice(st.objs)
    return "null"


def _gen_libcall(out: list[str], st: _FnState, indent: str) -> None:
    rng = st.rng
    structured = [(n, k) for n, k in st.shareds if k != "int"]
    local_colls = list(st.colls.items())
    pool = structured + local_colls
    if not pool or rng.random() < 0.25:
        kind = rng.choice(["list", "map", "queue"])
        v = st.fresh(kind[0])
        out.append(f"{indent}{v} = new {kind} ;")
        st.colls[v] = kind
        return
    name, kind = rng.choice(pool)
    val = rng.choice(st.ints) if st.ints else str(rng.randint(0, 9))
    elem = rng.choice(st.objs) if st.objs and rng.random() < 0.5 else val
    v = st.fresh()
    if kind == "list":
        op = rng.choice(["add", "get", "size"])
        if op == "add":
            out.append(f"{indent}{name}.add({elem}) ;")
        elif op == "get":
            out.append(f"{indent}{v} = {name}.get(0) ;")
            st.objs.append(v)
        else:
            out.append(f"{indent}{v} = {name}.size() ;")
            st.ints.append(v)
    elif kind == "map":
        op = rng.choice(["put", "get", "contains"])
        if op == "put":
            out.append(f"{indent}{name}.put({val}, {elem}) ;")
        elif op == "get":
            out.append(f"{indent}{v} = {name}.get({val}) ;")
            st.objs.append(v)
        else:
            out.append(f"{indent}{v} = {name}.contains({val}) ;")
    else:
        op = rng.choice(["offer", "poll", "peek", "size"])
        if op == "offer":
            out.append(f"{indent}{name}.offer({elem}) ;")
        elif op in ("poll", "peek"):
            out.append(f"{indent}{v} = {name}.{op}() ;")
            st.objs.append(v)
        else:
            out.append(f"{indent}{v} = {name}.size() ;")
            st.ints.append(v)


def generate_workload(source: str, seed: int = 0, calls: int = 4) -> dict:
    """Workload invoking each entry function with type-appropriate arguments."""
    from ..lang import load_program

    program, _ = load_program(source)
    rng = random.Random(seed ^ 0x9E3779B9)
    entries = []
    for comp, fname in program.entrypoints:
        fn = program.function(comp, fname)
        entries.append((comp, fname, [t for _, t in fn.params]))
    out = []
    for i in range(calls):
        comp, fname, ptypes = entries[i % len(entries)] if entries else (None, None, [])
        if comp is None:
            break
        args = []
        for t in ptypes:
            if t == "int":
                args.append(rng.randint(0, 9))
            elif t == "str":
                args.append(f"s{rng.randint(0, 9)}")
            elif t == "bool":
                args.append(bool(rng.getrandbits(1)))
            else:
                args.append({"val": rng.randint(0, 9), "id": i})
        out.append({"component": comp, "function": fname, "args": args})
    return {"calls": out, "env": {}}
