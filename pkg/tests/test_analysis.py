import random

import pytest

from provdbg.analysis.callgraph import build_call_graph
from provdbg.analysis.cfg import EXIT, build_cfg, control_dependent_stmts, post_dominators
from provdbg.analysis.facts import analyze_program, export_relations
from provdbg.analysis.inline import inline_short_heap_functions
from provdbg.analysis.libeffects import library_effect_nodes
from provdbg.analysis.pointsto import AllocSite, naive_points_to, points_to
from provdbg.analysis.escape import thread_escape
from provdbg.lang import load_program, parse_program
from provdbg.lang.ir import Call, LibCall, Local, New, StmtId
from provdbg.lang.nodes import enumerate_access_nodes
from provdbg.scenarios.synth import SynthConfig, generate_program


def _fn(src, name="f", comp="C"):
    p, info = load_program(src)
    return p, info, p.function(comp, name)


# ------------------------------------------------------------ post-dominators

def oracle_pdoms(cfg):
    """s2 pdom s1 iff s2 is on every path s1 -> EXIT (removal reachability)."""
    nodes = cfg.nodes

    def reaches_exit_avoiding(start, banned):
        if start == banned:
            return False
        seen, stack = {start}, [start]
        while stack:
            n = stack.pop()
            if n == EXIT:
                return True
            for s in cfg.succ[n]:
                if s != banned and s not in seen:
                    seen.add(s)
                    stack.append(s)
        return False

    out = {}
    for s1 in nodes:
        can_reach = reaches_exit_avoiding(s1, banned=None)
        pd = {s1}
        for s2 in nodes:
            if s2 == s1:
                continue
            if can_reach and not reaches_exit_avoiding(s1, banned=s2):
                pd.add(s2)
            elif not can_reach:
                pd.add(s2)  # vacuous: no paths to exit
        out[s1] = pd
    return out


def test_straight_line_postdominators():
    p, info, fn = _fn("component C { fn f() { a = 1 ; b = 2 ; c = 3 ; } }")
    cfg = build_cfg(fn)
    pd = post_dominators(cfg)
    assert pd[1] == {1, 2, 3, EXIT}
    assert pd[3] == {3, EXIT}
    assert all(EXIT in pd[n] for n in cfg.nodes)


def test_diamond_join_postdominates_branch_arms_do_not():
    src = """
    component C { fn f(x: int) {
      if (x > 0) { a = 1 ; } else { b = 2 ; }
      j = 3 ;
    } }
    """
    p, info, fn = _fn(src)
    cfg = build_cfg(fn)
    pd = post_dominators(cfg)
    branch = next(s for s in fn.stmts.values() if s.kind == "Branch").sid.ordinal
    join = max(fn.order)
    assert join in pd[branch]
    arms = [s.sid.ordinal for s in fn.stmts.values() if s.kind == "Assign" and s.sid.ordinal != join]
    for arm in arms:
        assert arm not in pd[branch]


@pytest.mark.parametrize("seed", range(30))
def test_random_cfgs_match_path_oracle(seed):
    src = generate_program(SynthConfig(seed=seed, components=1,
                                       functions_per_component=2,
                                       max_block_len=4))
    p, info = load_program(src)
    for fn in p.functions():
        if len(fn.order) > 15:
            continue
        cfg = build_cfg(fn)
        assert post_dominators(cfg) == oracle_pdoms(cfg)


# ----------------------------------------------------------------- call graph

def test_rpc_pair_links_call_to_entry_statement():
    src = """
    component DN { entry fn offerService() { resp = rpc NN.sendHeartbeat() ; } }
    component NN { entry fn sendHeartbeat() { x = 1 ; return x ; } }
    """
    p, _ = load_program(src)
    cg = build_call_graph(p)
    call = next(s for s in p.all_stmts() if s.kind == "RpcCall")
    assert (call.sid, StmtId("NN", "sendHeartbeat", 0)) in cg.rpc_pairs


def test_program_with_no_calls_has_empty_edges():
    p, _ = load_program("component C { fn f() { x = 1 ; } }")
    assert build_call_graph(p).edges == set()


@pytest.mark.parametrize("seed", [3, 7, 11])
def test_call_graph_matches_syntactic_scan(seed):
    src = generate_program(SynthConfig(seed=seed, components=2,
                                       functions_per_component=5))
    p, _ = load_program(src)
    cg = build_call_graph(p)
    expected = set()
    for fn in p.functions():
        for s in fn.stmts.values():
            if s.kind in ("Call", "Spawn"):
                expected.add((s.sid, (fn.component, s.func)))
            elif s.kind == "RpcCall":
                expected.add((s.sid, (s.component, s.func)))
    assert cg.edges == expected


# ------------------------------------------------------------------- points-to

def test_copy_rule():
    src = "component C { fn f() { a = new obj ; b = a ; } }"
    p, info = load_program(src)
    pts = points_to(p, info)
    site = AllocSite(next(s for s in p.all_stmts() if isinstance(s, New)).sid)
    assert pts.of(Local("C", "f", "a")) == {site}
    assert pts.of(Local("C", "f", "b")) == {site}


def test_context_insensitive_imprecision_without_inlining():
    # two callers of the same identity helper conflate their arguments
    src = """
    component C {
      fn bar(o) { return o ; }
      fn f() {
        o1 = new obj ;
        o3 = new obj ;
        r1 = bar(o1) ;
        r3 = bar(o3) ;
      }
    }
    """
    p, info = load_program(src)
    pts = points_to(p, info)
    assert pts.may_alias(Local("C", "f", "r1"), Local("C", "f", "r3"))
    # after inlining the helper the contexts separate
    p2 = inline_short_heap_functions(p)
    from provdbg.lang.validate import require_valid
    info2 = require_valid(p2)
    pts2 = points_to(p2, info2)
    assert not pts2.may_alias(Local("C", "f", "r1"), Local("C", "f", "r3"))


@pytest.mark.parametrize("seed", range(20))
def test_worklist_fixpoint_equals_naive_iteration(seed):
    src = generate_program(SynthConfig(seed=seed, components=2,
                                       functions_per_component=3))
    p, info = load_program(src)
    got = {k: v for k, v in points_to(p, info).pts.items()}
    want = naive_points_to(p, info)
    assert got == want


def test_points_to_monotone_when_adding_statement():
    base = "component C { fn f() { a = new obj ; b = a ; %s } }"
    p1, i1 = load_program(base % "")
    p2, i2 = load_program(base % "c = new obj ; b = c ;")
    pts1 = points_to(p1, i1)
    pts2 = points_to(p2, i2)
    for slot, sites in pts1.pts.items():
        assert sites <= pts2.of(slot)


# --------------------------------------------------------------------- escape

def test_local_only_object_not_shared():
    src = "component C { fn f() { o = new obj ; o.x = 1 ; } }"
    p, info = load_program(src)
    pts = points_to(p, info)
    assert thread_escape(p, info, pts) == set()


def test_object_stored_in_shared_map_escapes():
    src = """
    component DN {
      shared volumeMap : map ;
      entry fn writeBlock(nr: obj) { k = nr.id ; volumeMap.put(k, nr) ; }
    }
    """
    p, info = load_program(src)
    pts = points_to(p, info)
    escaped = thread_escape(p, info, pts)
    entry_site = AllocSite(StmtId("DN", "writeBlock", 0), "nr")
    assert entry_site in escaped


def test_spawn_argument_escapes():
    src = """
    component C {
      fn worker(o) { v = o.x ; }
      entry fn main() { o = new obj ; spawn worker(o) ; }
    }
    """
    p, info = load_program(src)
    pts = points_to(p, info)
    new_site = AllocSite(next(s for s in p.all_stmts() if isinstance(s, New)).sid)
    assert new_site in thread_escape(p, info, pts)


# ------------------------------------------------------------------- inlining

GETTER = """
component C {
  fn get(o) { t = o.f ; return t ; }
  fn main() {
    a = new obj ;
    a.f = 1 ;
    x = get(a) ;
    y = get(a) ;
  }
}
"""


def test_getter_inlined_at_both_callsites():
    p, _ = load_program(GETTER)
    p2 = inline_short_heap_functions(p)
    main = p2.function("C", "main")
    assert not any(isinstance(s, Call) for s in main.stmts.values())
    loads = [s for s in main.stmts.values() if s.kind == "FieldLoad"]
    assert len(loads) == 2


def test_inline_identity_when_no_candidates():
    src = "component C { entry fn f() { x = 1 ; y = x + 2 ; } }"
    p, _ = load_program(src)
    from provdbg.lang.printer import pretty_print
    assert pretty_print(inline_short_heap_functions(p)) == pretty_print(p)


def test_inline_node_count_delta_bounded():
    p, info = load_program(GETTER)
    candidate_size = len(p.function("C", "get").order)
    callsites = 2
    before = len(enumerate_access_nodes(p, info))
    p2 = inline_short_heap_functions(p)
    from provdbg.lang.validate import require_valid
    after = len(enumerate_access_nodes(p2, require_valid(p2)))
    assert after - before <= callsites * (candidate_size + 2)


# ------------------------------------------------------------ library effects

def test_map_put_generates_star_write_and_arg_reads():
    src = """
    component C {
      shared MAP : map ;
      entry fn f(k: int, v: obj) { MAP.put(k, v) ; }
    }
    """
    p, info = load_program(src)
    nodes = {str(n) for n in library_effect_nodes(p, info)}
    put = next(s for s in p.all_stmts() if isinstance(s, LibCall) and s.method == "put")
    o = put.sid.ordinal
    assert f"C/f/{o}/W/@MAP.*" in nodes
    assert f"C/f/{o}/R/k" in nodes
    assert f"C/f/{o}/R/v" in nodes


def test_now_generates_only_return_write_flagged_nondet():
    p, info = load_program("component C { fn f() { t = now() ; } }")
    nodes = [n for n in library_effect_nodes(p, info) if n.sid.function == "f"]
    assert [str(n) for n in nodes] == ["C/f/1/W/t"]
    assert p.libspecs["now"].nondet


def test_poll_reads_and_writes_structure():
    src = "component C { shared q : queue ; fn f() { x = q.poll() ; } }"
    p, info = load_program(src)
    texts = {(n.type, str(n.aml)) for n in library_effect_nodes(p, info)
             if n.sid.function == "f"}
    assert ("W", "@q.*") in texts and ("R", "@q.*") in texts and ("W", "x") in texts


# -------------------------------------------------------------------- overlap

def _opaque_specs():
    from provdbg.lang.ir import LibSpec
    return {
        "resolve": LibSpec(name="resolve", ret_write=True, ret_star="W",
                           arg_star=("R",), witness="none"),
        "wrap": LibSpec(name="wrap", ret_write=True, ret_star="W",
                        arg_star=("R",), witness="none"),
    }


def test_fig5_style_pairwise_overlap():
    src = """
    component C { fn f() {
      u1 = new obj ;
      u2 = resolve(u1) ;
      fobj = wrap(u2) ;
    } }
    """
    p, info = load_program(src, extra_libspecs=_opaque_specs())
    facts = analyze_program(p, info)
    names = {frozenset((a.name, b.name)) for pair in facts.overlap
             for a in pair for b in pair if a != b}
    assert frozenset(("u1", "u2")) in names
    assert frozenset(("u2", "fobj")) in names
    assert frozenset(("u1", "fobj")) in names  # transitive within the function


def test_aliased_lists_overlap_directly():
    src = """
    component C { fn f() {
      l1 = new list ;
      l2 = l1 ;
      l1.add(1) ;
      x = l2.get(0) ;
    } }
    """
    p, info = load_program(src)
    facts = analyze_program(p, info)
    assert any({b.name for b in pair} == {"l1", "l2"} for pair in facts.overlap
               if len(pair) == 2)


def test_unrelated_collections_in_different_functions_do_not_overlap():
    src = """
    component C {
      fn f() { a = new list ; a.add(1) ; }
      fn g() { b = new list ; b.add(2) ; }
    }
    """
    p, info = load_program(src)
    facts = analyze_program(p, info)
    assert not any({getattr(b, "name", "?") for b in pair} == {"a", "b"}
                   for pair in facts.overlap)


def test_relations_export_contains_all_relations():
    p, info = load_program(GETTER)
    text = export_relations(analyze_program(p, info))
    for rel in ("call_edge", "pts", "node"):
        assert rel in text
