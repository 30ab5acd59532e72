"""Scenario bundles: the case-study programs plus a synthetic concurrency mix."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from ..analysis.facts import AnalysisFacts, analyze_program
from ..lang import load_program
from ..lang.ir import Program
from ..lang.validate import ProgramInfo
from ..runtime.interp import Workload
from ..sdg.graph import Sdg, build_sdg


@dataclass
class Scenario:
    name: str
    source: str
    workload_doc: dict
    hints_doc: dict
    rounds_doc: dict
    golden: Optional[dict] = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def seed(self) -> int:
        return int(self.rounds_doc.get("seed", 0))

    @property
    def occurrence_budget(self) -> int:
        return int(self.rounds_doc.get("occurrenceBudget", 10))

    @property
    def rounds(self) -> list[dict]:
        return self.rounds_doc["rounds"]

    def workload(self) -> Workload:
        return Workload.from_dict(self.workload_doc, self.hints_doc)

    def build(self) -> tuple[Program, ProgramInfo, AnalysisFacts, Sdg]:
        if "sdg" not in self._cache:
            program, info = load_program(self.source)
            facts = analyze_program(program, info)
            self._cache.update(program=program, info=info, facts=facts,
                               sdg=build_sdg(facts))
        c = self._cache
        return c["program"], c["info"], c["facts"], c["sdg"]


def _data_dir():
    return resources.files("provdbg.scenarios").joinpath("data")


def _load_bundle(name: str) -> Scenario:
    d = _data_dir().joinpath(name)
    golden = None
    golden_path = d.joinpath("golden.json")
    try:
        golden = json.loads(golden_path.read_text())
    except (FileNotFoundError, OSError):
        pass
    return Scenario(
        name=name,
        source=d.joinpath("program.mdl").read_text(),
        workload_doc=json.loads(d.joinpath("workload.json").read_text()),
        hints_doc=json.loads(d.joinpath("hints.json").read_text()),
        rounds_doc=json.loads(d.joinpath("rounds.json").read_text()),
        golden=golden,
    )


def synthetic_concurrency(threads: int = 4, rate: int = 6,
                          seed: int = 0) -> Scenario:
    """Single-component workers hammering shared structures; used by the
    interval-ordering soundness sweep. Parameterized by worker count and
    accesses per worker."""
    body = []
    for i in range(rate):
        body.append(f"    counter = counter + 1 ;")
        body.append(f"    k{i} = rand(4) ;")
        body.append(f"    board.put(k{i}, p) ;")
        body.append(f"    v{i} = board.get(k{i}) ;")
        body.append(f"    bag.offer(p) ;")
        body.append(f"    t{i} = bag.poll() ;")
        body.append(f"    log.add(k{i}) ;")
        body.append(f"    n{i} = log.size() ;")
        body.append(f"    counter = counter - 1 ;")
    worker = "\n".join(body)
    source = f"""
component Hive {{
  shared counter : int ;
  shared board : map ;
  shared bag : queue ;
  shared log : list ;

  entry fn work(p: int) {{
{worker}
    c = counter ;
    check(c > {threads * 2}) ;
  }}
}}
"""
    calls = [{"component": "Hive", "function": "work", "args": [i]}
             for i in range(threads)]
    return Scenario(
        name="synth",
        source=source,
        workload_doc={"calls": calls, "env": {}},
        hints_doc={},
        rounds_doc={"seed": seed, "occurrenceBudget": 10, "rounds": [
            {"query": ["Hive/work/" + str(rate * 9 + 2) + "/R/c"], "depth": 3}]},
    )


def scenario_catalog() -> list[Scenario]:
    return [_load_bundle("hdfs4022"), _load_bundle("hdfs5465"),
            synthetic_concurrency()]


def get_scenario(name: str) -> Scenario:
    if name == "synth":
        return synthetic_concurrency()
    for s in scenario_catalog():
        if s.name == name:
            return s
    raise KeyError(f"unknown scenario {name!r}")


def scenario_dir(name: str) -> Path:
    return Path(str(_data_dir().joinpath(name)))
