"""Overhead measurement: uninstrumented vs recording-off vs recording-on."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Optional

from ..runtime.instrument import InstrumentedProgram
from ..runtime.interp import Engine, RuntimeConfig
from ..sdg.plan import InstrumentationPlan
from .catalog import Scenario, synthetic_concurrency


@dataclass
class BenchReport:
    scenario: str
    repetitions: int
    stmts_per_sec: dict[str, list[float]] = field(default_factory=dict)

    def median(self, config: str) -> float:
        return statistics.median(self.stmts_per_sec[config])

    def spread(self, config: str) -> tuple[float, float]:
        xs = self.stmts_per_sec[config]
        return (min(xs), max(xs))

    @property
    def recording_off_ratio(self) -> float:
        return self.median("recordingOff") / self.median("uninstrumented")

    @property
    def recording_on_slowdown(self) -> float:
        return self.median("uninstrumented") / self.median("recordingOn")

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "repetitions": self.repetitions,
            "median": {k: self.median(k) for k in self.stmts_per_sec},
            "spread": {k: list(self.spread(k)) for k in self.stmts_per_sec},
            "recordingOffRatio": self.recording_off_ratio,
            "recordingOnSlowdown": self.recording_on_slowdown,
        }

    def table(self) -> str:
        lines = [f"{'configuration':16} {'stmts/sec (median)':>20} {'min':>12} {'max':>12}"]
        for k in self.stmts_per_sec:
            lo, hi = self.spread(k)
            lines.append(f"{k:16} {self.median(k):>20.0f} {lo:>12.0f} {hi:>12.0f}")
        lines.append(f"recording-off throughput ratio: "
                     f"{self.recording_off_ratio:.4f}")
        lines.append(f"recording-on slowdown: {self.recording_on_slowdown:.2f}x")
        return "\n".join(lines)


def bench_workload() -> Scenario:
    """Statement-heavy synthetic mix used as the benchmark workload."""
    return synthetic_concurrency(threads=3, rate=40, seed=11)


def overhead_bench(scenario: Optional[Scenario] = None,
                   plan: Optional[InstrumentationPlan] = None,
                   repetitions: int = 5, seed: int = 0) -> BenchReport:
    scenario = scenario or bench_workload()
    program, info, facts, sdg = scenario.build()
    if plan is None:
        from ..sdg.plan import derive_plan
        from ..sdg.slicing import Query, backward_slice
        from ..sdg.io import find_node
        spec = scenario.rounds[0]
        q = Query(tuple(find_node(sdg, t) for t in spec["query"]), spec.get("depth"))
        plan = derive_plan(sdg, backward_slice(sdg, q), program)

    configs = {
        "uninstrumented": (None, True),
        "recordingOff": (plan, False),
        "recordingOn": (plan, True),
    }
    report = BenchReport(scenario=scenario.name, repetitions=repetitions)
    workload = scenario.workload()
    # warm-up
    Engine(InstrumentedProgram(program, None), workload,
           RuntimeConfig(seed=seed), info).run()
    for name, (p, recording) in configs.items():
        ip = InstrumentedProgram(program, p)
        samples = []
        for rep in range(repetitions):
            cfg = RuntimeConfig(seed=seed + rep, recording=recording)
            t0 = time.perf_counter()
            result = Engine(ip, workload, cfg, info).run()
            dt = time.perf_counter() - t0
            stmts = sum(result.stats["statements"].values())
            samples.append(stmts / dt)
        report.stmts_per_sec[name] = samples
    return report
