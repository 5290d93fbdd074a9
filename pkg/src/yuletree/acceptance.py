"""The ten acceptance criteria as runnable checks.

Each criterion runs one or more experiments at the stated sizes, checks its
runtime budget and returns a :class:`CriterionResult`. Used by the ``check``
subcommand and by ``tests/test_acceptance.py``.
"""

import time
from dataclasses import dataclass, field

from .experiments import ExperimentConfig, run_experiment


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float
    budget: float
    reports: list = field(default_factory=list)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] criterion {self.number:2d}: {self.title} "
                f"({self.seconds:.1f}s of {self.budget:.0f}s)")


# (number, title, runtime budget in seconds, [(kind, params, trials)])
CRITERIA = [
    (1, "leaf-count law", 30, [("leafdist", {}, 10**5)]),
    (2, "mean total length", 30, [("length", {}, 10**5)]),
    (3, "scaling law for radius, length, leaf count", 300, [("scaling", {}, 10**4)]),
    (4, "projection walk moments", 60, [("moments", {}, 10**5)]),
    (5, "branch collapse", 120, [("branch-collapse", {}, 10**4)]),
    (6, "radius lower bound product", 600, [("radius-tail", {}, 10**4)]),
    (7, "appendix bounds dominate exact values", 60, [("bounds", {}, 10**5)]),
    (8, "equation solver against Monte Carlo", 900, [("fe-vs-mc", {}, 10**5)]),
    (9, "Hausdorff distance shrinks with rate", 600, [("hausdorff", {}, 200)]),
    (10, "hole probability bound", 600, [("holes", {}, 1000)]),
]


def run_criterion(number, seed=20240601, out_dir="", scale=1.0):
    """Run criterion ``number``; ``scale < 1`` shrinks trial counts for smoke runs."""
    num, title, budget, runs = CRITERIA[number - 1]
    t0 = time.perf_counter()
    reports = []
    for kind, params, trials in runs:
        n = max(1, int(trials * scale))
        out = f"{out_dir}/c{num:02d}_{kind}" if out_dir else ""
        reports.extend(run_experiment(ExperimentConfig(kind, dict(params), n, seed, out)))
    seconds = time.perf_counter() - t0
    ok = all(r.passed for r in reports) and seconds <= budget
    return CriterionResult(num, title, ok, seconds, budget, reports)


def run_all(seed=20240601, out_dir="", scale=1.0, echo=print):
    results = []
    for num, *_ in CRITERIA:
        res = run_criterion(num, seed, out_dir, scale)
        if echo:
            for r in res.reports:
                echo("    " + r.line())
            echo(res.line())
        results.append(res)
    return results
