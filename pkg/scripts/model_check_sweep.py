"""Cross-check the two model-checking routes on random systems and random formulas.

Reports disagreements between the fixpoint route and the propositionalized route, and
between fixpoint reachability and a plain BFS.
"""

from __future__ import annotations

import random
import time
from collections import deque
from dataclasses import dataclass

from _config import parse_config

from dcds import fo, mu
from dcds.random_models import random_mulp, random_reachability_formula, random_ts


@dataclass
class SweepConfig:
    systems: int = 200
    formulas_per_system: int = 5
    max_states: int = 8
    depth: int = 3
    seed: int = 1


def bfs_reaches(ts, rel: str) -> bool:
    seen, todo = {ts.initial}, deque([ts.initial])
    while todo:
        i = todo.popleft()
        if fo.holds(fo.Atom(rel, ()), ts.db(i)):
            return True
        for j in ts.successors(i):
            if j not in seen:
                seen.add(j)
                todo.append(j)
    return False


def main(cfg: SweepConfig) -> int:
    rng = random.Random(cfg.seed)
    reach = random_reachability_formula("Q")
    route_splits = reach_splits = checks = 0
    t0 = time.perf_counter()
    for _ in range(cfg.systems):
        ts = random_ts(rng, cfg.max_states, relations=(("Q", 0), ("R", 1), ("P", 1)), values=("a", "b"))
        reach_splits += mu.model_check(ts, reach).holds != bfs_reaches(ts, "Q")
        for _ in range(cfg.formulas_per_system):
            f = random_mulp(rng, cfg.depth)
            a = mu.model_check(ts, f).extension
            b = mu.model_check(ts, f, route="prop").extension
            checks += 1
            if a != b:
                route_splits += 1
                print(f"route split on {f}: {sorted(a)} vs {sorted(b)}")
    dt = time.perf_counter() - t0
    print(f"{checks} formula checks, {route_splits} route splits, {reach_splits} reachability splits, {dt:.2f}s")
    return 1 if route_splits or reach_splits else 0


if __name__ == "__main__":
    raise SystemExit(main(parse_config(SweepConfig, __doc__)))
