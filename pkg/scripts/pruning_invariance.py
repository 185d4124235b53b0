"""Build recycling prunings under several fresh-value namings and compare them.

Each pair is checked for persistence bisimilarity, and a batch of random formulas is
model-checked on every pruning; any verdict split is printed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from _config import parse_config

from dcds import load_corpus, mu, nondet
from dcds.random_models import random_mulp
from dcds.ts import DivergenceReport, persistence_bisimilar


@dataclass
class InvarianceConfig:
    spec: str = "nondet_nonwa"
    prefixes: tuple[str, ...] = ("$v", "$w", "#n")
    formulas: int = 50
    depth: int = 3
    seed: int = 0


def main(cfg: InvarianceConfig) -> int:
    spec = load_corpus(cfg.spec)
    systems = {}
    for p in cfg.prefixes:
        ts = nondet.rcycl(spec, fresh=p)
        if isinstance(ts, DivergenceReport):
            print(f"{p}: {ts}")
            return 2
        systems[p] = ts
        print(f"{p}: {len(ts)} states, {len(ts.edges)} edges")
    base = cfg.prefixes[0]
    for p in cfg.prefixes[1:]:
        print(f"{base} ~ {p}: {persistence_bisimilar(systems[base], systems[p]).bisimilar}")
    rng = random.Random(cfg.seed)
    splits = 0
    for _ in range(cfg.formulas):
        f = random_mulp(rng, cfg.depth)
        verdicts = {p: mu.model_check(ts, f).holds for p, ts in systems.items()}
        if len(set(verdicts.values())) > 1:
            splits += 1
            print(f"split on {f}: {verdicts}")
    print(f"{splits} verdict splits over {cfg.formulas} formulas")
    return 1 if splits else 0


if __name__ == "__main__":
    raise SystemExit(main(parse_config(InvarianceConfig, __doc__)))
