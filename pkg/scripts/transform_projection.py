"""Check that the semantics-switching rewrites preserve bounded concrete behaviour.

Both systems are built by the bounded concrete oracle over the same value pool and
projected onto the original schema before comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

from _config import parse_config

from dcds import det, load_corpus, transforms
from dcds.terms import Constant


@dataclass
class ProjectionConfig:
    det_spec: str = "openruntime"
    det_pool: tuple[str, ...] = ("a", "b")
    nondet_spec: str = "nondet_nonwa"
    nondet_pool: tuple[str, ...] = ("a", "b", "0", "1", "$t0", "$t1")
    depth: int = 2


def compare(spec, out, pool, depth: int) -> tuple[bool, str]:
    consts = [Constant(v) for v in pool]
    rels = [r.name for r in spec.schema]
    before = det.build_concrete_bounded(spec, consts, depth)
    after = det.build_concrete_bounded(out, consts, depth)
    same = before.project(rels) == after.project(rels)
    return same, f"{len(before)} original vs {len(after)} rewritten states"


def main(cfg: ProjectionConfig) -> int:
    ok = True
    spec = load_corpus(cfg.det_spec)
    same, detail = compare(spec, transforms.det_to_nondet(spec)[0], cfg.det_pool, cfg.depth)
    print(f"det2nondet {cfg.det_spec}: projections equal {same} ({detail})")
    ok &= same
    spec = load_corpus(cfg.nondet_spec)
    same, detail = compare(spec, transforms.nondet_to_det(spec)[0], cfg.nondet_pool, cfg.depth)
    print(f"nondet2det {cfg.nondet_spec}: projections equal {same} ({detail})")
    ok &= same
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main(parse_config(ProjectionConfig, __doc__)))
