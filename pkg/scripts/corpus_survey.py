"""Static analysis and finite-system size for every corpus spec."""

from __future__ import annotations

import time
from dataclasses import dataclass

from _config import parse_config

from dcds import analysis, corpus_names, det, load_corpus, nondet
from dcds.ts import DivergenceReport


@dataclass
class SurveyConfig:
    specs: tuple[str, ...] = ()
    max_states: int = det.DEFAULT_MAX_STATES
    max_terms: int = det.DEFAULT_MAX_TERMS


def survey(cfg: SurveyConfig) -> list[dict]:
    rows = []
    for name in cfg.specs or corpus_names():
        spec = load_corpus(name)
        row: dict = {"spec": name, "semantics": spec.semantics}
        if spec.deterministic:
            row["weakly_acyclic"] = analysis.weak_acyclicity(spec).acyclic
        else:
            gr = analysis.gr_analysis(spec)
            row["gr"], row["gr_plus"] = gr.gr_acyclic, gr.gr_plus_acyclic
        t0 = time.perf_counter()
        if spec.deterministic:
            ts = det.build_abstract_ts(spec, cfg.max_states, cfg.max_terms)
        else:
            ts = nondet.rcycl(spec, cfg.max_states)
        row["seconds"] = round(time.perf_counter() - t0, 3)
        if isinstance(ts, DivergenceReport):
            row["result"] = f"diverged: {ts.reason}"
        else:
            row["result"] = f"{len(ts)} states, {len(ts.edges)} edges"
        rows.append(row)
    return rows


if __name__ == "__main__":
    for row in survey(parse_config(SurveyConfig, __doc__)):
        print(row)
