"""DOT and JSON renderings of automata, CIPM results and abstractions."""

from __future__ import annotations

import json
from typing import Optional, Union

from .abstraction import AbstractAutomaton
from .cipm import CipmResult, NetworkCipmResult
from .model import Network, TimedAutomaton, vector_id


def _q(text: str) -> str:
    # JSON string escaping is valid DOT string escaping for our labels
    return json.dumps(text, ensure_ascii=False)


def _automaton_body(a: TimedAutomaton, prefix: str = "n") -> list[str]:
    lines = []
    ids = {lid: f"{prefix}{i}" for i, lid in enumerate(a.location_ids)}
    for loc in a.locations:
        label = loc.id
        if loc.invariant:
            label += f"\n{loc.invariant}"
        if loc.new_invariant is not None and loc.new_invariant != loc.invariant:
            label += f"\n[{loc.new_invariant}]"
        attrs = [f"label={_q(label)}"]
        if loc.id == a.initial:
            attrs.append("peripheries=2")
        lines.append(f"  {ids[loc.id]} [{', '.join(attrs)}];")
    for t in a.transitions:
        lines.append(f"  {ids[t.source]} -> {ids[t.target]} [label={_q(t.label())}];")
    return lines


def _automaton_dot(a: TimedAutomaton, name: Optional[str] = None) -> list[str]:
    head = [f"digraph {_q(name or a.name)} {{", "  rankdir=LR;", "  node [shape=ellipse];"]
    return head + _automaton_body(a) + ["}"]


def _abstraction_dot(abst: AbstractAutomaton, name: Optional[str] = None) -> list[str]:
    lines = [f"digraph {_q(name or 'abstraction')} {{", "  rankdir=LR;", "  node [shape=box];"]
    ids = {s: f"s{i}" for i, s in enumerate(abst.states)}
    initial = set(abst.initial)
    for s in abst.states:
        attrs = [f"label={_q(s.label(abst.pool))}"]
        if s in initial:
            attrs.append("peripheries=2")
        if s not in abst.reachable:
            attrs.append("style=dashed")
        lines.append(f"  {ids[s]} [{', '.join(attrs)}];")
    order = {s: i for i, s in enumerate(abst.states)}
    for src, dst in sorted(abst.transitions, key=lambda e: (order[e[0]], order[e[1]])):
        label = " | ".join(abst.transitions[(src, dst)])
        attrs = [f"label={_q(label)}"]
        if src not in abst.reachable:
            attrs.append("style=dashed")
        lines.append(f"  {ids[src]} -> {ids[dst]} [{', '.join(attrs)}];")
    lines.append("}")
    return lines


def emit_dot(obj: Union[TimedAutomaton, Network, AbstractAutomaton], name: Optional[str] = None) -> str:
    """A deterministic DOT digraph.

    Initial nodes get a double border; unreachable abstract states are dashed.
    """
    if isinstance(obj, AbstractAutomaton):
        lines = _abstraction_dot(obj, name)
    elif isinstance(obj, Network):
        if len(obj.components) == 1:
            lines = _automaton_dot(obj.components[0], name)
        else:
            # one cluster per component
            lines = [f"digraph {_q(name or 'network')} {{", "  rankdir=LR;", "  node [shape=ellipse];"]
            for k, a in enumerate(obj.components):
                lines.append(f"  subgraph cluster_{k} {{")
                lines.append(f"    label={_q(a.name)};")
                lines += ["  " + b for b in _automaton_body(a, f"c{k}n")]
                lines.append("  }")
            lines.append("}")
    else:
        lines = _automaton_dot(obj, name)
    return "\n".join(lines) + "\n"


def emit_json(report: object) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def cipm_report(r: Union[CipmResult, NetworkCipmResult]) -> dict:
    """Strengthened invariants, removed transitions and convergence data."""
    if isinstance(r, CipmResult):
        comps = [r]
    else:
        comps = r.components
    single = len(comps) == 1

    def key(c: CipmResult, lid: str) -> str:
        return lid if single else f"{c.original.name}.{lid}"

    report = {
        "invariants": {key(c, lid): str(inv) for c in comps for lid, inv in c.new_invariants.items()},
        "original_invariants": {key(c, loc.id): str(loc.invariant) for c in comps for loc in c.original.locations},
        "removed": [
            {"automaton": c.original.name, "transition": str(rm.transition), "reason": str(rm.reason)}
            for c in comps for rm in c.removed
        ],
        "unreachable": sorted(key(c, lid) for c in comps for lid in c.unreachable),
        "iterations": sum(c.iterations for c in comps),
        "converged": all(c.converged for c in comps),
        "warnings": [w for c in comps for w in c.warnings],
    }
    if isinstance(r, NetworkCipmResult) and not single:
        report["vector_invariants"] = {vector_id(vec): str(inv) for vec, inv in r.invariants.items()}
    return report


def abstraction_report(abst: Optional[AbstractAutomaton], compare_naive: bool = True) -> dict:
    """Abstract states, transitions and counts; all counts are zero without an abstraction."""
    keys = ["abstract_states", "reachable", "abstract_transitions", "pruned_transitions"]
    if compare_naive:
        keys += ["naive_paired", "naive_unfiltered"]
    if abst is None:
        report: dict = {k: 0 for k in keys}
        report.update(predicates={}, states=[], transitions=[])
        return report
    stats = abst.stats.as_dict()
    report = {k: stats[k] for k in keys}
    initial = set(abst.initial)
    report["predicates"] = abst.pool.legend()
    report["states"] = [
        {"state": s.label(abst.pool), "location": s.location,
         "reachable": s in abst.reachable, "initial": s in initial}
        for s in abst.states
    ]
    order = {s: i for i, s in enumerate(abst.states)}
    report["transitions"] = [
        {"source": src.label(abst.pool), "target": dst.label(abst.pool), "labels": abst.transitions[(src, dst)]}
        for src, dst in sorted(abst.transitions, key=lambda e: (order[e[0]], order[e[1]]))
    ]
    return report
