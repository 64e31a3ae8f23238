"""Invariant strengthening, idle-transition pruning and predicate abstraction for timed automata."""

from importlib import resources

from .abstraction import AbstractAutomaton, AbstractState, PredicatePool, build_abstraction, feasible_cubes
from .cipm import CipmResult, IdleReason, cipm, cipm_network
from .constraints import Atom, ConstraintSet, Cube, LinearTerm, Var, entails, satisfiable
from .dsl import ParseError, check, format_network, parse
from .model import Network, TimedAutomaton, compose, validate
from .oracle import OracleConfig, explore

__all__ = [
    "AbstractAutomaton", "AbstractState", "Atom", "CipmResult", "ConstraintSet", "Cube", "IdleReason",
    "LinearTerm", "Network", "OracleConfig", "ParseError", "PredicatePool", "TimedAutomaton", "Var",
    "build_abstraction", "check", "cipm", "cipm_network", "compose", "entails", "explore",
    "feasible_cubes", "format_network", "load_bundled", "parse", "satisfiable", "validate",
]


def bundled_path(name: str) -> str:
    """Filesystem path of a bundled model such as ``"ex1.ta"``."""
    return str(resources.files(__package__).joinpath("models", name))


def load_bundled(name: str) -> Network:
    return parse(resources.files(__package__).joinpath("models", name).read_text(encoding="utf-8"), name)
