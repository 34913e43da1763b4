"""Scenario reasoning over fluents with incomplete initial information.

A narrative is a partial initial state (literals known true or false,
absence meaning unknown) plus a time-ordered event sequence.  ``holds``
answers by backward regression: scan events before the query time from
latest to earliest and stop at the first one that adds or deletes the
fluent; otherwise fall back to the initial state.  Precondition queries use
three-valued Kleene conjunction.

By default narrated events execute unconditionally (the narrative is
treated as observed fact).  In strict mode a relevant event whose own
applicability is unknown makes the answer unknown, and one whose
applicability is false is skipped as never having happened.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .terms import Atom, Compound, Term, is_ground, parse_term


class Truth(Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    def negate(self) -> "Truth":
        if self is Truth.TRUE:
            return Truth.FALSE
        if self is Truth.FALSE:
            return Truth.TRUE
        return Truth.UNKNOWN


def kleene_and(values) -> Truth:
    result = Truth.TRUE
    for v in values:
        if v is Truth.FALSE:
            return Truth.FALSE
        if v is Truth.UNKNOWN:
            result = Truth.UNKNOWN
    return result


class ScenarioError(ValueError):
    pass


def _is_negation(t: Term) -> bool:
    return isinstance(t, Compound) and t.functor == "not" and len(t.args) == 1


def _strip(literal: Term) -> tuple[Term, bool]:
    """(fluent, positive) for a literal F or not(F)."""
    if _is_negation(literal):
        return literal.args[0], False
    return literal, True


@dataclass(frozen=True)
class ActionSpec:
    name: str
    preconditions: tuple[Term, ...] = ()
    adds: tuple[Term, ...] = ()
    dels: tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        overlap = set(self.adds) & set(self.dels)
        if overlap:
            raise ScenarioError(f"action {self.name!r}: adds and dels overlap")
        for group in (self.preconditions, self.adds, self.dels):
            for t in group:
                if not is_ground(t):
                    raise ScenarioError(f"action {self.name!r}: non-ground term {t}")


@dataclass(frozen=True)
class Narrative:
    initial: tuple[Term, ...] = ()
    events: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        known: dict[Term, bool] = {}
        for literal in self.initial:
            fluent, positive = _strip(literal)
            if known.get(fluent, positive) != positive:
                raise ScenarioError(f"contradictory initial literal for {fluent}")
            known[fluent] = positive
        last = 0
        for name, tick in self.events:
            if tick <= last:
                raise ScenarioError("event ticks must be strictly increasing and >= 1")
            last = tick

    def initial_truth(self, fluent: Term) -> Truth:
        for literal in self.initial:
            f, positive = _strip(literal)
            if f == fluent:
                return Truth.TRUE if positive else Truth.FALSE
        return Truth.UNKNOWN


@dataclass
class InspectionCounter:
    """Counts events examined by regression (for bounded-work checks)."""

    events_inspected: int = 0


class FluentReasoner:
    def __init__(self, actions: dict[str, ActionSpec] | list[ActionSpec],
                 strict: bool = False):
        if not isinstance(actions, dict):
            actions = {a.name: a for a in actions}
        self.actions = actions
        self.strict = strict

    def _spec(self, name: str) -> ActionSpec:
        spec = self.actions.get(name)
        if spec is None:
            raise ScenarioError(f"undeclared action {name!r} in narrative")
        return spec

    def holds(self, narrative: Narrative, fluent: Term, t: int,
              counter: InspectionCounter | None = None) -> Truth:
        """Backward regression from t; initial state settles untouched fluents."""
        if t < 0:
            raise ValueError("time must be >= 0")
        for name, tick in reversed(narrative.events):
            if tick >= t:
                continue
            if counter is not None:
                counter.events_inspected += 1
            spec = self._spec(name)
            effect: Truth | None = None
            if fluent in spec.adds:
                effect = Truth.TRUE
            elif fluent in spec.dels:
                effect = Truth.FALSE
            if effect is None:
                continue
            if self.strict:
                app = self.applicable(narrative, name, tick, counter)
                if app is Truth.UNKNOWN:
                    return Truth.UNKNOWN
                if app is Truth.FALSE:
                    continue  # the event never executed
            return effect
        return narrative.initial_truth(fluent)

    def applicable(self, narrative: Narrative, action: str, t: int,
                   counter: InspectionCounter | None = None) -> Truth:
        """Kleene conjunction of the action's preconditions at time t."""
        spec = self._spec(action)
        values = []
        for literal in spec.preconditions:
            fluent, positive = _strip(literal)
            v = self.holds(narrative, fluent, t, counter)
            values.append(v if positive else v.negate())
        return kleene_and(values)


# --- scenario fixture format -----------------------------------------------------

def _list_items(t: Term) -> tuple[Term, ...]:
    if t == Atom("nil"):
        return ()
    if isinstance(t, Compound) and t.functor == "list":
        return t.args
    raise ScenarioError(f"expected a [...] list, got {t}")


def load_scenario(text: str) -> tuple[FluentReasoner, Narrative]:
    """Scenario file: action(...), init(literal), happens(name, tick) lines."""
    actions: dict[str, ActionSpec] = {}
    initial: list[Term] = []
    events: list[tuple[str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            t = parse_term(line)
        except ValueError as e:
            raise ScenarioError(f"line {lineno}: {e}") from None
        if not isinstance(t, Compound):
            raise ScenarioError(f"line {lineno}: unexpected entry {line!r}")
        if t.functor == "action" and len(t.args) == 4:
            name, pre, add, delete = t.args
            parts = {}
            for part in (pre, add, delete):
                if not (isinstance(part, Compound) and len(part.args) == 1
                        and part.functor in ("pre", "add", "del")):
                    raise ScenarioError(
                        f"line {lineno}: expected pre(...), add(...), del(...)"
                    )
                parts[part.functor] = _list_items(part.args[0])
            if not isinstance(name, Atom):
                raise ScenarioError(f"line {lineno}: action name must be a symbol")
            actions[name.name] = ActionSpec(
                name=name.name,
                preconditions=parts["pre"],
                adds=parts["add"],
                dels=parts["del"],
            )
        elif t.functor == "init" and len(t.args) == 1:
            initial.append(t.args[0])
        elif t.functor == "happens" and len(t.args) == 2:
            name, tick = t.args
            if not isinstance(name, Atom) or not hasattr(tick, "value"):
                raise ScenarioError(f"line {lineno}: expected happens(name, tick)")
            events.append((name.name, int(tick.value)))
        else:
            raise ScenarioError(f"line {lineno}: unexpected entry {line!r}")
    narrative = Narrative(tuple(initial), tuple(events))
    reasoner = FluentReasoner(actions)
    for name, _ in narrative.events:
        reasoner._spec(name)
    return reasoner, narrative
