import random
from itertools import product
from pathlib import Path

import pytest

from parley.fluents import (
    ActionSpec,
    FluentReasoner,
    InspectionCounter,
    Narrative,
    ScenarioError,
    Truth,
    kleene_and,
    load_scenario,
)
from parley.terms import Atom, parse_term

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

ON = Atom("on")
POWERED = Atom("powered")
DARK = Atom("dark")
HOT = Atom("hot")
FLUENTS = (ON, POWERED, DARK, HOT)

LIBRARY = [
    ActionSpec("switch_on", preconditions=(parse_term("not(on)"), POWERED),
               adds=(ON,), dels=(DARK,)),
    ActionSpec("switch_off", preconditions=(ON,), adds=(DARK,), dels=(ON,)),
    ActionSpec("unplug", adds=(), dels=(POWERED, ON)),
    ActionSpec("toggle_heat", preconditions=(ON,), adds=(HOT,), dels=()),
]


def reasoner(strict=False):
    return FluentReasoner(LIBRARY, strict=strict)


def test_regression_example():
    n = Narrative(initial=(parse_term("not(on)"),),
                  events=(("switch_on", 1),))
    r = reasoner()
    assert r.holds(n, ON, 2) is Truth.TRUE
    assert r.holds(n, ON, 0) is Truth.FALSE
    assert r.holds(n, ON, 1) is Truth.FALSE  # the event has not fired yet at t=1


def test_unmentioned_fluent_is_unknown():
    n = Narrative(initial=(POWERED,), events=(("toggle_heat", 1),))
    assert reasoner().holds(n, DARK, 5) is Truth.UNKNOWN


def test_latest_relevant_event_wins():
    n = Narrative(initial=(parse_term("not(on)"), POWERED),
                  events=(("switch_on", 1), ("switch_off", 2), ("switch_on", 3)))
    r = reasoner()
    assert r.holds(n, ON, 2) is Truth.TRUE
    assert r.holds(n, ON, 3) is Truth.FALSE
    assert r.holds(n, ON, 9) is Truth.TRUE


def test_applicable_kleene():
    r = reasoner()
    all_true = Narrative(initial=(parse_term("not(on)"), POWERED))
    assert r.applicable(all_true, "switch_on", 1) is Truth.TRUE
    one_false = Narrative(initial=(ON, POWERED))
    assert r.applicable(one_false, "switch_on", 1) is Truth.FALSE
    one_unknown = Narrative(initial=(parse_term("not(on)"),))  # powered unknown
    assert r.applicable(one_unknown, "switch_on", 1) is Truth.UNKNOWN
    assert kleene_and([Truth.UNKNOWN, Truth.FALSE]) is Truth.FALSE


def test_undeclared_action_is_error():
    n = Narrative(events=(("dance", 1),))
    with pytest.raises(ScenarioError):
        reasoner().holds(n, ON, 2)


def test_narrative_validation():
    with pytest.raises(ScenarioError):
        Narrative(initial=(ON, parse_term("not(on)")))
    with pytest.raises(ScenarioError):
        Narrative(events=(("switch_on", 2), ("switch_off", 2)))
    with pytest.raises(ScenarioError):
        Narrative(events=(("switch_on", 0),))
    with pytest.raises(ScenarioError):
        ActionSpec("bad", adds=(ON,), dels=(ON,))


def _simulate(initial_true: set, events, t) -> set:
    """Forward oracle: apply effects unconditionally in narrative order."""
    state = set(initial_true)
    actions = {a.name: a for a in LIBRARY}
    for name, tick in events:
        if tick >= t:
            break
        spec = actions[name]
        state -= set(spec.dels)
        state |= set(spec.adds)
    return state


def all_narratives(max_events, action_names):
    """Every event sequence of length <= max_events at ticks 1..k."""
    for k in range(max_events + 1):
        for combo in product(action_names, repeat=k):
            yield tuple((name, i + 1) for i, name in enumerate(combo))


def test_regression_equals_forward_simulation_sample():
    """Spot-check here; the exhaustive sweep lives in the acceptance suite."""
    action_names = [a.name for a in LIBRARY]
    r = reasoner()
    rng = random.Random(3)
    narratives = list(all_narratives(3, action_names))
    for events in rng.sample(narratives, 40):
        for bits in product((True, False), repeat=len(FLUENTS)):
            initial_true = {f for f, b in zip(FLUENTS, bits) if b}
            literals = tuple(
                f if b else parse_term(f"not({f.name})")
                for f, b in zip(FLUENTS, bits)
            )
            n = Narrative(initial=literals, events=events)
            for t in range(len(events) + 2):
                state = _simulate(initial_true, events, t)
                for f in FLUENTS:
                    expected = Truth.TRUE if f in state else Truth.FALSE
                    assert r.holds(n, f, t) is expected, (events, bits, f, t)


def test_monotone_refinement_single_step():
    action_names = [a.name for a in LIBRARY]
    r = reasoner()
    rng = random.Random(8)
    narratives = list(all_narratives(2, action_names))
    for events in rng.sample(narratives, 10):
        for states in product((Truth.TRUE, Truth.FALSE, Truth.UNKNOWN),
                              repeat=len(FLUENTS)):
            literals = []
            unknowns = []
            for f, s in zip(FLUENTS, states):
                if s is Truth.TRUE:
                    literals.append(f)
                elif s is Truth.FALSE:
                    literals.append(parse_term(f"not({f.name})"))
                else:
                    unknowns.append(f)
            base = Narrative(initial=tuple(literals), events=events)
            for f in unknowns:
                for resolved in (f, parse_term(f"not({f.name})")):
                    refined = Narrative(initial=tuple(literals) + (resolved,),
                                        events=events)
                    for t in range(len(events) + 2):
                        for probe in FLUENTS:
                            before = r.holds(base, probe, t)
                            after = r.holds(refined, probe, t)
                            if before is not Truth.UNKNOWN:
                                assert after is before, (events, states, probe, t)


def test_strict_mode_unknown_applicability_propagates():
    # powered unknown -> switch_on applicability unknown -> strict holds unknown
    n = Narrative(initial=(parse_term("not(on)"),), events=(("switch_on", 1),))
    assert reasoner().holds(n, ON, 2) is Truth.TRUE
    assert reasoner(strict=True).holds(n, ON, 2) is Truth.UNKNOWN


def test_strict_mode_skips_inapplicable_event():
    # on is true initially, so switch_on's not(on) precondition fails
    n = Narrative(initial=(ON, POWERED, DARK), events=(("switch_on", 1),))
    assert reasoner().holds(n, DARK, 2) is Truth.FALSE  # non-strict applies del
    assert reasoner(strict=True).holds(n, DARK, 2) is Truth.TRUE  # event skipped


def test_inspection_counter_bounded_by_events_before_t():
    events = tuple(("toggle_heat", i) for i in range(1, 9))
    n = Narrative(initial=(ON,), events=events)
    r = reasoner()
    for t in range(10):
        counter = InspectionCounter()
        r.holds(n, DARK, t, counter)
        in_window = sum(1 for _, tick in events if tick < t)
        assert counter.events_inspected <= in_window


def test_scenario_fixture_round_trip():
    r, n = load_scenario((FIXTURES / "scenario.txt").read_text())
    assert r.holds(n, ON, 2) is Truth.TRUE
    assert r.holds(n, HOT, 3) is Truth.TRUE
    assert r.holds(n, ON, 9) is Truth.FALSE
    assert r.applicable(n, "switch_on", 1) is Truth.TRUE


def test_scenario_loader_errors():
    with pytest.raises(ScenarioError):
        load_scenario("action(a, pre([]), add([x]), del([x]))")
    with pytest.raises(ScenarioError):
        load_scenario("happens(ghost, 1)")
    with pytest.raises(ScenarioError):
        load_scenario("gibberish")
