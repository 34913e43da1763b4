from pathlib import Path

from parley.broker import Ontology, make_broker_agent
from parley.bus import Bus
from parley.dme import InformationState, make_dme_agent
from parley.expert import make_expert_agent
from parley.kqml import KqmlMessage, Performative
from parley.runtime import TickDriver
from parley.terms import alpha_equal, parse_term, print_term
from parley.viewfinder import AttitudeType

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def tell_move(speaker, act, sender="im"):
    return KqmlMessage(
        Performative.TELL, sender, "dme",
        parse_term(f"move({speaker}, {act})"), content_type="dialogue_move",
    )


def setup():
    bus = Bus()
    agent, dme = make_dme_agent(bus, route_receiver="km")
    bus.register("km")
    bus.register("im")
    return bus, agent, dme


def system_moves(bus):
    return [print_term(m.content) for m in bus.drain("km")]


def test_greet_round_trip_single_tick():
    bus, agent, dme = setup()
    bus.send(tell_move("user", "greet"))
    report = agent.step()
    assert report.hook_activity
    assert system_moves(bus) == ["move(system, greet)"]
    assert dme.state.last_move == ("user", parse_term("greet"))
    assert dme.state.agenda == InformationState().agenda


def test_ask_without_belief_recruits_expert():
    bus, agent, dme = setup()
    bus.register("broker")
    bus.send(tell_move("user", "ask(dep_time(geneva, lausanne, T))"))
    agent.step()
    assert len(dme.state.qud) == 1
    assert alpha_equal(dme.state.qud[0], parse_term("dep_time(geneva, lausanne, T)"))
    (recruit,) = bus.drain("broker")
    assert recruit.performative is Performative.RECRUIT_ONE
    assert recruit.reply_with == "q1"
    assert system_moves(bus) == []


def test_expert_reply_pops_qud_and_answers():
    bus, agent, dme = setup()
    bus.register("broker")
    bus.send(tell_move("user", "ask(dep_time(geneva, lausanne, T))"))
    agent.step()
    bus.drain("broker")
    bus.send(KqmlMessage(
        Performative.REPLY, "expert", "dme",
        parse_term('dep_time(geneva, lausanne, "08:15")'), in_reply_to="q1",
    ))
    agent.step()
    assert dme.state.qud == []
    assert parse_term('dep_time(geneva, lausanne, "08:15")') in dme.state.common_ground
    assert system_moves(bus) == ['move(system, answer(dep_time(geneva, lausanne, "08:15")))']
    # assimilated: the same question is now answered from private beliefs
    bus.send(tell_move("user", "ask(dep_time(geneva, lausanne, T2))"))
    agent.step()
    assert bus.pending("broker") == 0
    assert system_moves(bus) == ['move(system, answer(dep_time(geneva, lausanne, "08:15")))']
    assert dme.state.qud == []


def test_unmatched_reply_is_ignored():
    bus, agent, dme = setup()
    bus.send(KqmlMessage(Performative.REPLY, "expert", "dme",
                         parse_term("noise"), in_reply_to="zz"))
    report = agent.step()
    assert not report.hook_activity
    assert dme.state.agenda == InformationState().agenda


def test_ask_with_private_belief_answers_directly():
    bus, agent, dme = setup()
    agent.mental.beliefs.assert_prop(parse_term('dep_time(lausanne, bern, "09:00")'))
    bus.send(tell_move("user", "ask(dep_time(lausanne, bern, T))"))
    agent.step()
    assert system_moves(bus) == ['move(system, answer(dep_time(lausanne, bern, "09:00")))']
    assert dme.state.qud == []  # self-answer resolved on the way out
    assert parse_term('dep_time(lausanne, bern, "09:00")') in dme.state.common_ground


def test_qud_stacks_newest_on_top():
    bus, agent, dme = setup()
    bus.register("broker")
    bus.send(tell_move("user", "ask(dep_time(geneva, lausanne, T))"))
    agent.step()
    bus.send(tell_move("user", "ask(dep_time(bern, zurich, U))"))
    agent.step()
    assert len(dme.state.qud) == 2
    assert alpha_equal(dme.state.qud[0], parse_term("dep_time(bern, zurich, U)"))


def test_user_answer_relevance_by_unification():
    bus, agent, dme = setup()
    bus.register("broker")
    bus.send(tell_move("user", "ask(dep_time(geneva, lausanne, T))"))
    agent.step()
    bus.drain("broker")
    bus.send(tell_move("user", 'answer(dep_time(geneva, lausanne, "10:45"))'))
    agent.step()
    assert dme.state.qud == []
    assert parse_term('dep_time(geneva, lausanne, "10:45")') in dme.state.common_ground


def test_irrelevant_answer_keeps_qud_and_requests_clarification():
    bus, agent, dme = setup()
    bus.register("broker")
    bus.send(tell_move("user", "ask(dep_time(geneva, lausanne, T))"))
    agent.step()
    bus.drain("broker")
    bus.send(tell_move("user", "answer(likes(cheese))"))
    agent.step()
    assert len(dme.state.qud) == 1
    assert parse_term("unresolved(likes(cheese))") in dme.state.common_ground
    assert system_moves(bus) == ["move(system, clarification_request(likes(cheese)))"]


def test_answer_with_empty_qud_is_irrelevant_branch():
    bus, agent, dme = setup()
    bus.send(tell_move("user", "answer(likes(cheese))"))
    agent.step()
    assert parse_term("unresolved(likes(cheese))") in dme.state.common_ground


def test_implausible_queues_clarification_and_notes_user_model():
    bus, agent, dme = setup()
    bus.send(KqmlMessage(
        Performative.TELL, "im", "dme",
        parse_term("implausible(3, unknown(3), 0)"), content_type="dialogue_move",
    ))
    agent.step()
    assert system_moves(bus) == ["move(system, clarification_request(unknown(3)))"]
    user_view = agent.mental.beliefs.view((("user", AttitudeType.BELIEF),))
    assert parse_term("uncertain(3)") in {ap.prop for ap in user_view}


def test_two_implausibles_fifo_one_move_per_tick():
    bus, agent, dme = setup()
    for i in (7, 8):
        bus.send(KqmlMessage(
            Performative.TELL, "im", "dme",
            parse_term(f"implausible({i}, unknown({i}), 0)"),
            content_type="dialogue_move",
        ))
    agent.step()
    assert system_moves(bus) == ["move(system, clarification_request(unknown(7)))"]
    assert len(dme.state.agenda) == 1
    agent.step()
    assert system_moves(bus) == ["move(system, clarification_request(unknown(8)))"]
    agent.step()
    assert not agent.step().hook_activity


def test_request_move_acknowledged():
    bus, agent, dme = setup()
    bus.send(tell_move("user", "request(ticket)"))
    agent.step()
    assert system_moves(bus) == ["move(system, ack(request(ticket)))"]


def test_recruitment_sorry_becomes_cannot_help():
    bus, agent, dme = setup()
    bus.register("broker")
    bus.send(tell_move("user", "ask(weather(tomorrow))"))
    agent.step()
    (recruit,) = bus.drain("broker")
    bus.send(KqmlMessage(
        Performative.SORRY, "broker", "dme",
        parse_term("no_capability(weather(tomorrow))"),
        in_reply_to=recruit.reply_with,
    ))
    agent.step()
    moves = system_moves(bus)
    assert moves == ["move(system, cannot_help(no_capability(weather(tomorrow))))"]


def test_full_loop_with_broker_and_expert_golden_transitions():
    """Frozen state-transition trace for a scripted exchange, computed by hand."""
    bus = Bus()
    broker_agent, _ = make_broker_agent(
        bus, Ontology.load((FIXTURES / "ontology.txt").read_text())
    )
    expert_agent, _ = make_expert_agent(bus, FIXTURES / "schedule.csv")
    dme_agent, dme = make_dme_agent(bus)
    bus.register("km")
    bus.register("im")
    driver = TickDriver(bus, [broker_agent, expert_agent, dme_agent])
    driver.run_until_quiescent()

    transitions = []

    def snap():
        transitions.append(dme.state.snapshot())

    bus.send(tell_move("user", "greet"))
    driver.run_until_quiescent()
    snap()
    bus.send(tell_move("user", "ask(dep_time(geneva, lausanne, T))"))
    driver.run_until_quiescent()
    snap()
    bus.send(tell_move("user", "request(ticket)"))
    driver.run_until_quiescent()
    snap()

    assert transitions == [
        {
            "qud": [],
            "common_ground": [],
            "last_move": {"speaker": "user", "act": "greet"},
            "agenda": [],
        },
        {
            "qud": [],
            "common_ground": ['dep_time(geneva, lausanne, "08:15")'],
            "last_move": {"speaker": "user",
                          "act": "ask(dep_time(geneva, lausanne, T))"},
            "agenda": [],
        },
        {
            "qud": [],
            "common_ground": ['dep_time(geneva, lausanne, "08:15")'],
            "last_move": {"speaker": "user", "act": "request(ticket)"},
            "agenda": [],
        },
    ]
    moves = system_moves(bus)
    assert moves == [
        "move(system, greet)",
        'move(system, answer(dep_time(geneva, lausanne, "08:15")))',
        "move(system, ack(request(ticket)))",
    ]
