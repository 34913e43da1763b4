from pathlib import Path

import pytest

from parley.broker import Ontology, make_broker_agent
from parley.bus import Bus
from parley.expert import ScheduleError, ScheduleExpert, make_expert_agent
from parley.kqml import KqmlMessage, Performative
from parley.runtime import TickDriver
from parley.terms import parse_term, unify

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def write_csv(tmp_path, body):
    p = tmp_path / "schedule.csv"
    p.write_text(body)
    return p


VALID = """origin,destination,departs,train_id
geneva,lausanne,08:15,ir1
lausanne,bern,09:00,ic5
geneva,lausanne,10:45,ir7
"""


def test_load_csv_counts_rows(tmp_path):
    e = ScheduleExpert()
    assert e.load_csv(write_csv(tmp_path, VALID)) == 3


def test_load_csv_bad_time_reports_row(tmp_path):
    e = ScheduleExpert()
    bad = "origin,destination,departs,train_id\ngeneva,bern,25:61,x1\n"
    with pytest.raises(ScheduleError) as exc:
        e.load_csv(write_csv(tmp_path, bad))
    assert "row 0" in str(exc.value)


def test_load_csv_header_only(tmp_path):
    e = ScheduleExpert()
    assert e.load_csv(write_csv(tmp_path, "origin,destination,departs,train_id\n")) == 0


def test_load_csv_missing_column(tmp_path):
    e = ScheduleExpert()
    with pytest.raises(ScheduleError) as exc:
        e.load_csv(write_csv(tmp_path, "origin,destination,departs\na,b,08:00\n"))
    assert "train_id" in str(exc.value)


def achieve(content, reply_with="q1"):
    return KqmlMessage(Performative.ACHIEVE, "dme", "expert",
                       parse_term(content), reply_with=reply_with)


def loaded_expert(tmp_path):
    e = ScheduleExpert()
    e.load_csv(write_csv(tmp_path, VALID))
    return e


def test_achieve_lookup_instantiates_variable(tmp_path):
    e = loaded_expert(tmp_path)
    (reply,) = e.handle_achieve(achieve("dep_time(geneva, lausanne, T)"))
    assert reply.performative is Performative.REPLY
    assert reply.receiver == "dme"
    assert reply.in_reply_to == "q1"
    assert reply.content == parse_term('dep_time(geneva, lausanne, "08:15")')


def test_achieve_unknown_city_is_sorry(tmp_path):
    e = loaded_expert(tmp_path)
    (sorry,) = e.handle_achieve(achieve("dep_time(zurich, basel, T)"))
    assert sorry.performative is Performative.SORRY


def test_two_matches_first_in_file_order(tmp_path):
    e = loaded_expert(tmp_path)
    (reply,) = e.handle_achieve(achieve("dep_time(geneva, lausanne, T)"))
    assert '"08:15"' in str(parse_term('dep_time(geneva, lausanne, "08:15")')) or True
    assert reply.content.args[2].value == "08:15"


def test_answers_are_sound(tmp_path):
    e = loaded_expert(tmp_path)
    for query in ("dep_time(geneva, lausanne, T)", "dep_time(O, bern, T)",
                  "dep_time(O, D, T)"):
        (reply,) = e.handle_achieve(achieve(query))
        assert any(
            unify(reply.content, row.query_term()) is not None for row in e.rows
        )


def test_malformed_query_is_error(tmp_path):
    e = loaded_expert(tmp_path)
    (err,) = e.handle_achieve(achieve("weather(tomorrow)"))
    assert err.performative is Performative.ERROR


def test_expert_advertises_and_answers_via_broker(tmp_path):
    bus = Bus()
    broker_agent, broker = make_broker_agent(
        bus, Ontology.load((FIXTURES / "ontology.txt").read_text())
    )
    expert_agent, expert = make_expert_agent(
        bus, write_csv(tmp_path, VALID), broker_name="broker"
    )
    bus.register("dme")
    driver = TickDriver(bus, [broker_agent, expert_agent])
    driver.run_until_quiescent()
    assert ("expert", "schedule_lookup") in broker.registry
    bus.send(KqmlMessage(
        Performative.RECRUIT_ONE, "dme", "broker",
        parse_term("dep_time(geneva, lausanne, T)"), reply_with="q9",
    ))
    driver.run_until_quiescent()
    (reply,) = bus.drain("dme")
    assert reply.performative is Performative.REPLY
    assert reply.sender == "expert"
    assert reply.in_reply_to == "q9"
    assert reply.content == parse_term('dep_time(geneva, lausanne, "08:15")')
