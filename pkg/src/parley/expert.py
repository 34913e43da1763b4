"""Train-schedule domain expert: a pluggable task-domain agent.

Loads a timetable from CSV, advertises a lookup capability with the broker,
and answers ``achieve`` requests by unifying the query against its rows
(first match in file order).  Everything domain-specific lives here; the
rest of the agency never mentions trains.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

from .broker import CapabilityAd, advertise_message
from .bus import Bus
from .kqml import KqmlMessage, Performative, reply_to
from .runtime import Agent, BehaviouralRule, MessagePattern, Private
from .terms import Atom, Compound, Str, Term, apply, fresh_var, parse_term, unify

_TIME_RE = re.compile(r"^([01][0-9]|2[0-3]):[0-5][0-9]$")

REQUIRED_COLUMNS = ("origin", "destination", "departs", "train_id")


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleRow:
    origin: str
    destination: str
    departs: str
    train_id: str

    def __post_init__(self) -> None:
        if not _TIME_RE.match(self.departs):
            raise ScheduleError(f"bad departure time {self.departs!r}")

    def query_term(self) -> Term:
        return Compound("dep_time", (
            Atom(self.origin), Atom(self.destination), Str(self.departs),
        ))


class ScheduleExpert:
    def __init__(self, name: str = "expert"):
        self.name = name
        self.rows: list[ScheduleRow] = []

    def load_csv(self, path: str | Path) -> int:
        """Validate and store all rows; duplicates are kept."""
        with open(path, newline="", encoding="utf-8") as fp:
            reader = csv.DictReader(fp)
            header = reader.fieldnames or []
            missing = [c for c in REQUIRED_COLUMNS if c not in header]
            if missing:
                raise ScheduleError(f"missing column(s): {', '.join(missing)}")
            rows = []
            for index, record in enumerate(reader):
                try:
                    rows.append(ScheduleRow(
                        origin=record["origin"].strip(),
                        destination=record["destination"].strip(),
                        departs=record["departs"].strip(),
                        train_id=record["train_id"].strip(),
                    ))
                except ScheduleError as e:
                    raise ScheduleError(f"row {index}: {e}") from None
        self.rows.extend(rows)
        return len(rows)

    def capability(self) -> CapabilityAd:
        return CapabilityAd(
            provider=self.name,
            name="schedule_lookup",
            input_pattern=parse_term("dep_time(O, D, T)"),
            input_types=(("O", "city"), ("D", "city")),
            output_type="schedule_answer",
        )

    def answer(self, query: Term) -> Term | None:
        """First row (file order) whose term unifies with the query."""
        for row in self.rows:
            sigma = unify(query, row.query_term())
            if sigma is not None:
                return apply(sigma, query)
        return None

    def handle_achieve(self, m: KqmlMessage) -> list[KqmlMessage]:
        if not (isinstance(m.content, Compound) and m.content.functor == "dep_time"
                and len(m.content.args) == 3):
            return [reply_to(m, Performative.ERROR, self.name,
                             Compound("bad_query", (m.content,)))]
        result = self.answer(m.content)
        if result is None:
            return [reply_to(m, Performative.SORRY, self.name,
                             Compound("no_match", (m.content,)))]
        return [reply_to(m, Performative.REPLY, self.name, result)]


def make_expert_agent(bus: Bus, csv_path: str | Path,
                      broker_name: str = "broker",
                      name: str = "expert") -> tuple[Agent, ScheduleExpert]:
    """Wire the expert onto the bus and advertise its capability at startup."""
    expert = ScheduleExpert(name)
    expert.load_csv(csv_path)
    agent = Agent(name, bus)

    def on_achieve(ag: Agent, args: Term):
        return expert.handle_achieve(ag.current_message)

    agent.register_private("handle_achieve", on_achieve)
    q = fresh_var("Q")
    agent.install_rule(BehaviouralRule(
        "on_achieve",
        MessagePattern(Performative.ACHIEVE, fresh_var("S"), q),
        then_do=(Private("handle_achieve", q),),
    ))
    bus.send(advertise_message(name, broker_name, expert.capability()))
    return agent, expert
