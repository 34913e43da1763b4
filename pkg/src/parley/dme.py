"""Information-state dialogue move engine, built on the agent runtime.

Dialogue moves arrive as KQML tells (routed by the flow manager); each
update rule is a behavioural rule on the engine's agent.  The information
state holds the question-under-discussion stack, the common ground, the
last move and a FIFO agenda of system acts; the engine's private beliefs
(a viewfinder environment) model the user and remember assimilated facts,
so a question answered once by a domain expert is answered privately the
next time it is asked.

One system move leaves per tick: the agenda head is dequeued in the
commitment phase and routed to the output stage, except that a
``clarify_or_forward`` item instead recruits a domain expert through the
broker.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from collections import deque

from .bus import Bus
from .kqml import KqmlMessage, Performative
from .runtime import Agent, BehaviouralRule, MessagePattern, Private
from .terms import (
    Atom,
    Compound,
    Term,
    alpha_equal,
    apply,
    fresh_var,
    print_term,
    unify,
)
from .viewfinder import AttitudeType


@dataclass
class InformationState:
    qud: list[Term] = field(default_factory=list)  # index 0 = top
    common_ground: list[Term] = field(default_factory=list)
    last_move: tuple[str, Term] | None = None
    agenda: deque[Term] = field(default_factory=deque)

    def push_qud(self, q: Term) -> None:
        """Entries are unique up to renaming; re-asking raises to the top."""
        self.qud = [x for x in self.qud if not alpha_equal(x, q)]
        self.qud.insert(0, q)

    def add_common_ground(self, p: Term) -> None:
        if p not in self.common_ground:
            self.common_ground.append(p)

    def snapshot(self) -> dict:
        return {
            "qud": [print_term(q) for q in self.qud],
            "common_ground": [print_term(p) for p in self.common_ground],
            "last_move": None if self.last_move is None else {
                "speaker": self.last_move[0],
                "act": print_term(self.last_move[1]),
            },
            "agenda": [print_term(a) for a in self.agenda],
        }


class DialogueMoveEngine:
    """State plus update handlers; attach to a bus with make_dme_agent."""

    def __init__(self, agent: Agent, broker_name: str = "broker",
                 route_receiver: str = "km",
                 move_content_type: str = "dialogue_move"):
        self.agent = agent
        self.state = InformationState()
        self.broker_name = broker_name
        self.route_receiver = route_receiver
        self.move_content_type = move_content_type
        self.revision = 0  # bumped on every state change, for snapshot export
        self._correlations = itertools.count(1)
        self._outstanding: set[str] = set()

    # -- state helpers -------------------------------------------------------

    def _touch(self) -> None:
        self.revision += 1

    def _assimilate(self, p: Term) -> None:
        """Common ground is also asserted into private beliefs."""
        self.state.add_common_ground(p)
        self.agent.mental.beliefs.assert_prop(p)
        self._touch()

    def _resolve_answer(self, answer: Term) -> bool:
        """Pop the QUD top when the answer unifies with it."""
        if not self.state.qud:
            return False
        top = self.state.qud[0]
        sigma = unify(top, answer)
        if sigma is None:
            return False
        self.state.qud.pop(0)
        self._assimilate(apply(sigma, top))
        return True

    # -- update rules ----------------------------------------------------------

    def update_on_move(self, speaker: str, act: Term) -> None:
        self.state.last_move = (speaker, act)
        self._touch()
        if isinstance(act, Compound) and act.functor == "ask" and len(act.args) == 1:
            self._update_on_ask(act.args[0])
        elif isinstance(act, Compound) and act.functor == "answer" and len(act.args) == 1:
            self._update_on_answer(act.args[0])
        else:
            # greet, bye, request(...), and anything else: acknowledge in kind
            self.state.agenda.append(self._respond(act))
            self._touch()

    def _respond(self, act: Term) -> Term:
        if act in (Atom("greet"), Atom("bye")):
            return act
        return Compound("ack", (act,))

    def _update_on_ask(self, q: Term) -> None:
        self.state.push_qud(q)
        self._touch()
        result = self.agent.mental.beliefs.infer(q, self.agent.infer_depth)
        if result.answers:
            answered = apply(result.answers[0], q)
            self.state.agenda.append(Compound("answer", (answered,)))
        else:
            self.state.agenda.append(Compound("clarify_or_forward", (q,)))
        self._touch()

    def _update_on_answer(self, a: Term) -> None:
        if self._resolve_answer(a):
            return
        # irrelevant (or no open question): keep the QUD, ask for clarification
        self.state.add_common_ground(Compound("unresolved", (a,)))
        self.state.agenda.append(Compound("clarification_request", (a,)))
        self._touch()

    def update_on_implausible(self, utterance_id: Term, act: Term) -> None:
        self.state.agenda.append(Compound("clarification_request", (act,)))
        user_view = self.agent.mental.beliefs.child("user", AttitudeType.BELIEF)
        user_view.assert_prop(Compound("uncertain", (utterance_id,)))
        self._touch()

    def update_on_reply(self, m: KqmlMessage) -> None:
        """A recruited expert answered: resolve the question and tell the user."""
        if m.in_reply_to not in self._outstanding:
            return
        self._outstanding.discard(m.in_reply_to)
        self._resolve_answer(m.content)
        self.state.agenda.append(Compound("answer", (m.content,)))
        self._touch()

    def update_on_sorry(self, m: KqmlMessage) -> None:
        if m.in_reply_to not in self._outstanding:
            return
        self._outstanding.discard(m.in_reply_to)
        self.state.agenda.append(Compound("cannot_help", (m.content,)))
        self._touch()

    # -- selection (commitment phase) -------------------------------------------

    def select_next(self, agent: Agent) -> bool:
        """Dequeue one agenda item per tick; returns whether anything happened."""
        if not self.state.agenda:
            return False
        act = self.state.agenda.popleft()
        self._touch()
        if isinstance(act, Compound) and act.functor == "clarify_or_forward":
            correlation = f"q{next(self._correlations)}"
            self._outstanding.add(correlation)
            agent.send(KqmlMessage(
                performative=Performative.RECRUIT_ONE,
                sender=agent.name,
                receiver=self.broker_name,
                content=act.args[0],
                reply_with=correlation,
            ))
            return True
        if isinstance(act, Compound) and act.functor == "answer":
            # a system self-answer resolves its own question on the way out
            self._resolve_answer(act.args[0])
        agent.send(KqmlMessage(
            performative=Performative.TELL,
            sender=agent.name,
            receiver=self.route_receiver,
            content=Compound("move", (Atom("system"), act)),
            content_type=self.move_content_type,
        ))
        return True


def make_dme_agent(bus: Bus, name: str = "dme", broker_name: str = "broker",
                   route_receiver: str = "km",
                   move_content_type: str = "dialogue_move") -> tuple[Agent, DialogueMoveEngine]:
    agent = Agent(name, bus)
    dme = DialogueMoveEngine(agent, broker_name, route_receiver, move_content_type)

    def on_move(ag: Agent, args: Term) -> None:
        speaker, act = args.args
        dme.update_on_move(speaker.name, act)

    def on_implausible(ag: Agent, args: Term) -> None:
        utterance_id, act, _score = args.args
        dme.update_on_implausible(utterance_id, act)

    def on_reply(ag: Agent, args: Term) -> None:
        dme.update_on_reply(ag.current_message)

    def on_sorry(ag: Agent, args: Term) -> None:
        dme.update_on_sorry(ag.current_message)

    agent.register_private("dme_move", on_move)
    agent.register_private("dme_implausible", on_implausible)
    agent.register_private("dme_reply", on_reply)
    agent.register_private("dme_sorry", on_sorry)

    move_pat = Compound("move", (fresh_var("Speaker"), fresh_var("Act")))
    agent.install_rule(BehaviouralRule(
        "update_on_move",
        MessagePattern(Performative.TELL, fresh_var("S"), move_pat),
        then_do=(Private("dme_move", move_pat),),
    ))
    implausible_pat = Compound(
        "implausible", (fresh_var("Id"), fresh_var("Act"), fresh_var("Score"))
    )
    agent.install_rule(BehaviouralRule(
        "update_on_implausible",
        MessagePattern(Performative.TELL, fresh_var("S"), implausible_pat),
        then_do=(Private("dme_implausible", implausible_pat),),
    ))
    reply_pat = fresh_var("A")
    agent.install_rule(BehaviouralRule(
        "assimilate_reply",
        MessagePattern(Performative.REPLY, fresh_var("S"), reply_pat),
        then_do=(Private("dme_reply", reply_pat),),
    ))
    sorry_pat = fresh_var("R")
    agent.install_rule(BehaviouralRule(
        "recruitment_failed",
        MessagePattern(Performative.SORRY, fresh_var("S"), sorry_pat),
        then_do=(Private("dme_sorry", sorry_pat),),
    ))
    agent.add_tick_hook(dme.select_next)
    return agent, dme
