"""Flow manager: routes typed content along a dataflow graph.

The graph lives as ``stage(name, agent)`` and ``edge(from, to, type)``
propositions inside the mediator agent's belief environment, so runtime
reconfiguration is a plain assert/retract on that environment.  Routing is
a pure function of (sender's stage, content type, current edge set): each
matching edge forwards a copy to the target stage's agent, preserving
content and correlation ids.
"""

from __future__ import annotations

from .bus import Bus
from .kqml import KqmlMessage, Performative, reply_to
from .runtime import Agent, BehaviouralRule, MessagePattern, Private
from .terms import Atom, Compound, Term, fresh_var, parse_term
from .viewfinder import Environment


class FlowError(ValueError):
    pass


def _edge(frm: str, to: str, content_type: str) -> Compound:
    return Compound("edge", (Atom(frm), Atom(to), Atom(content_type)))


def _stage(name: str, agent: str) -> Compound:
    return Compound("stage", (Atom(name), Atom(agent)))


class FlowManager:
    """Graph storage and routing decisions for one mediator agent."""

    def __init__(self, env: Environment, mediator_name: str,
                 authorized: set[str] | None = None):
        self.env = env
        self.mediator_name = mediator_name
        self.authorized = set(authorized or ())
        self.content_types: set[str] = set()

    # -- graph access -------------------------------------------------------

    def _props(self) -> list[Term]:
        return list(self.env.explicit)

    def stages(self) -> dict[str, str]:
        out = {}
        for p in self._props():
            if isinstance(p, Compound) and p.functor == "stage" and len(p.args) == 2:
                out[p.args[0].name] = p.args[1].name
        return out

    def edges(self) -> list[tuple[str, str, str]]:
        out = []
        for p in self._props():
            if isinstance(p, Compound) and p.functor == "edge" and len(p.args) == 3:
                out.append((p.args[0].name, p.args[1].name, p.args[2].name))
        return out

    def register_content_type(self, name: str) -> None:
        self.content_types.add(name)

    def _validate_edge(self, term: Term) -> tuple[str, str, str]:
        if (
            not isinstance(term, Compound)
            or term.functor != "edge"
            or len(term.args) != 3
            or not all(isinstance(a, Atom) for a in term.args)
        ):
            raise FlowError(f"malformed edge term: {term}")
        frm, to, content_type = (a.name for a in term.args)
        if frm == to:
            raise FlowError(f"self-edge rejected: {frm}")
        stages = self.stages()
        if frm not in stages or to not in stages:
            raise FlowError(f"edge references undeclared stage: {frm} -> {to}")
        return frm, to, content_type

    def _validate_stage(self, term: Term) -> tuple[str, str]:
        if (
            not isinstance(term, Compound)
            or term.functor != "stage"
            or len(term.args) != 2
            or not all(isinstance(a, Atom) for a in term.args)
        ):
            raise FlowError(f"malformed stage term: {term}")
        return term.args[0].name, term.args[1].name

    def load(self, text: str) -> None:
        """Fixture: stage(...) and edge(...) terms, one per line; # comments."""
        pending_edges = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            t = parse_term(line)
            if isinstance(t, Compound) and t.functor == "stage":
                self._validate_stage(t)
                self.env.assert_prop(t)
            elif isinstance(t, Compound) and t.functor == "edge":
                pending_edges.append((lineno, t))
            else:
                raise FlowError(f"line {lineno}: expected stage(...) or edge(...)")
        for lineno, t in pending_edges:
            try:
                _, _, content_type = self._validate_edge(t)
            except FlowError as e:
                raise FlowError(f"line {lineno}: {e}") from None
            self.env.assert_prop(t)
            self.register_content_type(content_type)

    # -- operations ----------------------------------------------------------

    def route(self, m: KqmlMessage) -> list[KqmlMessage]:
        """Forward copies along every matching edge; sorry on a dead end."""
        if m.content_type is None:
            return [reply_to(m, Performative.ERROR, self.mediator_name,
                             Atom("missing_content_type"))]
        if m.content_type not in self.content_types:
            return [reply_to(m, Performative.ERROR, self.mediator_name,
                             Compound("unregistered_content_type",
                                      (Atom(m.content_type),)))]
        stages = self.stages()
        sender_stages = {name for name, agent in stages.items() if agent == m.sender}
        out = []
        for frm, to, content_type in self.edges():
            if content_type == m.content_type and frm in sender_stages:
                out.append(m.with_fields(receiver=stages[to]))
        if not out:
            return [reply_to(m, Performative.SORRY, self.mediator_name,
                             Compound("dead_end", (Atom(m.content_type),)))]
        return out

    def reconfigure(self, m: KqmlMessage) -> list[KqmlMessage]:
        """Apply assert(edge(...)) / retract(edge(...)) content; acknowledge."""
        if m.sender not in self.authorized:
            return [reply_to(m, Performative.ERROR, self.mediator_name,
                             Atom("unauthorized"))]
        content = m.content
        try:
            if (
                not isinstance(content, Compound)
                or content.functor not in ("assert", "retract")
                or len(content.args) != 1
            ):
                raise FlowError(f"malformed reconfigure content: {content}")
            term = content.args[0]
            if content.functor == "assert":
                if isinstance(term, Compound) and term.functor == "stage":
                    self._validate_stage(term)
                else:
                    _, _, content_type = self._validate_edge(term)
                    self.register_content_type(content_type)
                self.env.assert_prop(term)
            else:
                if not self.env.retract_prop(term):
                    return [reply_to(m, Performative.SORRY, self.mediator_name,
                                     Compound("not_found", (term,)))]
        except FlowError:
            return [reply_to(m, Performative.ERROR, self.mediator_name,
                             Compound("bad_reconfigure", (content,)))]
        return [reply_to(m, Performative.REPLY, self.mediator_name,
                         Compound("ok", (content,)))]


def make_flow_agent(bus: Bus, name: str = "km",
                    authorized: set[str] | None = None) -> tuple[Agent, FlowManager]:
    """A mediator agent whose beliefs hold the flow graph."""
    agent = Agent(name, bus)
    manager = FlowManager(agent.mental.beliefs, name, authorized)

    def on_reconfigure(ag: Agent, args: Term):
        return manager.reconfigure(ag.current_message)

    def on_route(ag: Agent, args: Term):
        return manager.route(ag.current_message)

    agent.register_private("reconfigure", on_reconfigure)
    agent.register_private("route", on_route)

    def rule(rule_name: str, content_pattern: Term, capability: str):
        return BehaviouralRule(
            rule_name,
            MessagePattern(Performative.TELL, fresh_var("S"), content_pattern),
            then_do=(Private(capability, content_pattern),),
        )

    assert_pat = Compound("assert", (fresh_var("E"),))
    retract_pat = Compound("retract", (fresh_var("E"),))
    agent.install_rule(rule("on_assert", assert_pat, "reconfigure"))
    agent.install_rule(rule("on_retract", retract_pat, "reconfigure"))
    agent.install_rule(rule("on_typed_tell", fresh_var("C"), "route"))
    return agent, manager
