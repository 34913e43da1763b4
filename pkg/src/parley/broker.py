"""Capability broker: matches advertised capabilities to recruit requests.

Capabilities are a pattern with typed variables plus an output type; a
request matches when it unifies with the pattern and every typed variable
it shares passes subsumption against a rooted type ontology.  ``recruit_one``
forwards the task as an ``achieve`` to the best-ranked provider, preserving
the original sender so the provider replies directly to the requester.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bus import Bus
from .kqml import KqmlMessage, Performative, reply_to
from .runtime import Agent, BehaviouralRule, MessagePattern, Private
from .terms import (
    Atom,
    Compound,
    Term,
    Var,
    apply,
    compound,
    fresh_var,
    parse_term,
    unify,
    variables,
)

ONTOLOGY_ROOT = "thing"


class OntologyError(ValueError):
    pass


class Ontology:
    """Rooted is-a tree of type symbols."""

    def __init__(self, root: str = ONTOLOGY_ROOT):
        self.root = root
        self._parent: dict[str, str] = {}

    def add(self, child: str, parent: str) -> None:
        if child == self.root or child in self._parent:
            raise OntologyError(f"type {child!r} already defined")
        if parent != self.root and parent not in self._parent:
            raise OntologyError(f"unknown parent type {parent!r}")
        self._parent[child] = parent

    def has(self, name: str) -> bool:
        return name == self.root or name in self._parent

    def types(self) -> list[str]:
        return [self.root, *self._parent]

    def generalization_steps(self, descendant: str, ancestor: str) -> int | None:
        """Steps walking up from descendant to ancestor; None if not related."""
        if not self.has(descendant) or not self.has(ancestor):
            return None
        steps = 0
        cur = descendant
        while True:
            if cur == ancestor:
                return steps
            if cur == self.root:
                return None
            cur = self._parent[cur]
            steps += 1

    def is_descendant(self, a: str, b: str) -> bool:
        return self.generalization_steps(a, b) is not None

    @classmethod
    def load(cls, text: str, root: str = ONTOLOGY_ROOT) -> "Ontology":
        """One ``isa(child, parent)`` term per line; parents defined first."""
        onto = cls(root)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            t = parse_term(line)
            if (
                not isinstance(t, Compound)
                or t.functor != "isa"
                or len(t.args) != 2
                or not isinstance(t.args[0], Atom)
                or not isinstance(t.args[1], Atom)
            ):
                raise OntologyError(f"line {lineno}: expected isa(child, parent)")
            onto.add(t.args[0].name, t.args[1].name)
        return onto


@dataclass(frozen=True)
class CapabilityAd:
    provider: str
    name: str
    input_pattern: Term
    input_types: tuple[tuple[str, str], ...] = ()  # (variable name, type)
    output_type: str = ONTOLOGY_ROOT
    props: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        pattern_vars = {v.name for v in variables(self.input_pattern)}
        for var_name, _ in self.input_types:
            if var_name not in pattern_vars:
                raise ValueError(
                    f"typed variable {var_name} does not occur in the pattern"
                )


class CapabilityBroker:
    """Registry plus matching; wrap with :func:`make_broker_agent` to go live."""

    def __init__(self, ontology: Ontology):
        self.ontology = ontology
        self.registry: dict[tuple[str, str], CapabilityAd] = {}

    def advertise(self, ad: CapabilityAd) -> None:
        for _, type_name in ad.input_types:
            if not self.ontology.has(type_name):
                raise OntologyError(f"unknown ontology type {type_name!r}")
        if not self.ontology.has(ad.output_type):
            raise OntologyError(f"unknown ontology type {ad.output_type!r}")
        self.registry[(ad.provider, ad.name)] = ad

    def unadvertise(self, provider: str, name: str) -> bool:
        return self.registry.pop((provider, name), None) is not None

    def match(
        self,
        request: Term,
        request_types: dict[str, str] | None = None,
        output_type: str | None = None,
    ) -> list[CapabilityAd]:
        """Matching ads ranked by (generalization steps, provider, name).

        A request variable with no declared type is unconstrained and
        contributes zero generalization steps.
        """
        request_types = request_types or {}
        ranked: list[tuple[int, str, str, CapabilityAd]] = []
        for ad in self.registry.values():
            fresh: dict[str, Var] = {}

            def rename(t: Term) -> Term:
                if isinstance(t, Var):
                    if t.name not in fresh:
                        fresh[t.name] = fresh_var(t.name)
                    return fresh[t.name]
                if isinstance(t, Compound):
                    return Compound(t.functor, tuple(rename(a) for a in t.args))
                return t

            pattern = rename(ad.input_pattern)
            sigma = unify(request, pattern)
            if sigma is None:
                continue
            request_reps = [
                (request_types[u.name], apply(sigma, u))
                for u in variables(request)
                if u.name in request_types
            ]
            steps = 0
            compatible = True
            for var_name, ad_type in ad.input_types:
                rep = apply(sigma, fresh[var_name])
                if not isinstance(rep, Var):
                    continue
                # request variables the unifier equates with this typed slot
                for req_type, req_rep in request_reps:
                    if req_rep != rep:
                        continue
                    d = self.ontology.generalization_steps(req_type, ad_type)
                    if d is None:
                        compatible = False
                        break
                    steps += d
                if not compatible:
                    break
            if not compatible:
                continue
            if output_type is not None:
                d = self.ontology.generalization_steps(ad.output_type, output_type)
                if d is None:
                    continue
                steps += d
            ranked.append((steps, ad.provider, ad.name, ad))
        ranked.sort(key=lambda r: r[:3])
        return [ad for _, _, _, ad in ranked]

    def handle_recruit(self, m: KqmlMessage, broker_name: str) -> list[KqmlMessage]:
        """Forward as achieve to the best (recruit_one) or all (recruit_all) matches."""
        request = m.content
        matches = self.match(request)
        if not matches:
            return [reply_to(m, Performative.SORRY, broker_name,
                             Compound("no_capability", (request,)))]
        if m.performative is Performative.RECRUIT_ONE:
            matches = matches[:1]
        out = []
        for ad in matches:
            # the original sender is preserved so replies go straight back
            out.append(KqmlMessage(
                performative=Performative.ACHIEVE,
                sender=m.sender,
                receiver=ad.provider,
                content=request,
                reply_with=m.reply_with,
                ontology=m.ontology,
                content_type=m.content_type,
            ))
        return out


def parse_capability_content(content: Term, provider: str) -> CapabilityAd:
    """Content of an advertise message: capability(name, pattern, types(...), out)."""
    if (
        not isinstance(content, Compound)
        or content.functor != "capability"
        or len(content.args) != 4
    ):
        raise ValueError("expected capability(name, pattern, types(...), output)")
    name, pattern, types_term, output = content.args
    if not isinstance(name, Atom) or not isinstance(output, Atom):
        raise ValueError("capability name and output type must be symbols")
    input_types: list[tuple[str, str]] = []
    if isinstance(types_term, Compound):
        if types_term.functor != "types":
            raise ValueError("third capability argument must be types(...)")
        for entry in types_term.args:
            if (
                not isinstance(entry, Compound)
                or entry.functor != "type_of"
                or len(entry.args) != 2
                or not isinstance(entry.args[0], Var)
                or not isinstance(entry.args[1], Atom)
            ):
                raise ValueError("each type entry must be type_of(Variable, type)")
            input_types.append((entry.args[0].name, entry.args[1].name))
    elif types_term != Atom("types"):
        raise ValueError("third capability argument must be types(...)")
    return CapabilityAd(
        provider=provider,
        name=name.name,
        input_pattern=pattern,
        input_types=tuple(input_types),
        output_type=output.name,
    )


def advertise_message(sender: str, broker: str, ad: CapabilityAd) -> KqmlMessage:
    by_name = {v.name: v for v in variables(ad.input_pattern)}
    type_entries = tuple(
        Compound("type_of", (by_name[var_name], Atom(type_name)))
        for var_name, type_name in ad.input_types
    )
    content = Compound("capability", (
        Atom(ad.name),
        ad.input_pattern,
        compound("types", type_entries),
        Atom(ad.output_type),
    ))
    return KqmlMessage(Performative.ADVERTISE, sender, broker, content)


def make_broker_agent(bus: Bus, ontology: Ontology,
                      name: str = "broker") -> tuple[Agent, CapabilityBroker]:
    broker = CapabilityBroker(ontology)
    agent = Agent(name, bus)

    def on_advertise(ag: Agent, args: Term):
        m = ag.current_message
        try:
            broker.advertise(parse_capability_content(m.content, m.sender))
        except (ValueError, OntologyError):
            return [reply_to(m, Performative.ERROR, ag.name,
                             Compound("bad_capability", (m.content,)))]
        return []

    def on_unadvertise(ag: Agent, args: Term):
        m = ag.current_message
        if isinstance(m.content, Atom):
            found = broker.unadvertise(m.sender, m.content.name)
            if not found:
                return [reply_to(m, Performative.SORRY, ag.name,
                                 Compound("not_found", (m.content,)))]
            return []
        return [reply_to(m, Performative.ERROR, ag.name, Atom("bad_unadvertise"))]

    def on_recruit(ag: Agent, args: Term):
        return broker.handle_recruit(ag.current_message, ag.name)

    agent.register_private("handle_advertise", on_advertise)
    agent.register_private("handle_unadvertise", on_unadvertise)
    agent.register_private("handle_recruit", on_recruit)

    def handler_rule(rule_name: str, perf: Performative, capability: str):
        s, c = fresh_var("S"), fresh_var("C")
        return BehaviouralRule(
            rule_name,
            MessagePattern(perf, s, c),
            then_do=(Private(capability, c),),
        )

    agent.install_rule(handler_rule(
        "on_advertise", Performative.ADVERTISE, "handle_advertise"))
    agent.install_rule(handler_rule(
        "on_unadvertise", Performative.UNADVERTISE, "handle_unadvertise"))
    for perf in (Performative.RECRUIT_ONE, Performative.RECRUIT_ALL):
        agent.install_rule(handler_rule(
            f"on_{perf.value}", perf, "handle_recruit"))
    return agent, broker
