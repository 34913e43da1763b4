"""Agent interpreter: mental state, behavioural rules and the tick loop.

Each agent owns a mental state (belief/goal/intention environments plus
time-stamped commitments) and an ordered list of WHEN-IF-THEN rules.  A tick
has two phases: phase 1 consumes every pending message, firing the first
rule whose message pattern unifies and whose mental conditions hold
(committed choice, no backtracking across rules); phase 2 executes due
commitments in due-then-creation order, then runs any registered tick hooks.

Agents are driven by an external driver, never by free-running threads, so
identical initial state plus an identical inbound message sequence yields an
identical report sequence and identical outbound traffic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Union

from .bus import Bus
from .kqml import KqmlMessage, Performative, encode
from .terms import (
    EMPTY_SUBST,
    Atom,
    Subst,
    Term,
    Var,
    apply,
    compose,
    parse_term_prefix,
    unify,
    variables,
)
from .viewfinder import AttitudeType, Environment, parse_attitude


@dataclass(frozen=True)
class MentalPath:
    """An attitude root plus a nesting path inside it, e.g. belief/user:belief."""

    root: AttitudeType
    steps: tuple[tuple[str, AttitudeType], ...] = ()


def parse_mental_path(text: str) -> MentalPath:
    parts = text.split("/")
    root = parse_attitude(parts[0])
    steps = []
    for part in parts[1:]:
        agent, _, att = part.partition(":")
        if not agent or not att:
            raise ValueError(f"bad mental path step {part!r}")
        steps.append((agent, parse_attitude(att)))
    return MentalPath(root, tuple(steps))


@dataclass(frozen=True)
class Holds:
    path: MentalPath
    pattern: Term


@dataclass(frozen=True)
class NotHolds:
    path: MentalPath
    pattern: Term


Condition = Union[Holds, NotHolds]


@dataclass(frozen=True)
class MessagePattern:
    performative: Performative
    sender: Term
    content: Term


@dataclass(frozen=True)
class SendMessage:
    performative: Performative
    receiver: Term
    content: Term
    reply_with: Term | None = None
    in_reply_to: Term | None = None
    ontology: str | None = None
    content_type: str | None = None


@dataclass(frozen=True)
class AssertMental:
    path: MentalPath
    term: Term


@dataclass(frozen=True)
class RetractMental:
    path: MentalPath
    term: Term


@dataclass(frozen=True)
class Private:
    name: str
    args: Term


@dataclass(frozen=True)
class Commit:
    to: str
    action: "Action"
    due_in: int
    guard: Condition | None = None

    def __post_init__(self) -> None:
        if self.due_in < 0:
            raise ValueError("due_in must be >= 0 (due >= creation tick)")


Action = Union[SendMessage, AssertMental, RetractMental, Private, Commit]


@dataclass(frozen=True)
class BehaviouralRule:
    name: str
    when: MessagePattern
    if_cond: tuple[Condition, ...] = ()
    then_do: tuple[Action, ...] = ()


@dataclass(frozen=True)
class Commitment:
    to: str
    action: Action
    due: int
    created: int
    creation_seq: int
    guard: Condition | None = None


@dataclass
class MentalState:
    attitudes: dict[AttitudeType, Environment]
    commitments: list[Commitment] = field(default_factory=list)
    clock: int = 0

    @property
    def beliefs(self) -> Environment:
        return self.attitudes[AttitudeType.BELIEF]

    @property
    def goals(self) -> Environment:
        return self.attitudes[AttitudeType.GOAL]

    @property
    def intentions(self) -> Environment:
        return self.attitudes[AttitudeType.INTENTION]


@dataclass(frozen=True)
class TickReport:
    agent: str
    tick: int
    consumed: tuple[str, ...] = ()
    fired: tuple[tuple[str, str], ...] = ()  # (rule name, encoded message)
    discarded: tuple[str, ...] = ()
    executed: tuple[str, ...] = ()
    dropped: tuple[str, ...] = ()
    errors: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    hook_activity: bool = False

    @property
    def quiet(self) -> bool:
        return not (
            self.consumed
            or self.fired
            or self.executed
            or self.dropped
            or self.errors
            or self.hook_activity
        )


class RuleError(ValueError):
    pass


def _action_vars(action: Action) -> list[Var]:
    out: list[Var] = []
    if isinstance(action, SendMessage):
        for t in (action.receiver, action.content, action.reply_with,
                  action.in_reply_to):
            if t is not None:
                out.extend(variables(t))
    elif isinstance(action, (AssertMental, RetractMental)):
        out.extend(variables(action.term))
    elif isinstance(action, Private):
        out.extend(variables(action.args))
    elif isinstance(action, Commit):
        out.extend(_action_vars(action.action))
        if action.guard is not None:
            out.extend(variables(action.guard.pattern))
    return out


def _instantiate_action(action: Action, subst: Subst) -> Action:
    if isinstance(action, SendMessage):
        return SendMessage(
            performative=action.performative,
            receiver=apply(subst, action.receiver),
            content=apply(subst, action.content),
            reply_with=None if action.reply_with is None else apply(subst, action.reply_with),
            in_reply_to=None if action.in_reply_to is None else apply(subst, action.in_reply_to),
            ontology=action.ontology,
            content_type=action.content_type,
        )
    if isinstance(action, AssertMental):
        return AssertMental(action.path, apply(subst, action.term))
    if isinstance(action, RetractMental):
        return RetractMental(action.path, apply(subst, action.term))
    if isinstance(action, Private):
        return Private(action.name, apply(subst, action.args))
    if isinstance(action, Commit):
        guard = action.guard
        if guard is not None:
            guard = type(guard)(guard.path, apply(subst, guard.pattern))
        return Commit(action.to, _instantiate_action(action.action, subst),
                      action.due_in, guard)
    raise TypeError(f"unknown action {action!r}")


class Agent:
    """One autonomous agent attached to a bus."""

    def __init__(self, name: str, bus: Bus, max_depth: int = 4,
                 functional: set[tuple[str, int]] | None = None,
                 infer_depth: int = 16):
        self.name = name
        self.bus = bus
        bus.register(name)
        self.mental = MentalState(
            attitudes={
                att: Environment(f"{name}:{att.value}", name, att,
                                 max_depth=max_depth, functional=functional)
                for att in AttitudeType
            }
        )
        self.rules: list[BehaviouralRule] = []
        self.privates: dict[str, Callable[["Agent", Term], object]] = {}
        self.tick_hooks: list[Callable[["Agent"], bool]] = []
        self.infer_depth = infer_depth
        self._commit_seq = itertools.count(1)
        # the message being processed in phase 1, readable by private capabilities
        self.current_message: KqmlMessage | None = None

    # -- construction ----------------------------------------------------

    def register_private(self, name: str,
                         fn: Callable[["Agent", Term], object]) -> None:
        self.privates[name] = fn

    def install_rule(self, rule: BehaviouralRule) -> None:
        if any(r.name == rule.name for r in self.rules):
            raise RuleError(f"duplicate rule name {rule.name!r}")
        bound = {v.id for v in variables(rule.when.sender)}
        bound |= {v.id for v in variables(rule.when.content)}
        for cond in rule.if_cond:
            if isinstance(cond, Holds):
                bound |= {v.id for v in variables(cond.pattern)}
        for action in rule.then_do:
            for v in _action_vars(action):
                if v.id not in bound:
                    raise RuleError(
                        f"rule {rule.name!r}: variable {v.name} in then-part "
                        "is not bound by when or if"
                    )
            if isinstance(action, Private) and action.name not in self.privates:
                raise RuleError(
                    f"rule {rule.name!r}: private capability {action.name!r} "
                    "is not registered"
                )
        self.rules.append(rule)

    def add_tick_hook(self, fn: Callable[["Agent"], bool]) -> None:
        self.tick_hooks.append(fn)

    # -- mental access -----------------------------------------------------

    def env_at(self, path: MentalPath) -> Environment:
        env = self.mental.attitudes[path.root]
        for agent, att in path.steps:
            env = env.child(agent, att)
        return env

    def _match_holds(self, cond: Condition, subst: Subst) -> Iterator[Subst]:
        pattern = apply(subst, cond.pattern)
        if not cond.path.steps:
            env = self.mental.attitudes[cond.path.root]
            for answer in env.infer(pattern, self.infer_depth).answers:
                yield compose(subst, answer)
            return
        root = self.mental.attitudes[cond.path.root]
        for ap in root.view(cond.path.steps):
            s2 = unify(pattern, ap.prop)
            if s2 is not None:
                yield compose(subst, s2)

    def _solve_conditions(self, conds: tuple[Condition, ...],
                          subst: Subst) -> Iterator[Subst]:
        if not conds:
            yield subst
            return
        head, rest = conds[0], conds[1:]
        if isinstance(head, Holds):
            for s2 in self._match_holds(head, subst):
                yield from self._solve_conditions(rest, s2)
        else:
            for _ in self._match_holds(head, subst):
                return
            yield from self._solve_conditions(rest, subst)

    def _match_rule(self, rule: BehaviouralRule,
                    m: KqmlMessage) -> Subst | None:
        if rule.when.performative is not m.performative:
            return None
        s0 = unify(rule.when.sender, Atom(m.sender))
        if s0 is None:
            return None
        s1 = unify(apply(s0, rule.when.content), m.content)
        if s1 is None:
            return None
        subst = compose(s0, s1)
        for solution in self._solve_conditions(rule.if_cond, subst):
            return solution
        return None

    # -- actions ------------------------------------------------------------

    def send(self, m: KqmlMessage):
        return self.bus.send(m)

    def _term_symbol(self, t: Term, what: str) -> str:
        if isinstance(t, Atom):
            return t.name
        raise RuleError(f"{what} did not instantiate to a symbol: {t}")

    def _run_action(self, action: Action, subst: Subst,
                    errors: list[str], notes: list[str]) -> None:
        try:
            act = _instantiate_action(action, subst)
            if isinstance(act, SendMessage):
                self.send(KqmlMessage(
                    performative=act.performative,
                    sender=self.name,
                    receiver=self._term_symbol(act.receiver, "receiver"),
                    content=act.content,
                    reply_with=None if act.reply_with is None
                    else self._term_symbol(act.reply_with, "reply-with"),
                    in_reply_to=None if act.in_reply_to is None
                    else self._term_symbol(act.in_reply_to, "in-reply-to"),
                    ontology=act.ontology,
                    content_type=act.content_type,
                ))
            elif isinstance(act, AssertMental):
                self.env_at(act.path).assert_prop(act.term)
            elif isinstance(act, RetractMental):
                if not self.env_at(act.path).retract_prop(act.term):
                    notes.append(f"retract not_found: {act.term}")
            elif isinstance(act, Private):
                fn = self.privates.get(act.name)
                if fn is None:
                    raise RuleError(f"private capability {act.name!r} not registered")
                result = fn(self, act.args)
                if isinstance(result, KqmlMessage):
                    self.send(result)
                elif isinstance(result, Iterable) and not isinstance(result, str):
                    for out in result:
                        self.send(out)
            elif isinstance(act, Commit):
                self.mental.commitments.append(Commitment(
                    to=act.to,
                    action=act.action,
                    due=self.mental.clock + act.due_in,
                    created=self.mental.clock,
                    creation_seq=next(self._commit_seq),
                    guard=act.guard,
                ))
        except Exception as e:  # an action failure never aborts the tick
            errors.append(f"{type(e).__name__}: {e}")

    # -- the tick loop -------------------------------------------------------

    def step(self) -> TickReport:
        consumed: list[str] = []
        fired: list[tuple[str, str]] = []
        discarded: list[str] = []
        executed: list[str] = []
        dropped: list[str] = []
        errors: list[str] = []
        notes: list[str] = []

        # phase 1: consume every pending message, committed-choice rule firing
        for m in self.bus.drain(self.name):
            wire = encode(m)
            consumed.append(wire)
            self.current_message = m
            for rule in self.rules:
                subst = self._match_rule(rule, m)
                if subst is not None:
                    fired.append((rule.name, wire))
                    for action in rule.then_do:
                        self._run_action(action, subst, errors, notes)
                    break
            else:
                discarded.append(wire)
        self.current_message = None

        # phase 2: execute due commitments in due-then-creation order
        clock = self.mental.clock
        due_now = [c for c in self.mental.commitments if c.due <= clock]
        due_now.sort(key=lambda c: (c.due, c.creation_seq))
        for c in due_now:
            self.mental.commitments.remove(c)
            if c.guard is not None:
                solution = next(self._solve_conditions((c.guard,), EMPTY_SUBST), None)
                if solution is None:
                    dropped.append(f"commitment to {c.to}: guard failed")
                    continue
            else:
                solution = EMPTY_SUBST
            executed.append(f"commitment to {c.to}")
            self._run_action(c.action, solution, errors, notes)

        hook_activity = False
        for hook in self.tick_hooks:
            hook_activity = bool(hook(self)) or hook_activity

        self.mental.clock += 1
        return TickReport(
            agent=self.name,
            tick=clock,
            consumed=tuple(consumed),
            fired=tuple(fired),
            discarded=tuple(discarded),
            executed=tuple(executed),
            dropped=tuple(dropped),
            errors=tuple(errors),
            notes=tuple(notes),
            hook_activity=hook_activity,
        )


class TickDriver:
    """Round-robin driver: steps agents in registration order, deterministic."""

    def __init__(self, bus: Bus, agents: list[Agent]):
        self.bus = bus
        self.agents = agents

    def run_round(self) -> list[TickReport]:
        reports = [agent.step() for agent in self.agents]
        self.bus.clock += 1
        return reports

    def run_until_quiescent(self, max_rounds: int = 64) -> tuple[list[TickReport], bool]:
        """Rounds until nothing happens and no message is in flight.

        Returns (all reports, quiesced flag); the flag is False when the
        round cap was hit first.
        """
        all_reports: list[TickReport] = []
        for _ in range(max_rounds):
            reports = self.run_round()
            all_reports.extend(reports)
            if all(r.quiet for r in reports) and not self.bus.any_pending():
                return all_reports, True
        return all_reports, False


# --- rule text format ---------------------------------------------------------

def parse_behavioural_rule(text: str) -> BehaviouralRule:
    """Parse ``rule <name>: when (<perf> <sender> <content>) if c;... then a;...``

    Conditions are ``holds(<path>, <term>)`` / ``not_holds(<path>, <term>)``;
    actions are ``send(<perf>, <receiver>, <content>[, <content-type>])``,
    ``assert(<path>, <term>)``, ``retract(<path>, <term>)`` and
    ``private(<name>, <args>)``.  Paths look like ``belief`` or
    ``belief/user:belief``.  One variable scope spans the whole rule.
    """
    varmap: dict[str, Var] = {}
    text = text.strip()
    if not text.startswith("rule "):
        raise RuleError("rule must start with 'rule <name>:'")
    head, _, rest = text[5:].partition(":")
    name = head.strip()
    if not name or not rest:
        raise RuleError("rule must start with 'rule <name>:'")
    rest = rest.strip()
    if not rest.startswith("when"):
        raise RuleError("expected 'when' clause")
    rest = rest[4:].lstrip()
    if not rest.startswith("("):
        raise RuleError("expected '(' after when")
    perf_text, _, rest2 = rest[1:].lstrip().partition(" ")
    try:
        performative = Performative(perf_text.strip())
    except ValueError:
        raise RuleError(f"unknown performative {perf_text!r}") from None
    sender, pos = parse_term_prefix(rest2, 0, varmap)
    content, pos = parse_term_prefix(rest2, pos, varmap)
    rest2 = rest2[pos:].lstrip()
    if not rest2.startswith(")"):
        raise RuleError("expected ')' closing when clause")
    rest2 = rest2[1:].lstrip()

    conds: list[Condition] = []
    actions: list[Action] = []
    if rest2.startswith("if "):
        cond_text, _, rest2 = rest2[3:].partition(" then ")
        if not rest2:
            raise RuleError("expected 'then' clause")
        for item in _split_items(cond_text):
            conds.append(_parse_condition(item, varmap))
    elif rest2.startswith("then ") or rest2 == "then":
        rest2 = rest2[5:]
    else:
        raise RuleError("expected 'if' or 'then' clause")
    for item in _split_items(rest2):
        actions.append(_parse_action(item, varmap))
    return BehaviouralRule(
        name=name,
        when=MessagePattern(performative, sender, content),
        if_cond=tuple(conds),
        then_do=tuple(actions),
    )


def _split_items(text: str) -> list[str]:
    items = [part.strip() for part in text.split(";")]
    return [part for part in items if part]


def _parse_condition(text: str, varmap: dict[str, Var]) -> Condition:
    for prefix, cls in (("not_holds", NotHolds), ("holds", Holds)):
        if text.startswith(prefix + "("):
            inner = text[len(prefix) + 1:]
            if not inner.endswith(")"):
                raise RuleError(f"malformed condition {text!r}")
            path_text, _, term_text = inner[:-1].partition(",")
            pattern, pos = parse_term_prefix(term_text.strip(), 0, varmap)
            if term_text.strip()[pos:].strip():
                raise RuleError(f"trailing input in condition {text!r}")
            return cls(parse_mental_path(path_text.strip()), pattern)
    raise RuleError(f"unknown condition {text!r}")


def _parse_action(text: str, varmap: dict[str, Var]) -> Action:
    kind, _, inner = text.partition("(")
    kind = kind.strip()
    if not inner.endswith(")"):
        raise RuleError(f"malformed action {text!r}")
    inner = inner[:-1]
    if kind == "send":
        perf_text, _, rest = inner.partition(",")
        performative = Performative(perf_text.strip())
        receiver, pos = parse_term_prefix(rest, 0, varmap)
        rest = rest[pos:].lstrip()
        if not rest.startswith(","):
            raise RuleError(f"send needs a content argument: {text!r}")
        content, pos = parse_term_prefix(rest[1:], 0, varmap)
        tail = rest[1:][pos:].strip()
        content_type = None
        if tail.startswith(","):
            content_type = tail[1:].strip()
        elif tail:
            raise RuleError(f"trailing input in action {text!r}")
        return SendMessage(performative, receiver, content,
                           content_type=content_type)
    if kind in ("assert", "retract"):
        path_text, _, term_text = inner.partition(",")
        term, pos = parse_term_prefix(term_text.strip(), 0, varmap)
        if term_text.strip()[pos:].strip():
            raise RuleError(f"trailing input in action {text!r}")
        path = parse_mental_path(path_text.strip())
        return AssertMental(path, term) if kind == "assert" else RetractMental(path, term)
    if kind == "private":
        name, _, args_text = inner.partition(",")
        args, pos = parse_term_prefix(args_text.strip(), 0, varmap)
        if args_text.strip()[pos:].strip():
            raise RuleError(f"trailing input in action {text!r}")
        return Private(name.strip(), args)
    raise RuleError(f"unknown action kind {kind!r}")
