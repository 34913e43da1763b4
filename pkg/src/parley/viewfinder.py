"""Nested, typed mental-attitude environments with default ascription.

An :class:`Environment` holds explicit propositions, Horn rules, and nested
child environments representing another agent's attitudes.  A *view* along a
nesting path ascribes the outer view's propositions into each child by
default, unless blocked by conflicting explicit content (explicit negation
``not(P)`` or a clash on a declared single-valued predicate).  Children are
created on demand and seeded from a registered stereotype of the agent.

Ascribed and inferred propositions are never stored; views are recomputed
from explicit content, which makes recomputation idempotent by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .terms import (
    EMPTY_SUBST,
    Compound,
    Subst,
    Term,
    apply,
    compose,
    is_ground,
    rename_apart,
    unify,
    variables,
)


class AttitudeType(Enum):
    BELIEF = "belief"
    GOAL = "goal"
    INTENTION = "intention"


class Source(Enum):
    STATED = "stated"
    ASCRIBED = "ascribed"
    INFERRED = "inferred"
    STEREOTYPE = "stereotype"


@dataclass(frozen=True)
class AnnotatedProp:
    prop: Term
    source: Source
    confidence: float = 1.0


@dataclass(frozen=True)
class Stereotype:
    name: str
    props: tuple[Term, ...]

    def __post_init__(self) -> None:
        for p in self.props:
            if not is_ground(p):
                raise ValueError(f"stereotype prop must be variable-free: {p}")


@dataclass(frozen=True)
class HornRule:
    head: Term
    body: tuple[Term, ...]

    def __post_init__(self) -> None:
        body_vars = {v.id for g in self.body for v in variables(g)}
        for v in variables(self.head):
            if v.id not in body_vars:
                raise ValueError(
                    f"rule not range-restricted: head variable {v.name} "
                    "does not appear in the body"
                )


@dataclass(frozen=True)
class InferenceResult:
    answers: tuple[Subst, ...]
    depth_exhausted: bool


class EnvironmentDepthError(ValueError):
    pass


def negate(t: Term) -> Term:
    """not(p) for p; p for not(p)."""
    if isinstance(t, Compound) and t.functor == "not" and len(t.args) == 1:
        return t.args[0]
    return Compound("not", (t,))


class Environment:
    """One mental-attitude space, possibly nested inside another."""

    def __init__(
        self,
        id: str,
        owner: str,
        attitude: AttitudeType,
        parent: "Environment | None" = None,
        max_depth: int = 4,
        functional: set[tuple[str, int]] | None = None,
    ):
        self.id = id
        self.owner = owner
        self.attitude = attitude
        self.parent = parent
        self.explicit: dict[Term, AnnotatedProp] = {}
        self.children: dict[tuple[str, AttitudeType], Environment] = {}
        self.rules: list[HornRule] = []
        if parent is None:
            self.max_depth = max_depth
            self.functional = set(functional or ())
            self.stereotypes: dict[str, Stereotype] = {}

    @property
    def root(self) -> "Environment":
        env = self
        while env.parent is not None:
            env = env.parent
        return env

    @property
    def depth(self) -> int:
        d = 0
        env = self
        while env.parent is not None:
            d += 1
            env = env.parent
        return d

    def register_stereotype(self, agent: str, stereotype: Stereotype) -> None:
        self.root.stereotypes[agent] = stereotype

    def declare_functional(self, functor: str, arity: int) -> None:
        self.root.functional.add((functor, arity))

    def assert_prop(
        self,
        prop: Term,
        source: Source = Source.STATED,
        confidence: float = 1.0,
    ) -> None:
        """Add prop to the explicit set; an explicit negation is removed first."""
        if not is_ground(prop):
            raise ValueError(f"cannot assert non-ground proposition: {prop}")
        self.explicit.pop(negate(prop), None)
        self.explicit[prop] = AnnotatedProp(prop, source, confidence)

    def retract_prop(self, prop: Term) -> bool:
        """Remove prop from the explicit set; False when it was not there."""
        return self.explicit.pop(prop, None) is not None

    def install_rule(self, rule: HornRule) -> None:
        self.rules.append(rule)

    def child(self, agent: str, attitude: AttitudeType) -> "Environment":
        """The nested view of agent's attitude, created and seeded on demand."""
        key = (agent, attitude)
        existing = self.children.get(key)
        if existing is not None:
            return existing
        root = self.root
        if self.depth + 1 > root.max_depth:
            raise EnvironmentDepthError(
                f"nesting depth {self.depth + 1} exceeds bound {root.max_depth}"
            )
        env = Environment(
            id=f"{self.id}/{agent}:{attitude.value}",
            owner=agent,
            attitude=attitude,
            parent=self,
        )
        stereotype = root.stereotypes.get(agent)
        if stereotype is not None:
            for p in stereotype.props:
                env.assert_prop(p, Source.STEREOTYPE)
        self.children[key] = env
        return env

    # -- views ---------------------------------------------------------------

    def _conflicts(self, candidate: Term) -> bool:
        """Does candidate clash with this environment's explicit content?"""
        if negate(candidate) in self.explicit:
            return True
        if isinstance(candidate, Compound):
            key = (candidate.functor, len(candidate.args))
            if key in self.root.functional:
                for p in self.explicit:
                    if (
                        isinstance(p, Compound)
                        and (p.functor, len(p.args)) == key
                        and p.args[:-1] == candidate.args[:-1]
                        and p.args[-1] != candidate.args[-1]
                    ):
                        return True
        return False

    def _closure(self) -> list[AnnotatedProp]:
        """Explicit set closed under this environment's rules (forward chaining)."""
        out: dict[Term, AnnotatedProp] = dict(self.explicit)
        changed = True
        while changed:
            changed = False
            facts = list(out.values())
            for rule in self.rules:
                for subst, conf in _match_body(rule.body, facts):
                    derived = apply(subst, rule.head)
                    if derived in out or negate(derived) in out:
                        continue
                    out[derived] = AnnotatedProp(derived, Source.INFERRED, conf)
                    changed = True
        return list(out.values())

    def view(
        self, path: tuple[tuple[str, AttitudeType], ...] = ()
    ) -> list[AnnotatedProp]:
        """Propositions visible along the nesting path, deterministic order.

        Depth 0 is the explicit set closed under rules; each step keeps the
        child's explicit content and ascribes every non-conflicting outer
        proposition with source ``ascribed``.
        """
        current = self._closure()
        node = self
        for agent, attitude in path:
            node = node.child(agent, attitude)
            merged: dict[Term, AnnotatedProp] = dict(node.explicit)
            for ap in current:
                if ap.prop in merged or node._conflicts(ap.prop):
                    continue
                merged[ap.prop] = AnnotatedProp(
                    ap.prop, Source.ASCRIBED, ap.confidence
                )
            current = list(merged.values())
        return current

    # -- inference -----------------------------------------------------------

    def infer(self, goal: Term, depth_limit: int = 16) -> InferenceResult:
        """Backward chaining over explicit props and rules, depth-limited.

        Answers are substitutions restricted to the goal's variables, in a
        deterministic order (facts in insertion order, then rules in
        declaration order), deduplicated.  Exhausting the depth limit is
        reported separately from having no answers.
        """
        if depth_limit < 0:
            raise ValueError("depth_limit must be >= 0")
        facts = [ap.prop for ap in self.explicit.values()]
        exhausted = [False]
        goal_vars = variables(goal)
        answers: list[Subst] = []
        seen: set[Term] = set()

        def solve(goals: list[Term], subst: Subst, depth: int):
            if not goals:
                yield subst
                return
            g = apply(subst, goals[0])
            rest = goals[1:]
            for fact in facts:
                s2 = unify(g, fact)
                if s2 is not None:
                    yield from solve(rest, compose(subst, s2), depth)
            for rule in self.rules:
                if depth <= 0:
                    if unify(g, rename_apart(rule.head)) is not None:
                        exhausted[0] = True
                    continue
                fresh = rename_apart(Compound("rule", (rule.head,) + rule.body))
                head, body = fresh.args[0], list(fresh.args[1:])
                s2 = unify(g, head)
                if s2 is not None:
                    yield from solve(body + rest, compose(subst, s2), depth - 1)

        for solution in solve([goal], EMPTY_SUBST, depth_limit):
            bindings: dict[int, Term] = {}
            for v in goal_vars:
                t = apply(solution, v)
                if t != v:
                    bindings[v.id] = t
            restricted = Subst(bindings)
            key = apply(solution, goal)
            if key not in seen:
                seen.add(key)
                answers.append(restricted)
        return InferenceResult(tuple(answers), exhausted[0])


def _match_body(
    body: tuple[Term, ...], facts: list[AnnotatedProp]
) -> list[tuple[Subst, float]]:
    """All substitutions grounding a rule body against a fact list."""
    results: list[tuple[Subst, float]] = []

    def go(i: int, subst: Subst, conf: float) -> None:
        if i == len(body):
            results.append((subst, conf))
            return
        goal = apply(subst, body[i])
        for ap in facts:
            s2 = unify(goal, ap.prop)
            if s2 is not None:
                go(i + 1, compose(subst, s2), min(conf, ap.confidence))

    go(0, EMPTY_SUBST, 1.0)
    return results


def parse_horn_rule(text: str) -> HornRule:
    """Rule syntax ``head <- body1, body2`` with one shared variable scope."""
    from .terms import Var, parse_term_prefix

    varmap: dict[str, Var] = {}
    head, pos = parse_term_prefix(text, 0, varmap)
    rest = text[pos:].lstrip()
    if not rest.startswith("<-"):
        raise ValueError(f"expected '<-' after rule head in {text!r}")
    rest = rest[2:]
    body: list[Term] = []
    pos = 0
    while True:
        goal, pos = parse_term_prefix(rest, pos, varmap)
        body.append(goal)
        tail = rest[pos:].lstrip()
        if not tail:
            break
        if not tail.startswith(","):
            raise ValueError(f"expected ',' between body goals in {text!r}")
        pos = len(rest) - len(tail) + 1
    return HornRule(head, tuple(body))


# --- fixture format ----------------------------------------------------------

def parse_attitude(name: str) -> AttitudeType:
    try:
        return AttitudeType(name)
    except ValueError:
        raise ValueError(f"unknown attitude {name!r}") from None


def parse_path(text: str) -> tuple[tuple[str, AttitudeType], ...]:
    """Nested path syntax: ``self`` or ``self/agent:att/agent:att...``."""
    parts = text.split("/")
    if parts[0] != "self":
        raise ValueError(f"path must start with 'self': {text!r}")
    steps = []
    for part in parts[1:]:
        agent, _, att = part.partition(":")
        if not agent or not att:
            raise ValueError(f"bad path step {part!r} (want agent:attitude)")
        steps.append((agent, parse_attitude(att)))
    return tuple(steps)


def load_assertions(roots, text: str) -> int:
    """Load ``env <path> <attitude>: <term>`` lines into attitude root envs.

    ``roots`` maps :class:`AttitudeType` to the agent's root environments.
    Returns the number of assertions made.  Lines starting with ``#`` and
    blank lines are skipped.
    """
    import re

    from .terms import parse_term

    line_re = re.compile(r"^env\s+(\S+)\s+([a-z]+)\s*:\s*(.+)$")
    count = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = line_re.match(line)
        if not m:
            raise ValueError(f"line {lineno}: expected 'env <path> <attitude>: <term>'")
        path_text, attitude_text, term_text = m.groups()
        steps = parse_path(path_text)
        env = roots[parse_attitude(attitude_text)]
        for agent, att in steps:
            env = env.child(agent, att)
        env.assert_prop(parse_term(term_text))
        count += 1
    return count


def load_stereotypes(env: Environment, text: str) -> int:
    """Load ``stereotype <name>: <term>`` lines; one prop per line."""
    import re

    from .terms import parse_term

    line_re = re.compile(r"^stereotype\s+(\S+)\s*:\s*(.+)$")
    props: dict[str, list[Term]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = line_re.match(line)
        if not m:
            raise ValueError(f"line {lineno}: expected 'stereotype <name>: <term>'")
        props.setdefault(m.group(1), []).append(parse_term(m.group(2)))
    for name, terms in props.items():
        env.register_stereotype(name, Stereotype(name, tuple(terms)))
    return len(props)
