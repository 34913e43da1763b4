"""Interpretation manager: utterances to ranked dialogue-act hypotheses.

Tokenizes the input, runs the island parser (full analyses) and the concept
spotter over the configured grammar, scores every candidate as the product
span_coverage x utterance_coverage x module_confidence, and keeps the n
best.  Hypotheses at or above the plausibility threshold are emitted as
dialogue moves; the rest are flagged implausible so the dialogue engine can
take the initiative and ask for clarification.

Scope ambiguity is carried as an underspecified form: a core term with
operator placeholders plus ordering constraints; each linear extension of
the constraints is one fully scoped reading.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction

from .islands import Grammar, parse, spot
from .kqml import KqmlMessage, Performative
from .terms import Atom, Compound, Num, Term, compound, print_term

PARSER_MODULE = "parser"
SPOTTER_MODULE = "spotter"
FALLBACK_MODULE = "none"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase; split on whitespace and punctuation; punctuation dropped."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Hypothesis:
    utterance_id: int
    act: Term
    span_coverage: Fraction
    utterance_coverage: Fraction
    module_confidence: Fraction
    span: tuple[int, int]
    module: str

    @property
    def score(self) -> Fraction:
        return self.span_coverage * self.utterance_coverage * self.module_confidence

    def sort_key(self):
        return (-self.score, self.span[0], print_term(self.act))


def fallback_hypothesis(utterance_id: int) -> Hypothesis:
    return Hypothesis(
        utterance_id=utterance_id,
        act=Compound("unknown", (Num(utterance_id),)),
        span_coverage=Fraction(0),
        utterance_coverage=Fraction(0),
        module_confidence=Fraction(0),
        span=(0, 0),
        module=FALLBACK_MODULE,
    )


@dataclass
class InterpreterConfig:
    grammar: Grammar
    spot_categories: tuple[str, ...] = ()
    confidences: dict[str, Fraction] = field(default_factory=dict)
    theta: Fraction | None = None
    n_best: int = 5
    beam: int = 16
    plausibility: Fraction = Fraction(1, 5)
    route_receiver: str = "km"
    move_content_type: str = "dialogue_move"

    def confidence(self, module: str) -> Fraction:
        return self.confidences.get(module, Fraction(1))


def score_term(score: Fraction) -> Num:
    """Exact scores are embedded in content terms as 6-place decimals."""
    quantized = (Decimal(score.numerator) / Decimal(score.denominator)).quantize(
        Decimal("0.000001")
    )
    return Num(quantized.normalize() if quantized == 0 else quantized)


class InterpretationManager:
    """Stateful wrapper: numbers utterances and remembers the last n-best."""

    def __init__(self, config: InterpreterConfig):
        self.config = config
        self._utterance_ids = itertools.count(1)
        self.last_hypotheses: list[Hypothesis] = []

    def interpret(self, text: str, n: int | None = None) -> list[Hypothesis]:
        """Top-n hypotheses for one utterance (never empty: unknown fallback)."""
        n = self.config.n_best if n is None else n
        if n < 1:
            raise ValueError("n must be >= 1")
        uid = next(self._utterance_ids)
        tokens = tokenize(text)
        candidates: list[Hypothesis] = []
        if tokens:
            total = len(tokens)
            for c in parse(self.config.grammar, tokens, self.config.theta):
                candidates.append(Hypothesis(
                    utterance_id=uid,
                    act=c.sem,
                    span_coverage=c.coverage,
                    utterance_coverage=Fraction(c.covered, total),
                    module_confidence=self.config.confidence(PARSER_MODULE),
                    span=c.span,
                    module=PARSER_MODULE,
                ))
            if self.config.spot_categories:
                for c in spot(self.config.grammar, tokens,
                              self.config.spot_categories, self.config.theta):
                    candidates.append(Hypothesis(
                        utterance_id=uid,
                        act=Compound("concept", (c.sem,)),
                        span_coverage=c.coverage,
                        utterance_coverage=Fraction(c.covered, total),
                        module_confidence=self.config.confidence(SPOTTER_MODULE),
                        span=c.span,
                        module=SPOTTER_MODULE,
                    ))
        del candidates[self.config.beam:]  # beam cap before ranking
        candidates.sort(key=Hypothesis.sort_key)
        result = candidates[:n] if candidates else [fallback_hypothesis(uid)]
        self.last_hypotheses = result
        return result

    def emit(self, hypothesis: Hypothesis, tau: Fraction | None = None, *,
             sender: str, speaker: str) -> KqmlMessage:
        """Dialogue move when score >= tau (inclusive), else an implausibility note."""
        tau = self.config.plausibility if tau is None else tau
        if hypothesis.score >= tau:
            content = Compound("move", (Atom(speaker), hypothesis.act))
        else:
            content = Compound("implausible", (
                Num(hypothesis.utterance_id),
                hypothesis.act,
                score_term(hypothesis.score),
            ))
        return KqmlMessage(
            performative=Performative.TELL,
            sender=sender,
            receiver=self.config.route_receiver,
            content=content,
            content_type=self.config.move_content_type,
        )


# --- underspecified scope ------------------------------------------------------

@dataclass(frozen=True)
class UnderspecifiedLF:
    """Core with o1..ok placeholders, scope-bearing operators, order constraints."""

    core: Term
    operators: tuple[Term, ...]
    constraints: tuple[tuple[int, int], ...] = ()  # (i before j), 1-based

    def __post_init__(self) -> None:
        k = len(self.operators)
        for i, j in self.constraints:
            if not (1 <= i <= k and 1 <= j <= k):
                raise ValueError(f"constraint ({i},{j}) out of operator range")


def _topological_orders(k: int, constraints) -> list[list[int]]:
    """All linear extensions, lexicographic over index sequences."""
    preds: dict[int, set[int]] = {i: set() for i in range(1, k + 1)}
    for i, j in constraints:
        preds[j].add(i)
    out: list[list[int]] = []

    def go(remaining: set[int], acc: list[int]) -> None:
        if not remaining:
            out.append(list(acc))
            return
        for i in sorted(remaining):
            if not (preds[i] & remaining):
                acc.append(i)
                go(remaining - {i}, acc)
                acc.pop()

    go(set(range(1, k + 1)), [])
    return out


def enumerate_resolutions(ulf: UnderspecifiedLF) -> list[Term]:
    """One scoped term per linear extension of the constraint order.

    The outermost operator comes first in the extension; each operator wraps
    the material below it as an extra final argument, and its placeholder
    ``oi`` in the core is replaced by the operator's first argument.
    """
    k = len(ulf.operators)
    orders = _topological_orders(k, ulf.constraints)
    if k and not orders:
        raise ValueError("cyclic scope constraints")
    replacements: dict[Term, Term] = {}
    for idx, op in enumerate(ulf.operators, start=1):
        if isinstance(op, Compound) and op.args:
            replacements[Atom(f"o{idx}")] = op.args[0]

    def substitute(t: Term) -> Term:
        if t in replacements:
            return replacements[t]
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(substitute(a) for a in t.args))
        return t

    readings = []
    for order in orders:
        body = substitute(ulf.core)
        for idx in reversed(order):
            op = ulf.operators[idx - 1]
            if isinstance(op, Compound):
                body = Compound(op.functor, op.args + (body,))
            else:
                body = compound(_op_name(op), (body,))
        readings.append(body)
    return readings


def _op_name(op: Term) -> str:
    if isinstance(op, Atom):
        return op.name
    raise ValueError(f"operator must be an atom or compound: {op}")


def make_interpretation_agent(bus, config: InterpreterConfig, name: str = "im",
                              on_nbest=None):
    """An agent that interprets utterance(...) tells and emits dialogue moves."""
    from .runtime import Agent, BehaviouralRule, MessagePattern, Private
    from .terms import Str, fresh_var

    agent = Agent(name, bus)
    manager = InterpretationManager(config)

    def on_utterance(ag, args):
        if not isinstance(args, Compound) or not isinstance(args.args[0], Str):
            return []
        text = args.args[0].value
        hypotheses = manager.interpret(text)
        if on_nbest is not None:
            on_nbest(text, hypotheses)
        speaker = ag.current_message.sender
        return [manager.emit(hypotheses[0], sender=ag.name, speaker=speaker)]

    agent.register_private("interpret_utterance", on_utterance)
    pattern = Compound("utterance", (fresh_var("Text"),))
    agent.install_rule(BehaviouralRule(
        "on_utterance",
        MessagePattern(Performative.TELL, fresh_var("S"), pattern),
        then_do=(Private("interpret_utterance", pattern),),
    ))
    return agent, manager


def load_interpreter_config_lines(text: str) -> tuple[dict[str, Fraction],
                                                      tuple[str, ...]]:
    """Read ``confidence(<module>, <value>)`` terms and a ``spot:`` directive.

    These live alongside the grammar in one fixture file; grammar loading
    ignores them.
    """
    from .terms import parse_term

    confidences: dict[str, Fraction] = {}
    spot_categories: list[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line.startswith("spot:"):
            spot_categories.extend(
                p.strip() for p in line[5:].split(",") if p.strip()
            )
            continue
        if not line.startswith("confidence("):
            continue
        t = parse_term(line)
        if (
            not isinstance(t, Compound)
            or len(t.args) != 2
            or not isinstance(t.args[0], Atom)
            or not isinstance(t.args[1], Num)
        ):
            raise ValueError(f"bad confidence term: {line}")
        confidences[t.args[0].name] = Fraction(t.args[1].value)
    return confidences, tuple(spot_categories)
