"""Robust island parser: ordered item matching with a coverage threshold.

A rule's body items match disjoint, left-to-right sub-spans of the input;
tokens may be skipped strictly between matched items (the span is tight:
it starts at the first matched item and ends after the last).  Coverage is
the fraction of the span's tokens actually consumed, computed recursively,
and a constituent is valid when every level of its derivation reaches the
effective threshold (a per-rule override, else the caller's theta).  Rule
applications are seeded at occurrences of the head item and extended to the
left and right from there.

Weights, coverages and thresholds are exact fractions so ranking never
depends on float rounding.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache

from .terms import (
    Atom,
    Subst,
    Term,
    apply,
    compound,
    parse_term_prefix,
    print_term,
    variables,
)

MISSING = Atom("missing")

# coverage never exceeds 1, so 2 marks "no threshold-free level below here"
_NO_FREE_LEVEL = Fraction(2)


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Item:
    symbol: str
    is_terminal: bool
    head: bool = False
    optional: bool = False


@dataclass(frozen=True)
class GrammarRule:
    lhs: str
    body: tuple[Item, ...]
    weight: Fraction = Fraction(1)
    threshold_override: Fraction | None = None
    action: Term | None = None

    def __post_init__(self) -> None:
        heads = [i for i in self.body if i.head]
        if len(heads) != 1:
            raise GrammarError(f"rule {self.lhs!r} needs exactly one head item")
        if heads[0].optional:
            raise GrammarError(f"rule {self.lhs!r}: the head item cannot be optional")
        if not (0 <= self.weight <= 1):
            raise GrammarError(f"rule {self.lhs!r}: weight must be in [0,1]")
        if self.threshold_override is not None and not (
            0 < self.threshold_override <= 1
        ):
            raise GrammarError(f"rule {self.lhs!r}: threshold must be in (0,1]")
        if self.action is not None:
            arity = len(self.body)
            for v in variables(self.action):
                if v.name.startswith("$"):
                    slot = int(v.name[1:])
                    if not (1 <= slot <= arity):
                        raise GrammarError(
                            f"rule {self.lhs!r}: slot {v.name} out of range"
                        )

    @property
    def head_index(self) -> int:
        return next(i for i, item in enumerate(self.body) if item.head)


@dataclass(frozen=True)
class Grammar:
    rules: tuple[GrammarRule, ...]
    top_categories: tuple[str, ...]
    default_threshold: Fraction = Fraction(1, 2)

    def __post_init__(self) -> None:
        if not (0 < self.default_threshold <= 1):
            raise GrammarError("default threshold must be in (0,1]")
        defined = {r.lhs for r in self.rules}
        for rule in self.rules:
            for item in rule.body:
                if not item.is_terminal and item.symbol not in defined:
                    raise GrammarError(
                        f"rule {rule.lhs!r} references undefined category "
                        f"{item.symbol!r}"
                    )
        for cat in self.top_categories:
            if cat not in defined:
                raise GrammarError(f"top category {cat!r} has no rule")
        self._check_unit_cycles()

    def _check_unit_cycles(self) -> None:
        # an edge lhs -> cat exists when a nonterminal head could be the sole
        # matched item; such cycles would re-derive the same span forever
        edges: dict[str, set[str]] = {}
        for rule in self.rules:
            head = rule.body[rule.head_index]
            others_optional = all(
                item.optional for i, item in enumerate(rule.body)
                if i != rule.head_index
            )
            if not head.is_terminal and others_optional:
                edges.setdefault(rule.lhs, set()).add(head.symbol)
        seen: dict[str, int] = {}

        def visit(cat: str) -> None:
            state = seen.get(cat, 0)
            if state == 1:
                raise GrammarError(f"unit-derivation cycle through {cat!r}")
            if state == 2:
                return
            seen[cat] = 1
            for nxt in edges.get(cat, ()):
                visit(nxt)
            seen[cat] = 2

        for cat in edges:
            visit(cat)

    def categories(self) -> tuple[str, ...]:
        out: list[str] = []
        for rule in self.rules:
            if rule.lhs not in out:
                out.append(rule.lhs)
        return tuple(out)


@dataclass(frozen=True)
class Constituent:
    category: str
    start: int
    end: int
    covered: int
    weight: Fraction
    sem: Term
    # smallest coverage among derivation levels governed by the caller's
    # theta; levels with a rule override are checked at build time instead
    min_free_coverage: Fraction

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def coverage(self) -> Fraction:
        return Fraction(self.covered, self.end - self.start)


_sem_text = lru_cache(maxsize=65536)(print_term)


def rank_key(c: Constituent):
    return (
        -c.coverage,
        -c.weight,
        -(c.end - c.start),
        c.start,
        c.category,
        _sem_text(c.sem),
    )


@dataclass(frozen=True)
class _Placed:
    """One body item's match: a token or a sub-constituent, or an optional skip."""

    start: int
    end: int
    covered: int
    weight: Fraction
    value: Term
    min_free_coverage: Fraction


_SKIPPED = _Placed(-1, -1, 0, Fraction(1), MISSING, _NO_FREE_LEVEL)


def _item_placements(item: Item, tokens: tuple[str, ...],
                     by_cat: dict[str, list[Constituent]]) -> list[_Placed]:
    if item.is_terminal:
        return [
            _Placed(i, i + 1, 1, Fraction(1), Atom(word), _NO_FREE_LEVEL)
            for i, word in enumerate(tokens)
            if word == item.symbol
        ]
    return [
        _Placed(c.start, c.end, c.covered, c.weight, c.sem, c.min_free_coverage)
        for c in by_cat.get(item.symbol, ())
    ]


def _build(rule: GrammarRule, placed: list[_Placed]) -> Constituent | None:
    matched = [p for p in placed if p is not _SKIPPED]
    start = matched[0].start
    end = matched[-1].end
    covered = sum(p.covered for p in matched)
    coverage = Fraction(covered, end - start)
    weight = rule.weight
    min_free = _NO_FREE_LEVEL
    for p in matched:
        weight *= p.weight
        min_free = min(min_free, p.min_free_coverage)
    if rule.threshold_override is not None:
        if coverage < rule.threshold_override:
            return None
    else:
        min_free = min(min_free, coverage)
    if rule.action is None:
        args = tuple(p.value for p in matched if p.value != MISSING)
        sem = compound(rule.lhs, args) if args else Atom(rule.lhs)
    else:
        slots: dict[int, Term] = {}
        for v in variables(rule.action):
            if v.name.startswith("$"):
                slots[v.id] = placed[int(v.name[1:]) - 1].value
        sem = apply(Subst(slots), rule.action)
    return Constituent(rule.lhs, start, end, covered, weight, sem, min_free)


def _rule_applications(rule: GrammarRule, grammar: Grammar,
                       tokens: tuple[str, ...],
                       by_cat: dict[str, list[Constituent]]) -> list[Constituent]:
    """Head-seeded: place the head, then extend left and right in order."""
    h = rule.head_index
    out: list[Constituent] = []
    item_options = [_item_placements(item, tokens, by_cat) for item in rule.body]

    def extend_left(i: int, min_end_bound: int,
                    acc: list[_Placed]) -> list[list[_Placed]]:
        # items body[0..i] must end at or before min_end_bound
        if i < 0:
            return [acc]
        results = []
        if rule.body[i].optional:
            results.extend(extend_left(i - 1, min_end_bound, [_SKIPPED] + acc))
        for p in item_options[i]:
            if p.end <= min_end_bound:
                results.extend(extend_left(i - 1, p.start, [p] + acc))
        return results

    def extend_right(i: int, min_start_bound: int,
                     acc: list[_Placed]) -> list[list[_Placed]]:
        if i >= len(rule.body):
            return [acc]
        results = []
        if rule.body[i].optional:
            results.extend(extend_right(i + 1, min_start_bound, acc + [_SKIPPED]))
        for p in item_options[i]:
            if p.start >= min_start_bound:
                results.extend(extend_right(i + 1, p.end, acc + [p]))
        return results

    for head_placed in item_options[h]:
        for left in extend_left(h - 1, head_placed.start, []):
            for right in extend_right(h + 1, head_placed.end, []):
                built = _build(rule, left + [head_placed] + right)
                if built is not None:
                    out.append(built)
    return out


@lru_cache(maxsize=8)
def _forest(grammar: Grammar, tokens: tuple[str, ...]) -> dict[str, list[Constituent]]:
    """Every buildable constituent, independent of the caller's theta."""
    by_cat: dict[str, list[Constituent]] = {}
    seen: set[Constituent] = set()
    # a rule only needs re-running when a category it references grew
    grown: set[str] | None = None
    while True:
        next_grown: set[str] = set()
        for rule in grammar.rules:
            if grown is not None and not any(
                not item.is_terminal and item.symbol in grown
                for item in rule.body
            ):
                continue
            for c in _rule_applications(rule, grammar, tokens, by_cat):
                if c not in seen:
                    seen.add(c)
                    by_cat.setdefault(c.category, []).append(c)
                    next_grown.add(c.category)
        if not next_grown:
            return by_cat
        grown = next_grown


def _effective_theta(grammar: Grammar, theta) -> Fraction:
    """Accepts Fraction, Decimal, str or int; exact decimal text stays exact."""
    if theta is None:
        return grammar.default_threshold
    if not isinstance(theta, Fraction):
        theta = Fraction(theta)
    if not (0 < theta <= 1):
        raise ValueError("theta must be in (0,1]")
    return theta


def _dedup_ranked(constituents: list[Constituent]) -> list[Constituent]:
    out: list[Constituent] = []
    seen: set[tuple] = set()
    for c in sorted(constituents, key=rank_key):
        key = (c.category, c.start, c.end, c.covered, c.weight, c.sem)
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


def valid_constituents(grammar: Grammar, tokens: list[str] | tuple[str, ...],
                       theta=None) -> list[Constituent]:
    """All valid constituents of every category, ranked."""
    theta = _effective_theta(grammar, theta)
    forest = _forest(grammar, tuple(tokens))
    return _dedup_ranked([
        c for cs in forest.values() for c in cs if c.min_free_coverage >= theta
    ])


def parse(grammar: Grammar, tokens: list[str] | tuple[str, ...],
          theta=None) -> list[Constituent]:
    """Maximal valid top-category constituents, ranked.

    A constituent is dropped when another valid constituent of the same
    category properly contains its span.
    """
    if not tokens:
        raise ValueError("tokens must be non-empty")
    theta = _effective_theta(grammar, theta)
    forest = _forest(grammar, tuple(tokens))
    valid = [
        c
        for cat in grammar.top_categories
        for c in forest.get(cat, ())
        if c.min_free_coverage >= theta
    ]
    spans_by_cat: dict[str, set[tuple[int, int]]] = {}
    for c in valid:
        spans_by_cat.setdefault(c.category, set()).add(c.span)
    maximal = []
    for c in valid:
        contained = any(
            (s, e) != c.span and s <= c.start and c.end <= e
            for (s, e) in spans_by_cat[c.category]
        )
        if not contained:
            maximal.append(c)
    return _dedup_ranked(maximal)


def spot(grammar: Grammar, tokens: list[str] | tuple[str, ...],
         categories: list[str] | tuple[str, ...],
         theta=None) -> list[Constituent]:
    """All valid constituents of the named categories; no maximality filter."""
    known = set(grammar.categories())
    for cat in categories:
        if cat not in known:
            raise GrammarError(f"unknown category {cat!r}")
    theta = _effective_theta(grammar, theta)
    forest = _forest(grammar, tuple(tokens))
    wanted = set(categories)
    return _dedup_ranked([
        c
        for cat in wanted
        for c in forest.get(cat, ())
        if c.min_free_coverage >= theta
    ])


# --- grammar file format -------------------------------------------------------

_RULE_RE = re.compile(r"^(?P<lhs>[a-z][A-Za-z0-9_]*)\s*->\s*(?P<rest>.+)$")
_NUM_RE = re.compile(r"[0-9]+(\.[0-9]+)?")


def load_grammar(text: str) -> Grammar:
    """Line-oriented grammar:

    - ``top: cat, cat`` declares the top categories
    - ``threshold: 0.5`` sets the default coverage threshold
    - ``cat -> *"word" other ?opt { action($1, $3) } @0.9 ?0.8`` defines a
      rule: ``*`` marks the head, ``?`` an optional item, quoted words are
      terminals, unquoted names refer to a category when one is defined and
      are terminal words otherwise, ``@`` is the rule weight and a trailing
      ``?<number>`` overrides the threshold for this rule.
    - ``#`` starts a comment.
    """
    raw_rules: list[tuple[int, str, list[tuple[str, bool, bool]],
                          Term | None, Fraction, Fraction | None]] = []
    top: list[str] = []
    default_threshold: Fraction | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        # interpreter-config lines share the grammar fixture; skip them here
        if line.startswith("confidence(") or line.startswith("spot:"):
            continue
        if line.startswith("top:"):
            top.extend(p.strip() for p in line[4:].split(",") if p.strip())
            continue
        if line.startswith("threshold:"):
            default_threshold = Fraction(Decimal(line[len("threshold:"):].strip()))
            continue
        m = _RULE_RE.match(line)
        if not m:
            raise GrammarError(f"line {lineno}: cannot parse rule")
        lhs, rest = m.group("lhs"), m.group("rest")
        action: Term | None = None
        weight = Fraction(1)
        override: Fraction | None = None
        brace = rest.find("{")
        if brace != -1:
            close = rest.find("}", brace)
            if close == -1:
                raise GrammarError(f"line {lineno}: unterminated action")
            action_text = rest[brace + 1:close].strip()
            action, pos = parse_term_prefix(action_text)
            if action_text[pos:].strip():
                raise GrammarError(f"line {lineno}: trailing input in action")
            rest = rest[:brace] + " " + rest[close + 1:]
        tokens_spec: list[tuple[str, bool, bool]] = []  # (text, head, optional)
        for tok in rest.split():
            if tok.startswith("@"):
                weight = Fraction(Decimal(tok[1:]))
                continue
            if tok.startswith("?") and _NUM_RE.fullmatch(tok[1:]):
                override = Fraction(Decimal(tok[1:]))
                continue
            head = optional = False
            while tok and tok[0] in "*?":
                if tok[0] == "*":
                    head = True
                else:
                    optional = True
                tok = tok[1:]
            if not tok:
                raise GrammarError(f"line {lineno}: empty item")
            tokens_spec.append((tok, head, optional))
        if not tokens_spec:
            raise GrammarError(f"line {lineno}: rule has no body items")
        raw_rules.append((lineno, lhs, tokens_spec, action, weight, override))

    defined = {lhs for _, lhs, _, _, _, _ in raw_rules}
    rules = []
    for lineno, lhs, tokens_spec, action, weight, override in raw_rules:
        items = []
        for tok, head, optional in tokens_spec:
            if tok.startswith('"'):
                if not (len(tok) >= 2 and tok.endswith('"')):
                    raise GrammarError(f"line {lineno}: bad quoted terminal {tok}")
                items.append(Item(tok[1:-1], True, head, optional))
            else:
                items.append(Item(tok, tok not in defined, head, optional))
        try:
            rules.append(GrammarRule(lhs, tuple(items), weight, override, action))
        except GrammarError as e:
            raise GrammarError(f"line {lineno}: {e}") from None
    if not top:
        raise GrammarError("grammar must declare top categories with 'top:'")
    return Grammar(
        rules=tuple(rules),
        top_categories=tuple(top),
        default_threshold=default_threshold or Fraction(1, 2),
    )
