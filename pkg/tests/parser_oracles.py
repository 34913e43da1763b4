"""Independent parsing oracles for checking the island parser.

``oracle_valid`` enumerates item placements left-to-right and applies the
validity definition directly (children must themselves be valid at the
effective threshold).  ``chart_parse`` is a classical exhaustive chart over
contiguous spans.  Both share only the term library with the production
parser, not its head-seeded search or its threshold bookkeeping.
"""

from __future__ import annotations

from fractions import Fraction

from parley.islands import Grammar, GrammarRule
from parley.terms import Atom, Subst, Term, apply, compound, variables

# oracle entries: (start, end, covered, weight, sem_printed, sem_term)


def _sem(rule: GrammarRule, placement: list) -> Term:
    values = [
        Atom("missing") if p is None else p[4] for p in placement
    ]
    if rule.action is None:
        args = tuple(v for p, v in zip(placement, values) if p is not None)
        return compound(rule.lhs, args) if args else Atom(rule.lhs)
    slots = {}
    for v in variables(rule.action):
        if v.name.startswith("$"):
            slots[v.id] = values[int(v.name[1:]) - 1]
    return apply(Subst(slots), rule.action)


def _placements(items, min_start, tokens, results):
    if not items:
        yield []
        return
    item = items[0]
    if item.optional:
        for rest in _placements(items[1:], min_start, tokens, results):
            yield [None] + rest
    if item.is_terminal:
        for i in range(min_start, len(tokens)):
            if tokens[i] == item.symbol:
                entry = (i, i + 1, 1, Fraction(1), Atom(item.symbol))
                for rest in _placements(items[1:], i + 1, tokens, results):
                    yield [entry] + rest
    else:
        for entry in results.get(item.symbol, ()):
            if entry[0] >= min_start:
                for rest in _placements(items[1:], entry[1], tokens, results):
                    yield [entry] + rest


def oracle_valid(grammar: Grammar, tokens, theta) -> dict[str, set[tuple]]:
    """All valid constituents per category at theta, by brute force."""
    if not isinstance(theta, Fraction):
        theta = Fraction(theta)
    tokens = list(tokens)
    results: dict[str, set[tuple]] = {c: set() for c in grammar.categories()}
    grown: set[str] | None = None
    while True:
        next_grown: set[str] = set()
        for rule in grammar.rules:
            if grown is not None and not any(
                not item.is_terminal and item.symbol in grown
                for item in rule.body
            ):
                continue
            eff = (rule.threshold_override
                   if rule.threshold_override is not None else theta)
            eff_num, eff_den = eff.numerator, eff.denominator
            for placement in _placements(list(rule.body), 0, tokens, results):
                matched = [p for p in placement if p is not None]
                start, end = matched[0][0], matched[-1][1]
                covered = sum(p[2] for p in matched)
                if covered * eff_den < (end - start) * eff_num:
                    continue
                weight = rule.weight
                for p in matched:
                    weight *= p[3]
                sem = _sem(rule, placement)
                entry = (start, end, covered, weight, sem)
                if entry not in results[rule.lhs]:
                    results[rule.lhs].add(entry)
                    next_grown.add(rule.lhs)
        if not next_grown:
            return results
        grown = next_grown


def oracle_keys(grammar: Grammar, tokens, theta) -> set[tuple]:
    """Flattened (category, start, end, covered, weight, sem-text) keys."""
    out = set()
    for cat, entries in oracle_valid(grammar, tokens, theta).items():
        for (s, e, cov, w, sem) in entries:
            out.add((cat, s, e, cov, w, sem))
    return out


def constituent_keys(constituents) -> set[tuple]:
    return {
        (c.category, c.start, c.end, c.covered, c.weight, c.sem)
        for c in constituents
    }


# --- contiguous chart parser ---------------------------------------------------

def chart_parse(grammar: Grammar, tokens) -> dict[str, set[tuple]]:
    """Exhaustive chart over contiguous spans (no skipping anywhere)."""
    tokens = list(tokens)
    results: dict[str, set[tuple]] = {c: set() for c in grammar.categories()}

    def seqs(items, i, j):
        """Placements of items exactly covering [i, j), in order."""
        if not items:
            if i == j:
                yield []
            return
        item = items[0]
        if item.optional:
            for rest in seqs(items[1:], i, j):
                yield [None] + rest
        if item.is_terminal:
            if i < j and tokens[i] == item.symbol:
                entry = (i, i + 1, 1, Fraction(1), Atom(item.symbol))
                for rest in seqs(items[1:], i + 1, j):
                    yield [entry] + rest
        else:
            for entry in results.get(item.symbol, ()):
                if entry[0] == i and entry[1] <= j:
                    for rest in seqs(items[1:], entry[1], j):
                        yield [entry] + rest

    n = len(tokens)
    changed = True
    while changed:
        changed = False
        for rule in grammar.rules:
            for i in range(n):
                for j in range(i + 1, n + 1):
                    for placement in seqs(list(rule.body), i, j):
                        matched = [p for p in placement if p is not None]
                        if not matched:
                            continue
                        weight = rule.weight
                        for p in matched:
                            weight *= p[3]
                        sem = _sem(rule, placement)
                        entry = (i, j, j - i, weight, sem)
                        if entry not in results[rule.lhs]:
                            results[rule.lhs].add(entry)
                            changed = True
    return results


def chart_keys(grammar: Grammar, tokens) -> set[tuple]:
    out = set()
    for cat, entries in chart_parse(grammar, tokens).items():
        for (s, e, cov, w, sem) in entries:
            out.add((cat, s, e, cov, w, sem))
    return out
