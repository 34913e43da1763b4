"""Worker for the exhaustive parser-vs-oracle sweep (multiprocessed).

The input space is every token sequence of length 1..8 over the 5-word
vocabulary, addressed by a flat index so ranges can be handed to worker
processes.  Each worker checks, per theta: spot agreement with the
brute-force placement oracle over all categories, parse agreement with the
oracle after the maximality filter, and threshold monotonicity of the valid
sets across the theta ladder.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from parley.islands import load_grammar, parse, spot

from .parser_oracles import constituent_keys, oracle_keys

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
VOCAB = ("want", "ticket", "from", "geneva", "blah")
MAX_LEN = 8
THETAS = (Fraction("0.3"), Fraction("0.5"), Fraction("0.8"), Fraction(1))

_OFFSETS: list[tuple[int, int]] = []  # (first flat index, length)
_total = 0
for _n in range(1, MAX_LEN + 1):
    _OFFSETS.append((_total, _n))
    _total += len(VOCAB) ** _n
TOTAL_INPUTS = _total

_grammar = None


def _get_grammar():
    global _grammar
    if _grammar is None:
        _grammar = load_grammar(
            (FIXTURES / "acceptance_grammar.gram").read_text()
        )
    return _grammar


def input_for_index(index: int) -> tuple[str, ...]:
    for offset, n in reversed(_OFFSETS):
        if index >= offset:
            rest = index - offset
            tokens = []
            for _ in range(n):
                rest, digit = divmod(rest, len(VOCAB))
                tokens.append(VOCAB[digit])
            return tuple(tokens)
    raise IndexError(index)


def _maximal(keys: set[tuple]) -> set[tuple]:
    """Oracle-side maximality: drop keys properly contained in a same-category span."""
    spans = {}
    for (cat, s, e, *_rest) in keys:
        spans.setdefault(cat, set()).add((s, e))
    out = set()
    for key in keys:
        cat, s, e = key[0], key[1], key[2]
        contained = any(
            (s2, e2) != (s, e) and s2 <= s and e <= e2
            for (s2, e2) in spans[cat]
        )
        if not contained:
            out.add(key)
    return out


def check_range(bounds: tuple[int, int]) -> tuple[int, list[str]]:
    """Check flat indices [start, stop); returns (count, mismatch reports)."""
    start, stop = bounds
    grammar = _get_grammar()
    all_cats = grammar.categories()
    top = set(grammar.top_categories)
    failures: list[str] = []
    for index in range(start, stop):
        tokens = input_for_index(index)
        per_theta = []
        for theta in THETAS:
            expected = oracle_keys(grammar, tokens, theta)
            got_spot = constituent_keys(spot(grammar, tokens, all_cats, theta))
            if got_spot != expected:
                failures.append(f"spot mismatch at {tokens} theta={theta}")
            got_parse = constituent_keys(parse(grammar, tokens, theta))
            expected_parse = _maximal(
                {k for k in expected if k[0] in top}
            )
            if got_parse != expected_parse:
                failures.append(f"parse mismatch at {tokens} theta={theta}")
            # spot over every category IS the valid set; reuse it for the
            # monotonicity chain
            per_theta.append(got_spot)
        for tighter, looser in zip(per_theta[1:], per_theta):
            if not tighter <= looser:
                failures.append(f"monotonicity violated at {tokens}")
        if len(failures) > 8:
            break
    return stop - start, failures
