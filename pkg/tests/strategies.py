"""Hypothesis strategies and seeded random generators shared across the suite."""

from __future__ import annotations

import random
import string
from decimal import Decimal

from hypothesis import strategies as st

from parley.terms import Atom, Compound, Num, Str, Term, Var, fresh_var

ATOM_NAMES = ["a", "b", "c", "f", "g", "foo", "bar", "point", "dep_time", "nil"]
VAR_NAMES = ["X", "Y", "Z", "Who", "_T"]
STR_ALPHABET = string.ascii_letters + string.digits + " _-:.,!?'"

atom_names = st.sampled_from(ATOM_NAMES)
var_names = st.sampled_from(VAR_NAMES)
safe_text = st.text(alphabet=STR_ALPHABET, max_size=12)
numbers = st.one_of(
    st.integers(-(10**6), 10**6),
    st.decimals(allow_nan=False, allow_infinity=False, places=4,
                min_value=-(10**6), max_value=10**6),
)


def canonical_vars(t: Term) -> Term:
    """Give same-named variables one shared id within this term."""
    mapping: dict[str, Var] = {}

    def walk(t: Term) -> Term:
        if isinstance(t, Var):
            if t.name not in mapping:
                mapping[t.name] = fresh_var(t.name)
            return mapping[t.name]
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(walk(a) for a in t.args))
        return t

    return walk(t)


def _leaves(with_vars: bool):
    opts = [atom_names.map(Atom), numbers.map(Num), safe_text.map(Str)]
    if with_vars:
        opts.append(var_names.map(lambda n: Var(n, 0)))
    return st.one_of(*opts)


def term_strategy(with_vars: bool = True, max_leaves: int = 12):
    base = st.recursive(
        _leaves(with_vars),
        lambda kids: st.builds(
            lambda f, args: Compound(f, tuple(args)),
            atom_names,
            st.lists(kids, min_size=1, max_size=3),
        ),
        max_leaves=max_leaves,
    )
    return base.map(canonical_vars)


terms = term_strategy()
ground_terms = term_strategy(with_vars=False)


def rand_term(rng: random.Random, depth: int = 3, with_vars: bool = True,
              varmap: dict[str, Var] | None = None) -> Term:
    """Seeded random term generator (for fixed-count derived-value tests)."""
    if varmap is None:
        varmap = {}
    choices = ["atom", "num", "str", "compound"]
    if with_vars:
        choices.append("var")
    kind = rng.choice(choices if depth > 0 else choices[:3] + (["var"] if with_vars else []))
    if kind == "atom":
        return Atom(rng.choice(ATOM_NAMES))
    if kind == "num":
        if rng.random() < 0.5:
            return Num(rng.randint(-999, 999))
        return Num(Decimal(rng.randint(-9999, 9999)) / 100)
    if kind == "str":
        n = rng.randint(0, 8)
        return Str("".join(rng.choice(STR_ALPHABET) for _ in range(n)))
    if kind == "var":
        name = rng.choice(VAR_NAMES)
        if name not in varmap:
            varmap[name] = fresh_var(name)
        return varmap[name]
    functor = rng.choice(ATOM_NAMES)
    args = tuple(
        rand_term(rng, depth - 1, with_vars, varmap)
        for _ in range(rng.randint(1, 3))
    )
    return Compound(functor, args)


def rand_unifiable_pair(rng: random.Random) -> tuple[Term, Term]:
    """Two independent generalizations of one skeleton; always unifiable."""
    skeleton = rand_term(rng, depth=3, with_vars=False)

    def abstract(t: Term, prefix: str, counter: list[int]) -> Term:
        if rng.random() < 0.25:
            counter[0] += 1
            return fresh_var(f"{prefix}{counter[0]}")
        if isinstance(t, Compound):
            return Compound(
                t.functor, tuple(abstract(a, prefix, counter) for a in t.args)
            )
        return t

    return abstract(skeleton, "L", [0]), abstract(skeleton, "R", [0])


# --- message strategy --------------------------------------------------------

from hypothesis import strategies as _st

from parley.kqml import BROADCAST, REPLY_PERFORMATIVES, KqmlMessage, Performative

SYMBOLS = ["usr", "im", "dme", "km", "broker", "expert", "a1", "a2", "q1", "q9"]
symbols = _st.sampled_from(SYMBOLS)
performatives = _st.sampled_from(sorted(Performative, key=lambda p: p.value))


@_st.composite
def messages(draw) -> KqmlMessage:
    perf = draw(performatives)
    maybe_symbol = _st.one_of(_st.none(), symbols)
    in_reply_to = draw(symbols) if perf in REPLY_PERFORMATIVES else draw(maybe_symbol)
    return KqmlMessage(
        performative=perf,
        sender=draw(symbols),
        receiver=draw(_st.one_of(symbols, _st.just(BROADCAST))),
        content=draw(terms),
        reply_with=draw(maybe_symbol),
        in_reply_to=in_reply_to,
        ontology=draw(maybe_symbol),
        content_type=draw(maybe_symbol),
    )
