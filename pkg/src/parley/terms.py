"""First-order terms, unification and a canonical text syntax.

Terms are the interchange language of the whole system: message content,
beliefs, parse results and capability descriptions are all terms.  The
syntax follows logic-programming convention: lowercase-initial symbols are
atoms/functors, uppercase-initial (or ``_``-initial) symbols are variables,
strings are double-quoted, numbers are exact (int or Decimal).  ``[a, b]``
is sugar for ``list(a, b)`` and ``[]`` for the atom ``nil``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from decimal import Decimal


class Term:
    """Base class for all term variants (immutable values)."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Term):
    name: str


@dataclass(frozen=True)
class Num(Term):
    value: int | Decimal


@dataclass(frozen=True)
class Str(Term):
    value: str


@dataclass(frozen=True)
class Var(Term):
    name: str
    id: int


@dataclass(frozen=True)
class Compound(Term):
    functor: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if len(self.args) == 0:
            raise ValueError("zero-arg compound; use Atom (or compound())")


_fresh_ids = itertools.count(1)


def fresh_var(name: str = "_G") -> Var:
    """A variable with a process-unique id."""
    return Var(name, next(_fresh_ids))


def compound(functor: str, args: tuple[Term, ...] | list[Term]) -> Term:
    """Build a compound, normalizing zero arguments to an Atom."""
    args = tuple(args)
    if not args:
        return Atom(functor)
    return Compound(functor, args)


def variables(t: Term) -> list[Var]:
    """All variables in t, in first-occurrence order, deduplicated."""
    seen: dict[int, Var] = {}

    def walk(t: Term) -> None:
        if isinstance(t, Var):
            seen.setdefault(t.id, t)
        elif isinstance(t, Compound):
            for a in t.args:
                walk(a)

    walk(t)
    return list(seen.values())


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Compound):
        return all(is_ground(a) for a in t.args)
    return True


def rename_apart(t: Term) -> Term:
    """Copy of t with every variable replaced by a fresh one (renaming apart)."""
    mapping: dict[int, Var] = {}

    def walk(t: Term) -> Term:
        if isinstance(t, Var):
            if t.id not in mapping:
                mapping[t.id] = fresh_var(t.name)
            return mapping[t.id]
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(walk(a) for a in t.args))
        return t

    return walk(t)


@dataclass(frozen=True)
class Subst:
    """Finite mapping from variable id to term.

    Bindings are kept fully resolved, so applying a substitution twice
    equals applying it once and no binding contains its own variable.
    """

    bindings: dict[int, Term]

    def get(self, v: Var) -> Term | None:
        return self.bindings.get(v.id)

    def apply(self, t: Term) -> Term:
        return apply(self, t)

    def __len__(self) -> int:
        return len(self.bindings)

    def items(self):
        return self.bindings.items()


EMPTY_SUBST = Subst({})


def apply(s: Subst, t: Term) -> Term:
    """Replace every bound variable in t; unbound variables are unchanged."""
    if isinstance(t, Var):
        bound = s.bindings.get(t.id)
        return t if bound is None else bound
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(apply(s, a) for a in t.args))
    return t


def compose(s1: Subst, s2: Subst) -> Subst:
    """Substitution composition: apply(compose(s1,s2), t) == apply(s2, apply(s1, t)).

    The result stays fully resolved, so composition preserves idempotence.
    """
    merged = {vid: apply(s2, t) for vid, t in s1.bindings.items()}
    for vid, t in s2.bindings.items():
        if vid not in merged:
            merged[vid] = t
    return Subst(merged)


def unify(a: Term, b: Term) -> Subst | None:
    """Most general unifier of a and b, or None if there is none.

    Occurs-check is always on: unify(X, f(X)) fails rather than building
    an infinite term.
    """
    bindings: dict[int, Term] = {}

    def walk(t: Term) -> Term:
        while isinstance(t, Var):
            nxt = bindings.get(t.id)
            if nxt is None:
                return t
            t = nxt
        return t

    def occurs(vid: int, t: Term) -> bool:
        t = walk(t)
        if isinstance(t, Var):
            return t.id == vid
        if isinstance(t, Compound):
            return any(occurs(vid, a) for a in t.args)
        return False

    stack: list[tuple[Term, Term]] = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = walk(x), walk(y)
        if x == y:
            continue
        if isinstance(x, Var):
            if occurs(x.id, y):
                return None
            bindings[x.id] = y
        elif isinstance(y, Var):
            if occurs(y.id, x):
                return None
            bindings[y.id] = x
        elif isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            stack.extend(zip(x.args, y.args))
        else:
            return None

    def resolve(t: Term) -> Term:
        t = walk(t)
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(resolve(a) for a in t.args))
        return t

    return Subst({vid: resolve(t) for vid, t in bindings.items()})


def alpha_equal(a: Term, b: Term) -> bool:
    """Structural equality up to a bijective renaming of variables."""
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}

    def walk(x: Term, y: Term) -> bool:
        if isinstance(x, Var) and isinstance(y, Var):
            if fwd.setdefault(x.id, y.id) != y.id:
                return False
            if bwd.setdefault(y.id, x.id) != x.id:
                return False
            return True
        if isinstance(x, Compound) and isinstance(y, Compound):
            return (
                x.functor == y.functor
                and len(x.args) == len(y.args)
                and all(walk(p, q) for p, q in zip(x.args, y.args))
            )
        return x == y

    return walk(a, b)


# --- canonical text syntax -------------------------------------------------

class TermSyntaxError(ValueError):
    """Raised on malformed term text; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


_NAME_RE = re.compile(r"[a-z][A-Za-z0-9_]*")
_VAR_RE = re.compile(r"[A-Z_][A-Za-z0-9_]*")
_NUM_RE = re.compile(r"-?[0-9]+(\.[0-9]+)?")
_SLOT_RE = re.compile(r"\$[0-9]+")
_WS_RE = re.compile(r"\s*")


class _Parser:
    def __init__(self, text: str, pos: int = 0, varmap: dict[str, Var] | None = None):
        self.text = text
        self.pos = pos
        self.varmap: dict[str, Var] = {} if varmap is None else varmap

    def skip_ws(self) -> None:
        self.pos = _WS_RE.match(self.text, self.pos).end()

    def fail(self, message: str) -> TermSyntaxError:
        return TermSyntaxError(message, self.pos)

    def expect(self, ch: str) -> None:
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise self.fail(f"expected {ch!r}")
        self.pos += 1

    def var_for(self, name: str) -> Var:
        if name not in self.varmap:
            self.varmap[name] = fresh_var(name)
        return self.varmap[name]

    def term(self) -> Term:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise self.fail("unexpected end of input")
        ch = self.text[self.pos]
        if ch == "(":
            self.pos += 1
            inner = self.term()
            self.skip_ws()
            self.expect(")")
            return inner
        if ch == "[":
            return self.list_term()
        if ch == '"':
            return self.string()
        m = _SLOT_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return self.var_for(m.group())
        m = _NUM_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            text = m.group()
            return Num(Decimal(text) if "." in text else int(text))
        m = _VAR_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return self.var_for(m.group())
        m = _NAME_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            name = m.group()
            self.skip_ws()
            if self.pos < len(self.text) and self.text[self.pos] == "(":
                self.pos += 1
                args = self.args()
                self.expect(")")
                return Compound(name, args)
            return Atom(name)
        raise self.fail(f"unexpected character {ch!r}")

    def args(self) -> tuple[Term, ...]:
        out = [self.term()]
        self.skip_ws()
        while self.pos < len(self.text) and self.text[self.pos] == ",":
            self.pos += 1
            out.append(self.term())
            self.skip_ws()
        return tuple(out)

    def list_term(self) -> Term:
        self.expect("[")
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == "]":
            self.pos += 1
            return Atom("nil")
        items = self.args()
        self.expect("]")
        return Compound("list", items)

    def string(self) -> Str:
        self.expect('"')
        out = []
        while True:
            if self.pos >= len(self.text):
                raise self.fail("unterminated string")
            ch = self.text[self.pos]
            if ch == '"':
                self.pos += 1
                return Str("".join(out))
            if ch == "\\":
                self.pos += 1
                if self.pos >= len(self.text):
                    raise self.fail("unterminated escape")
                esc = self.text[self.pos]
                if esc not in '"\\':
                    raise self.fail(f"unknown escape \\{esc}")
                out.append(esc)
            else:
                out.append(ch)
            self.pos += 1


def parse_term(text: str) -> Term:
    """Parse one complete term; trailing non-space input is an error."""
    p = _Parser(text)
    t = p.term()
    p.skip_ws()
    if p.pos != len(text):
        raise p.fail("trailing input after term")
    return t


def parse_term_prefix(
    text: str, pos: int = 0, varmap: dict[str, Var] | None = None
) -> tuple[Term, int]:
    """Parse one term starting at pos; return it and the next offset.

    Used by the message codec, where a term is embedded in a larger line.
    """
    p = _Parser(text, pos, varmap)
    t = p.term()
    return t, p.pos


def print_term(t: Term) -> str:
    """Canonical text for t; parse_term(print_term(t)) is alpha-equal to t."""
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Num):
        # "f" keeps Decimals out of exponent notation, which the parser rejects
        return format(t.value, "f") if isinstance(t.value, Decimal) else str(t.value)
    if isinstance(t, Str):
        escaped = t.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Compound):
        inner = ", ".join(print_term(a) for a in t.args)
        if t.functor == "list":
            return f"[{inner}]"
        return f"{t.functor}({inner})"
    raise TypeError(f"not a term: {t!r}")
