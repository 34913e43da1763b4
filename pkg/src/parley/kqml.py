"""KQML message model and single-line wire codec.

A message is one s-expression per line: the performative, ``:keyword``
fields in any order, and a content term in canonical term syntax, e.g.::

    (tell :sender usr :receiver im :reply-with q1 :content greet)

The broadcast receiver is the reserved symbol ``*``; an omitted receiver
field also means broadcast.  Replies (reply, sorry, error) must carry
``:in-reply-to``; senders replying to an uncorrelated message use the
reserved correlation symbol ``nil``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum

from .terms import Term, alpha_equal, parse_term_prefix, print_term

BROADCAST = "*"

# correlation symbol for replies to messages that carried no :reply-with
NIL_CORRELATION = "nil"


class Performative(Enum):
    TELL = "tell"
    UNTELL = "untell"
    ASK_ONE = "ask_one"
    ASK_ALL = "ask_all"
    REPLY = "reply"
    SORRY = "sorry"
    ERROR = "error"
    ADVERTISE = "advertise"
    UNADVERTISE = "unadvertise"
    RECRUIT_ONE = "recruit_one"
    RECRUIT_ALL = "recruit_all"
    ACHIEVE = "achieve"
    INFORM = "inform"
    REQUEST = "request"
    PROMISE = "promise"
    DECLINE = "decline"
    SUBSCRIBE = "subscribe"
    REGISTER = "register"


REPLY_PERFORMATIVES = frozenset(
    {Performative.REPLY, Performative.SORRY, Performative.ERROR}
)

_PERFORMATIVE_BY_NAME = {p.value: p for p in Performative}


class KqmlError(ValueError):
    """A message violates the wire grammar or a field invariant."""


class KqmlDecodeError(KqmlError):
    pass


_SYMBOL_RE = re.compile(r"[a-z][A-Za-z0-9_]*")
_KEYWORD_RE = re.compile(r":[a-z][a-z-]*")
_WS_RE = re.compile(r"\s*")


@dataclass(frozen=True)
class KqmlMessage:
    performative: Performative
    sender: str
    receiver: str
    content: Term
    reply_with: str | None = None
    in_reply_to: str | None = None
    ontology: str | None = None
    content_type: str | None = None

    def __post_init__(self) -> None:
        if not self.sender:
            raise KqmlError("sender must be non-empty")
        if not self.receiver:
            raise KqmlError("receiver must be non-empty (use '*' for broadcast)")
        if self.performative in REPLY_PERFORMATIVES and not self.in_reply_to:
            raise KqmlError(
                f"{self.performative.value} requires in-reply-to"
            )
        if not isinstance(self.content, Term):
            raise KqmlError("content must be a Term")

    @property
    def is_broadcast(self) -> bool:
        return self.receiver == BROADCAST

    def with_fields(self, **kwargs) -> "KqmlMessage":
        return replace(self, **kwargs)


def reply_to(m: KqmlMessage, performative: Performative, sender: str,
             content: Term, **kwargs) -> KqmlMessage:
    """A reply addressed to m's sender, correlated with m's reply-with."""
    return KqmlMessage(
        performative=performative,
        sender=sender,
        receiver=m.sender,
        content=content,
        in_reply_to=m.reply_with or NIL_CORRELATION,
        **kwargs,
    )


def encode(m: KqmlMessage) -> str:
    """One-line wire form; fields in canonical order, content last."""
    parts = [f"({m.performative.value}", f":sender {m.sender}",
             f":receiver {m.receiver}"]
    if m.reply_with:
        parts.append(f":reply-with {m.reply_with}")
    if m.in_reply_to:
        parts.append(f":in-reply-to {m.in_reply_to}")
    if m.ontology:
        parts.append(f":ontology {m.ontology}")
    if m.content_type:
        parts.append(f":content-type {m.content_type}")
    parts.append(f":content {print_term(m.content)})")
    return " ".join(parts)


def decode(text: str) -> KqmlMessage:
    """Parse one complete message line; reject anything violating invariants."""
    pos = _WS_RE.match(text).end()
    if pos >= len(text) or text[pos] != "(":
        raise KqmlDecodeError("message must start with '('")
    pos += 1
    pos = _WS_RE.match(text, pos).end()
    m = _SYMBOL_RE.match(text, pos)
    if not m:
        raise KqmlDecodeError(f"expected performative at offset {pos}")
    perf_name = m.group()
    performative = _PERFORMATIVE_BY_NAME.get(perf_name)
    if performative is None:
        raise KqmlDecodeError(f"unknown performative {perf_name!r}")
    pos = m.end()

    fields: dict[str, str] = {}
    content: Term | None = None
    while True:
        pos = _WS_RE.match(text, pos).end()
        if pos >= len(text):
            raise KqmlDecodeError("unterminated message: missing ')'")
        if text[pos] == ")":
            pos += 1
            break
        kw = _KEYWORD_RE.match(text, pos)
        if not kw:
            raise KqmlDecodeError(f"expected :keyword at offset {pos}")
        key = kw.group()[1:]
        pos = _WS_RE.match(text, kw.end()).end()
        if key == "content":
            if content is not None:
                raise KqmlDecodeError("duplicate :content field")
            try:
                content, pos = parse_term_prefix(text, pos)
            except ValueError as e:
                raise KqmlDecodeError(f"bad content term: {e}") from e
            continue
        if key not in ("sender", "receiver", "reply-with", "in-reply-to",
                       "ontology", "content-type"):
            raise KqmlDecodeError(f"unknown field :{key}")
        if key in fields:
            raise KqmlDecodeError(f"duplicate :{key} field")
        if key == "receiver" and text[pos:pos + 1] == BROADCAST:
            fields[key] = BROADCAST
            pos += 1
            continue
        sym = _SYMBOL_RE.match(text, pos)
        if not sym:
            raise KqmlDecodeError(f"expected symbol for :{key} at offset {pos}")
        fields[key] = sym.group()
        pos = sym.end()

    if text[pos:].strip():
        raise KqmlDecodeError("trailing input after message")
    if "sender" not in fields:
        raise KqmlDecodeError("missing mandatory :sender field")
    if content is None:
        raise KqmlDecodeError("missing mandatory :content field")
    try:
        return KqmlMessage(
            performative=performative,
            sender=fields["sender"],
            receiver=fields.get("receiver", BROADCAST),
            content=content,
            reply_with=fields.get("reply-with"),
            in_reply_to=fields.get("in-reply-to"),
            ontology=fields.get("ontology"),
            content_type=fields.get("content-type"),
        )
    except KqmlError as e:
        raise KqmlDecodeError(str(e)) from e


def messages_equal(a: KqmlMessage, b: KqmlMessage) -> bool:
    """Structural equality with content compared up to variable renaming."""
    return (
        a.performative == b.performative
        and a.sender == b.sender
        and a.receiver == b.receiver
        and a.reply_with == b.reply_with
        and a.in_reply_to == b.in_reply_to
        and a.ontology == b.ontology
        and a.content_type == b.content_type
        and alpha_equal(a.content, b.content)
    )
