import pytest
from hypothesis import given, settings

from parley.kqml import (
    BROADCAST,
    KqmlDecodeError,
    KqmlError,
    KqmlMessage,
    Performative,
    decode,
    encode,
    messages_equal,
    reply_to,
)
from parley.terms import Atom, Compound, Num, Str, Var

from .strategies import messages


def test_decode_minimal_tell():
    m = decode("(tell :sender usr :receiver im :content (greet))")
    assert m.performative is Performative.TELL
    assert m.sender == "usr"
    assert m.receiver == "im"
    assert m.content == Atom("greet")
    assert m.reply_with is None


def test_decode_all_fields_any_order():
    m = decode(
        "(ask_one :content dep_time(geneva, lausanne, T) :reply-with q1"
        " :sender dme :receiver expert :ontology trains :content-type query)"
    )
    assert m.performative is Performative.ASK_ONE
    assert m.reply_with == "q1"
    assert m.ontology == "trains"
    assert m.content_type == "query"
    assert isinstance(m.content.args[2], Var)


def test_decode_reply_requires_in_reply_to():
    with pytest.raises(KqmlDecodeError):
        decode("(reply :sender a :receiver b :content ok)")
    m = decode("(reply :sender a :receiver b :in-reply-to q1 :content ok)")
    assert m.in_reply_to == "q1"


def test_decode_unknown_performative():
    with pytest.raises(KqmlDecodeError):
        decode("(frobnicate :sender a :receiver b :content ok)")


def test_decode_missing_sender():
    with pytest.raises(KqmlDecodeError):
        decode("(tell :receiver b :content ok)")


def test_decode_missing_content():
    with pytest.raises(KqmlDecodeError):
        decode("(tell :sender a :receiver b)")


def test_decode_omitted_receiver_is_broadcast():
    m = decode("(tell :sender a :content ok)")
    assert m.receiver == BROADCAST
    assert m.is_broadcast


def test_decode_broadcast_receiver_symbol():
    m = decode("(tell :sender a :receiver * :content ok)")
    assert m.receiver == BROADCAST


def test_decode_rejects_garbage():
    for bad in ["", "tell :sender a", "(tell :sender a :content ok) extra",
                "(tell :wat a :sender b :content ok)",
                "(tell :sender a :sender b :content ok)"]:
        with pytest.raises(KqmlDecodeError):
            decode(bad)


def test_construct_invariants():
    with pytest.raises(KqmlError):
        KqmlMessage(Performative.TELL, "", "b", Atom("x"))
    with pytest.raises(KqmlError):
        KqmlMessage(Performative.SORRY, "a", "b", Atom("x"))


def test_reply_to_uses_nil_when_uncorrelated():
    m = KqmlMessage(Performative.ASK_ONE, "a", "b", Atom("q"))
    r = reply_to(m, Performative.SORRY, "b", Atom("no"))
    assert r.receiver == "a"
    assert r.in_reply_to == "nil"


def test_encode_canonical_form():
    m = KqmlMessage(
        Performative.TELL, "usr", "im", Compound("greet", (Str("hi"), Num(3))),
        reply_with="q1",
    )
    assert encode(m) == (
        '(tell :sender usr :receiver im :reply-with q1 :content greet("hi", 3))'
    )


@settings(max_examples=300)
@given(messages())
def test_encode_decode_round_trip(m):
    assert messages_equal(decode(encode(m)), m)
