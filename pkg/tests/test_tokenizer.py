import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emojipred.tokenizer import CLS, PAD, SEP, UNK, Vocabulary, build_vocab, decode, encode

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def test_ranking_and_tie_break():
    v = build_vocab(["a b", "a"])
    assert len(v) == 7 and v.id_to_token == SPECIALS + ["a", "b"]
    v2 = build_vocab(["zz yy", "yy"])
    assert v2.id_to_token[5:] == ["yy", "zz"]
    assert build_vocab(["b a"]).id_to_token[5:] == ["a", "b"]


def test_threshold_and_size_limits():
    assert len(build_vocab(["x"], min_freq=2)) == 5
    assert len(build_vocab(["a b c d"], max_size=7)) == 7
    with pytest.raises(ValueError):
        build_vocab(["a"], max_size=5)


def test_encode_examples():
    v = build_vocab(["a b", "a"])
    s = encode("a b", v, 6)
    assert s.ids.tolist() == [2, 5, 6, 3, 0, 0] and s.attention_mask.tolist() == [1, 1, 1, 1, 0, 0]
    assert encode("", v, 6).ids.tolist()[:3] == [2, 3, 0] and encode("", v, 6).true_length == 2
    assert encode("z", v, 6).ids.tolist()[:4] == [2, 1, 3, 0]
    long = encode("a b a b a b a", v, 5)
    assert long.ids.tolist() == [2, 5, 6, 5, 3]
    with pytest.raises(ValueError):
        encode("a", v, 2)


def test_decode_examples():
    v = build_vocab(["a b", "a"])
    assert decode([2, 5, 6, 3], v) == ["[CLS]", "a", "b", "[SEP]"]
    assert decode([0], v) == ["[PAD]"]
    with pytest.raises(ValueError):
        decode([99], v)


words = st.text(alphabet="abcdefgh", min_size=1, max_size=4)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.lists(words, max_size=10).map(" ".join), min_size=1, max_size=6), st.lists(words, max_size=12).map(" ".join), st.integers(3, 16))
def test_encode_invariants(corpus, text, max_len):
    v = build_vocab(corpus)
    s = encode(text, v, max_len)
    n = s.true_length
    assert len(s.ids) == max_len and np.all(s.ids < len(v))
    assert s.attention_mask.tolist() == [1] * n + [0] * (max_len - n)
    assert np.all(s.ids[n:] == PAD) and s.ids[0] == CLS and s.ids[n - 1] == SEP


@settings(max_examples=150, deadline=None)
@given(st.lists(words, min_size=1, max_size=30), st.data())
def test_round_trip_for_in_vocab_sentences(pool, data):
    v = build_vocab([" ".join(pool)])
    max_len = 16
    toks = data.draw(st.lists(st.sampled_from(pool), max_size=max_len - 3))
    ids = encode(" ".join(toks), v, max_len).ids
    assert [t for t in decode(ids, v) if t not in SPECIALS] == toks


@settings(max_examples=80, deadline=None)
@given(st.lists(st.lists(words, max_size=8).map(" ".join), min_size=1, max_size=8), st.integers(1, 4))
def test_raising_min_freq_never_adds_tokens(corpus, k):
    assert set(build_vocab(corpus, k + 1).id_to_token) <= set(build_vocab(corpus, k).id_to_token)


def test_vocab_file_roundtrip_is_bit_exact(tmp_path):
    v = build_vocab(["héllo wörld #tag", "@you"])
    v.save(tmp_path / "v.txt")
    raw = (tmp_path / "v.txt").read_bytes()
    assert raw.decode("utf-8").splitlines()[:5] == SPECIALS
    w = Vocabulary.load(tmp_path / "v.txt")
    assert w == v and w.sha256() == v.sha256()
    w.save(tmp_path / "w.txt")
    assert (tmp_path / "w.txt").read_bytes() == raw


def test_vocabulary_rejects_bad_tables():
    with pytest.raises(ValueError):
        Vocabulary(["a"] + SPECIALS)
    with pytest.raises(ValueError):
        Vocabulary(SPECIALS + ["a", "a"])
    assert Vocabulary(SPECIALS).lookup("x") == UNK
