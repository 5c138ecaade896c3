import unicodedata

import pytest
from hypothesis import given, settings, strategies as st

from translit.dataset import (EOS_ID, NUM_RESERVED, CodepointVocabulary, DataError,
                              OutOfVocabularyError, ParseError, TransliterationPair, build_vocab,
                              load_pairs, normalize_english, normalize_pairs, split, stats,
                              write_pairs)
from translit.numeric import make_rng


def write(tmp_path, data: bytes):
    p = tmp_path / "c.tsv"
    p.write_bytes(data)
    return p


def test_load_in_order_and_skips_blank_lines(tmp_path):
    p = write(tmp_path, "kyoto\tきょうと\n\nosaka\tおおさか\r\n".encode())
    assert load_pairs(p) == [TransliterationPair("kyoto", "きょうと"),
                             TransliterationPair("osaka", "おおさか")]


@pytest.mark.parametrize("line", [b"no tab here\n", b"a\tb\tc\n", b"\tb\n", b"a\t\n"])
def test_load_rejects_bad_lines_with_line_number(tmp_path, line):
    p = write(tmp_path, b"ok\tfine\n" + line)
    with pytest.raises(ParseError) as err:
        load_pairs(p)
    assert err.value.lineno == 2
    assert ":2:" in str(err.value)


def test_load_reports_invalid_utf8_line(tmp_path):
    p = write(tmp_path, b"a\tb\nc\td\ne\t\xff\n")
    with pytest.raises(DataError, match=":3:"):
        load_pairs(p)


def test_write_then_load(tmp_path):
    pairs = [TransliterationPair("jens", "yens"), TransliterationPair("ü", "ß")]
    write_pairs(tmp_path / "x.tsv", pairs)
    assert load_pairs(tmp_path / "x.tsv") == pairs


@pytest.mark.parametrize("raw,norm", [
    ("è", "e"), ("ü", "u"), ("Jürgen", "jurgen"), ("ÉCOLE", "ecole"),
    ("ß", "ß"), ("ø", "ø"), ("ł", "ł"), ("Łódź", "łodz"), ("", ""),
])
def test_normalize_examples(raw, norm):
    assert normalize_english(raw) == norm


def test_normalize_idempotent_on_random_unicode():
    r = make_rng(99)
    for _ in range(10_000):
        n = int(r.integers(0, 8))
        s = "".join(chr(int(c)) for c in r.integers(0x20, 0x3000, size=n)
                    if not 0xD800 <= c < 0xE000)
        once = normalize_english(s)
        assert normalize_english(once) == once


@settings(max_examples=300)
@given(st.text(max_size=12))
def test_normalize_has_no_combining_marks_or_uppercase_change(s):
    out = normalize_english(s)
    assert not any(unicodedata.combining(c) for c in unicodedata.normalize("NFD", out))
    assert out.lower() == out or normalize_english(out.lower()) == out


def test_normalize_pairs_sides():
    pairs = [TransliterationPair("Èa", "Èb")]
    assert normalize_pairs(pairs, "source")[0] == TransliterationPair("ea", "Èb")
    assert normalize_pairs(pairs, "target")[0] == TransliterationPair("Èa", "eb")
    assert normalize_pairs(pairs, "none") == pairs
    with pytest.raises(ValueError):
        normalize_pairs(pairs, "both")


def test_vocabulary_reserved_ids_and_round_trip():
    v = build_vocab(["cab", "bad"])
    assert v.symbols[:NUM_RESERVED] == ["<eps>", "<pad>", "<go>", "<eos>"]
    assert v.content() == ["c", "a", "b", "d"]
    assert v.id("c") == NUM_RESERVED
    assert v.decode(v.encode("dab")) == "dab"
    assert len(v) == NUM_RESERVED + 4 and v.content_size == 4
    with pytest.raises(OutOfVocabularyError) as err:
        v.encode("cat")
    assert err.value.symbol == "t"
    with pytest.raises(IndexError):
        v.symbol(EOS_ID)
    with pytest.raises(ValueError):
        v.add("ab")
    assert CodepointVocabulary(v.content()) == v


def test_split_sizes_and_disjointness():
    pairs = [TransliterationPair(f"s{i}", f"t{i}") for i in range(100)]
    train, ev, test = split(pairs, seed=3)
    assert (len(train), len(ev), len(test)) == (81, 9, 10)
    assert sorted(train + ev + test, key=lambda p: int(p.source[1:])) == pairs
    assert split(pairs, seed=3) == (train, ev, test)
    assert split(pairs, seed=4) != (train, ev, test)


def test_split_floors_and_minimum():
    pairs = [TransliterationPair(str(i), "x") for i in range(25)]
    train, ev, test = split(pairs, 0)
    assert (len(test), len(ev), len(train)) == (2, 2, 21)
    with pytest.raises(ValueError):
        split(pairs[:9], 0)


def test_stats():
    s = stats([TransliterationPair("ab", "xyz"), TransliterationPair("abcd", "x")])
    assert (s.size, s.avg_input_length, s.avg_output_length) == (2, 3.0, 2.0)
    assert (s.source_vocab_size, s.target_vocab_size) == (4, 3)
    assert s.row() == "2\t3.00\t2.00\t4\t3"
    with pytest.raises(ValueError):
        stats([])
