import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semno.cleanse import CleanSentence, clean_sentence, load_stopwords, tokenize
from semno.corpusio import RawSentence
from semno.errors import ConfigError

STOPS = load_stopwords("english")


def clean(text, stops=STOPS):
    return clean_sentence(RawSentence("d0", 0, text), "class-a", stops)


class TestCleanSentence:
    def test_brake_complaint(self):
        out = clean("When applying brakes, excessive effort is necessary")
        assert out.tokens == ("applying", "brakes", "excessive", "effort", "necessary")
        assert len(out) == 5

    def test_all_stopwords(self):
        assert clean("the and he his").tokens == ()

    def test_empty_text(self):
        out = clean("")
        assert out.tokens == ()
        assert len(out) == 0

    def test_symbols_split_tokens(self):
        assert clean("latch/striker fail-safe").tokens == (
            "latch", "striker", "fail", "safe",
        )

    def test_digits_kept(self):
        assert "2001" in clean("my 2001 excursion").tokens

    def test_case_folded(self):
        assert clean("BRAKES Failed").tokens == ("brakes", "failed")

    def test_position_preserved(self):
        raw = RawSentence("doc9", 4, "wheels locked")
        out = clean_sentence(raw, "Wheels", STOPS)
        assert (out.doc_id, out.index, out.label) == ("doc9", 4, "Wheels")


class TestStopwords:
    def test_builtin_english(self):
        stops = load_stopwords("english")
        assert {"the", "and", "he", "his"} <= stops.words
        assert len(stops.words) > 100

    def test_digest_stable(self):
        assert load_stopwords("english").digest == STOPS.digest

    def test_file_dedup_casefold(self, tmp_path):
        path = tmp_path / "stops.txt"
        path.write_text("The\nthe\n")
        stops = load_stopwords(str(path))
        assert stops.words == frozenset({"the"})

    def test_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "stops.txt"
        path.write_text("alpha\n\n\nbeta\n  \n")
        assert load_stopwords(str(path)).words == frozenset({"alpha", "beta"})

    def test_unknown_tag(self):
        with pytest.raises(ConfigError):
            load_stopwords("no-such-language-or-file")


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=120))
def test_idempotent(text):
    once = clean(text)
    again = clean(" ".join(once.tokens))
    assert once.tokens == again.tokens


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=120))
def test_output_alphabet_and_stopword_exclusion(text):
    out = clean(text)
    for token in out.tokens:
        assert token == token.lower()
        assert all(c.isascii() and (c.isdigit() or c.islower()) for c in token)
        assert token not in STOPS.words


def test_deterministic():
    text = "Wheel bearing FAILED at 45mph; vehicle pulled left!"
    assert tokenize(text) == tokenize(text)
    assert clean(text) == clean(text)
