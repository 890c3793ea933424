"""Tokenizer, stemmer, stopword, phrase, and tagger tests."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldscale.corpus import Corpus, Unit
from fieldscale.errors import AlignmentError
from fieldscale.textprep import (
    Entity,
    Pos,
    annotate_corpus,
    builtin_stopwords,
    detect_phrases,
    load_stopwords,
    merge_phrases,
    remove_stopwords,
    split_sentences,
    stem,
    tag_pos,
    tokenize,
)
from fieldscale.textprep.stemming import porter_pass
from fieldscale.textprep.stopwords import StopwordList


def one_unit_corpus(text):
    return Corpus((Unit("d", 0, text),), {"d": None}, frozenset())


# ----------------------------------------------------------------- tokens

def test_tokenize_basic():
    toks = tokenize("The quick brown fox.")
    assert [t.surface for t in toks] == ["The", "quick", "brown", "fox"]
    assert [t.stem for t in toks] == ["the", "quick", "brown", "fox"]
    assert [t.position for t in toks] == [0, 1, 2, 3]


def test_tokenize_internal_hyphen_and_apostrophe():
    toks = tokenize("Don't over-think state-of-the-art plans.")
    assert [t.surface for t in toks] == ["Don't", "over-think", "state-of-the-art", "plans"]


def test_tokenize_curly_apostrophe():
    assert [t.surface for t in tokenize("Maria’s house")] == ["Maria’s", "house"]


def test_tokenize_leading_punctuation_stripped():
    assert [t.surface for t in tokenize("'tis (parenthetical)")] == ["tis", "parenthetical"]


def test_tokenize_numbers_and_unicode():
    toks = tokenize("In 2011 the café re-opened, naïvely.")
    assert [t.surface for t in toks] == ["In", "2011", "the", "café", "re-opened", "naïvely"]


def test_tokenize_punctuation_only():
    assert tokenize("?! ... --- ") == []
    assert tokenize("") == []


def test_split_sentences():
    assert split_sentences("One. Two!  Three? ") == ["One", "Two", "Three"]
    assert split_sentences("no terminator") == ["no terminator"]


# ---------------------------------------------------------------- stemmer

# Full-run outputs for the classic step-by-step example words. Words whose
# per-step table shows an intermediate form (conformabli, differentli) end
# further reduced here because later steps of the same pass also fire.
PORTER_SINGLE_PASS = [
    ("caresses", "caress"), ("ponies", "poni"), ("ties", "ti"),
    ("caress", "caress"), ("cats", "cat"), ("feed", "feed"),
    ("agreed", "agre"), ("plastered", "plaster"), ("bled", "bled"),
    ("motoring", "motor"), ("sing", "sing"), ("conflated", "conflat"),
    ("troubled", "troubl"), ("sized", "size"), ("hopping", "hop"),
    ("tanned", "tan"), ("falling", "fall"), ("hissing", "hiss"),
    ("fizzed", "fizz"), ("failing", "fail"), ("filing", "file"),
    ("happy", "happi"), ("sky", "sky"), ("relational", "relat"),
    ("conditional", "condit"), ("rational", "ration"), ("valenci", "valenc"),
    ("hesitanci", "hesit"), ("digitizer", "digit"), ("conformabli", "conform"),
    ("radicalli", "radic"), ("differentli", "differ"), ("vileli", "vile"),
    ("analogousli", "analog"), ("vietnamization", "vietnam"),
    ("predication", "predic"), ("operator", "oper"), ("feudalism", "feudal"),
    ("decisiveness", "decis"), ("hopefulness", "hope"),
    ("callousness", "callous"), ("formaliti", "formal"),
    ("sensitiviti", "sensit"), ("sensibiliti", "sensibl"),
    ("triplicate", "triplic"), ("formative", "form"), ("formalize", "formal"),
    ("electriciti", "electr"), ("electrical", "electr"), ("hopeful", "hope"),
    ("goodness", "good"), ("revival", "reviv"), ("allowance", "allow"),
    ("inference", "infer"), ("airliner", "airlin"), ("gyroscopic", "gyroscop"),
    ("adjustable", "adjust"), ("defensible", "defens"), ("irritant", "irrit"),
    ("replacement", "replac"), ("adjustment", "adjust"),
    ("dependent", "depend"), ("adoption", "adopt"), ("homologou", "homolog"),
    ("communism", "commun"), ("activate", "activ"), ("angulariti", "angular"),
    ("homologous", "homolog"), ("effective", "effect"),
    ("bowdlerize", "bowdler"), ("probate", "probat"), ("rate", "rate"),
    ("cease", "ceas"), ("controll", "control"), ("roll", "roll"),
]

# The public stem() iterates to a fixpoint so stem(stem(w)) == stem(w);
# these five single-pass outputs shrink once more on the second pass.
FIXPOINT_DIVERGENT = {
    "agreed": "agr",
    "decisiveness": "deci",
    "callousness": "callou",
    "defensible": "defen",
    "cease": "cea",
}


def test_porter_single_pass_classic_vectors():
    for word, expected in PORTER_SINGLE_PASS:
        assert porter_pass(word) == expected, word


def test_stem_matches_single_pass_on_stable_words():
    for word, expected in PORTER_SINGLE_PASS:
        if word not in FIXPOINT_DIVERGENT:
            assert stem(word) == expected, word


def test_stem_fixpoint_divergences_are_exactly_these():
    for word, expected in PORTER_SINGLE_PASS:
        if word in FIXPOINT_DIVERGENT:
            assert stem(word) == FIXPOINT_DIVERGENT[word], word
            assert stem(word) == porter_pass(porter_pass(word)), word


def test_stem_lowercases():
    assert stem("Running") == "run"
    assert stem("MOTORING") == "motor"


def test_stem_short_words_untouched():
    assert stem("at") == "at"
    assert stem("is") == "is"
    assert stem("a") == "a"


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=14))
def test_stem_is_idempotent(word):
    once = stem(word)
    assert stem(once) == once


# -------------------------------------------------------------- stopwords

def test_builtin_stopwords_contents():
    stops = builtin_stopwords()
    assert stops.source == "builtin"
    for w in ("the", "a", "by", "for", "and"):
        assert w in stops
    assert len(stops) >= 100
    assert "village" not in stops


def test_stopword_list_rejects_bad_entries():
    with pytest.raises(ValueError):
        StopwordList(frozenset({"The"}), "custom")
    with pytest.raises(ValueError):
        StopwordList(frozenset({"two words"}), "custom")


def test_load_stopwords_with_comments(tmp_path):
    path = tmp_path / "stops.txt"
    path.write_text("# local additions\nfish\nchips\n\n", encoding="utf-8")
    stops = load_stopwords(path)
    assert stops.words == {"fish", "chips"}
    assert stops.source == "custom"
    merged = load_stopwords(path, merge_builtin=True)
    assert stops.words < merged.words
    assert "the" in merged
    assert merged.source == "merged"


def test_remove_stopwords_preserves_positions():
    toks = tokenize("the cat sat on the mat")
    kept = remove_stopwords(toks, builtin_stopwords())
    assert [t.surface for t in kept] == ["cat", "sat", "mat"]
    assert [t.position for t in kept] == [1, 2, 5]


def test_remove_stopwords_matches_on_stem():
    toks = [t.with_stem(stem(t.surface)) for t in tokenize("The running waters")]
    stops = StopwordList(frozenset({"run"}), "custom")
    assert [t.surface for t in remove_stopwords(toks, stops)] == ["The", "waters"]


# ---------------------------------------------------------------- phrases

def test_detect_phrases_hand_computed_pmi():
    lists = [
        tokenize("social capital matters here"),
        tokenize("building social capital together"),
        tokenize("social capital and trust"),
    ]
    # hand tally: 12 tokens, 9 bigrams; (social, capital) occurs 3 times,
    # social and capital occur 3 times each.
    pmi = math.log2(((3 + 1) / (9 + 1)) / (((3 + 1) / (12 + 1)) * ((3 + 1) / (12 + 1))))
    assert abs(pmi - math.log2(4.225)) < 1e-12
    found = detect_phrases(lists, min_count=3, pmi_threshold=2.0)
    assert found == {("social", "capital")}
    assert detect_phrases(lists, min_count=3, pmi_threshold=2.1) == set()
    assert detect_phrases(lists, min_count=4, pmi_threshold=0.0) == set()


def test_detect_phrases_empty_and_bad_args():
    assert detect_phrases([], min_count=1) == set()
    assert detect_phrases([tokenize("single")], min_count=1) == set()
    with pytest.raises(ValueError):
        detect_phrases([], min_count=0)


def test_merge_phrases_renumbers_positions():
    toks = tokenize("building social capital together")
    merged = merge_phrases(toks, {("social", "capital")})
    assert [t.surface for t in merged] == ["building", "social_capital", "together"]
    assert [t.stem for t in merged] == ["building", "social_capital", "together"]
    assert [t.position for t in merged] == [0, 1, 2]


def test_merge_phrases_greedy_no_overlap():
    toks = tokenize("x x x")
    merged = merge_phrases(toks, {("x", "x")})
    assert [t.stem for t in merged] == ["x_x", "x"]


def test_merge_phrases_no_match_is_identity():
    toks = tokenize("a b c")
    assert merge_phrases(toks, set()) == toks


# --------------------------------------------------------------- tagging

def test_tag_pos_closed_class():
    assert tag_pos("the") == Pos.DET
    assert tag_pos("Them") == Pos.PRON
    assert tag_pos("was") == Pos.VERB
    assert tag_pos("never") == Pos.ADV
    assert tag_pos("because") == Pos.OTHER


def test_tag_pos_suffix_heuristics():
    assert tag_pos("quickly") == Pos.ADV
    assert tag_pos("happiness") == Pos.NOUN
    assert tag_pos("hopeful") == Pos.ADJ
    assert tag_pos("organize") == Pos.VERB
    assert tag_pos("walking") == Pos.VERB
    assert tag_pos("walked") == Pos.VERB


def test_tag_pos_defaults_to_noun():
    assert tag_pos("village") == Pos.NOUN
    assert tag_pos("cat") == Pos.NOUN
    # too short for the suffix to be meaningful
    assert tag_pos("ring") == Pos.NOUN
    assert tag_pos("ed") == Pos.NOUN


def test_annotate_corpus_builtin():
    ac = annotate_corpus(one_unit_corpus("Maria quickly visited the famous grotto"))
    toks = ac.unit_tokens("d", 0)
    assert [t.pos for t in toks] == [
        Pos.NOUN, Pos.ADV, Pos.VERB, Pos.DET, Pos.ADJ, Pos.NOUN,
    ]
    assert all(t.entity == Entity.NONE for t in toks)
    # tagging never changes segmentation
    assert [t.surface for t in toks] == [t.surface for t in tokenize("Maria quickly visited the famous grotto")]


def test_annotate_corpus_sidecar_overrides(tmp_path):
    sidecar = tmp_path / "tags.csv"
    sidecar.write_text(
        "doc,reference,position,pos,entity\n"
        "d,0,0,NOUN,PERSON\n"
        "d,0,5,NOUN,FAC\n",
        encoding="utf-8",
    )
    ac = annotate_corpus(one_unit_corpus("Maria quickly visited the famous grotto"), sidecar=sidecar)
    toks = ac.unit_tokens("d", 0)
    assert toks[0].entity == Entity.PERSON
    assert toks[5].entity == Entity.FAC
    # untouched tokens keep builtin tags
    assert toks[1].pos == Pos.ADV and toks[1].entity == Entity.NONE
    assert len(toks) == 6


def test_annotate_sidecar_alignment_errors(tmp_path):
    corpus = one_unit_corpus("two words")

    bad_unit = tmp_path / "a.csv"
    bad_unit.write_text("doc,reference,position,pos,entity\nq,0,0,NOUN,NONE\n", encoding="utf-8")
    with pytest.raises(AlignmentError):
        annotate_corpus(corpus, sidecar=bad_unit)

    bad_pos = tmp_path / "b.csv"
    bad_pos.write_text("doc,reference,position,pos,entity\nd,0,2,NOUN,NONE\n", encoding="utf-8")
    with pytest.raises(AlignmentError):
        annotate_corpus(corpus, sidecar=bad_pos)

    bad_tag = tmp_path / "c.csv"
    bad_tag.write_text("doc,reference,position,pos,entity\nd,0,0,NOPE,NONE\n", encoding="utf-8")
    with pytest.raises(AlignmentError):
        annotate_corpus(corpus, sidecar=bad_tag)

    bad_header = tmp_path / "d.csv"
    bad_header.write_text("document,ref,idx,pos,entity\nd,0,0,NOUN,NONE\n", encoding="utf-8")
    with pytest.raises(AlignmentError):
        annotate_corpus(corpus, sidecar=bad_header)


def test_annotated_corpus_iter_units():
    corpus = Corpus(
        (Unit("d", 0, "hello there"), Unit("d", 1, "more text")),
        {"d": None},
        frozenset(),
    )
    ac = annotate_corpus(corpus)
    pairs = list(ac.iter_units())
    assert [u.key for u, _ in pairs] == [("d", 0), ("d", 1)]
    assert [len(toks) for _, toks in pairs] == [2, 2]
