"""Text preparation: tokenization, stemming, stopwords, phrases, tagging."""

from .annotate import AnnotatedCorpus, annotate_corpus, tag_pos, tokenize_corpus
from .phrases import detect_phrases, merge_phrases
from .stemming import stem
from .stopwords import StopwordList, builtin_stopwords, load_stopwords, remove_stopwords
from .tokens import Entity, Pos, Token, split_sentences, tokenize

__all__ = [
    "AnnotatedCorpus",
    "Entity",
    "Pos",
    "StopwordList",
    "Token",
    "annotate_corpus",
    "builtin_stopwords",
    "detect_phrases",
    "load_stopwords",
    "merge_phrases",
    "remove_stopwords",
    "split_sentences",
    "stem",
    "tag_pos",
    "tokenize",
    "tokenize_corpus",
]
