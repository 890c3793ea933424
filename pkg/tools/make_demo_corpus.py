"""Regenerate the bundled demo corpus (src/fieldscale/data/demo/).

The demo is a small synthetic field-note corpus with two thematic
vocabularies (water infrastructure and market trading) spread unevenly
across eight participants, plus four hand-assigned codes. Everything is
seeded, so rerunning this script reproduces the shipped bytes exactly.

Usage: python tools/make_demo_corpus.py
"""

from __future__ import annotations

import random
from pathlib import Path

from fieldscale.corpus import Corpus, Unit, export_table, parse_filename, write_table

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "fieldscale" / "data" / "demo"

SEED = 42
UNITS_PER_DOC = 32

# each template: (text with {slot} markers, codes for the unit)
WATER_TEMPLATES = [
    ("the {source} near the {place} {fault} again last {when}",
     ("water access", "infrastructure")),
    ("families carry {vessel} of water before dawn and wait in line at the {source}",
     ("water access",)),
    ("the water committee repaired the {source} with a spare pipe from town",
     ("water access", "infrastructure")),
    ("children fetch water from the {source} after school most days",
     ("water access",)),
    ("the {source} water tastes of rust so people boil it first",
     ("water access",)),
    ("a new {source} was promised before the rains but work has not started",
     ("water access", "infrastructure")),
]

MARKET_TEMPLATES = [
    ("traders arrive before sunrise to claim the best market {stall}",
     ("market day",)),
    ("the price of {crop} climbed again this season and buyers complain",
     ("market day", "prices")),
    ("vendors sell {crop} and dried fish near the bus stage on market day",
     ("market day",)),
    ("transport costs eat the profit from every {stall} at the market",
     ("market day", "prices")),
    ("on market day the whole village walks the {road} road to trade",
     ("market day",)),
    ("a kilo of {crop} costs double what it did two harvests ago",
     ("prices",)),
]

NEUTRAL_TEMPLATES = [
    ("the afternoon was quiet and we sat under the {tree} tree talking", ()),
    ("my cousin visited from the city and stayed three nights", ()),
    ("the school held a football match and everyone attended", ()),
    ("rain fell hard in the evening and the paths turned to mud", ()),
]

QUESTION_TEMPLATES = [
    ("how has the season been for your family", ()),
    ("what has changed since my last visit", ()),
    ("who decides how the household spends its income", ()),
]

SLOTS = {
    "source": ["well", "pump", "borehole", "standpipe"],
    "place": ["school", "clinic", "church", "river"],
    "fault": ["broke", "failed", "ran dry"],
    "when": ["week", "month"],
    "vessel": ["buckets", "jerricans"],
    "crop": ["maize", "tomatoes", "onions", "beans"],
    "stall": ["stall", "table"],
    "road": ["north", "lower"],
    "tree": ["mango", "fig"],
}

CODEBOOK = frozenset(
    code for _, codes in WATER_TEMPLATES + MARKET_TEMPLATES for code in codes
)


def fill(template: str, rng: random.Random) -> str:
    text = template
    while "{" in text:
        start = text.index("{")
        end = text.index("}", start)
        slot = text[start + 1:end]
        text = text[:start] + rng.choice(SLOTS[slot]) + text[end + 1:]
    return text


def build_corpus() -> Corpus:
    rng = random.Random(SEED)
    units: list[Unit] = []
    documents = {}
    for i in range(1, 9):
        doc_id = f"P{i:02d}_202405{10 + i}_ab"
        documents[doc_id] = parse_filename(doc_id + ".txt")
        water_share = 0.6 if i <= 4 else 0.15
        for ref in range(UNITS_PER_DOC):
            section = "morning" if ref < UNITS_PER_DOC // 2 else "afternoon"
            if ref % 6 == 5:
                template, codes = rng.choice(QUESTION_TEMPLATES)
                speaker = "interviewer"
            else:
                speaker = "respondent"
                roll = rng.random()
                if roll < water_share:
                    template, codes = rng.choice(WATER_TEMPLATES)
                elif roll < water_share + 0.55:
                    template, codes = rng.choice(MARKET_TEMPLATES)
                else:
                    template, codes = rng.choice(NEUTRAL_TEMPLATES)
            units.append(Unit(
                doc_id=doc_id,
                reference=ref,
                text=fill(template, rng),
                speaker=speaker,
                section=section,
                codes=frozenset(codes),
            ))
    return Corpus(tuple(units), documents, CODEBOOK)


DEMO_TOML = """\
# demo pipeline over the bundled synthetic corpus
seed = 7

[corpus]
input = "corpus.csv"

[topics]
k = 2
iterations = 200

[embeddings]
dim = 16
window = 3
epochs = 3
min_count = 3
svd_dims = 2
clusters = 2

[semnet]
scope = "sentence"
min_weight = 2.0
top_nodes = 40

[heatmap]
mode = "count"
linkage = "average"
metric = "euclidean"

[coder]
codes = ["water access"]
features = "tfidf"
eval_fraction = 0.3
target_recall = 0.98
epochs = 150
queue_limit = 20
"""


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    corpus = build_corpus()
    write_table(export_table(corpus), OUT_DIR / "corpus.csv")
    (OUT_DIR / "demo.toml").write_text(DEMO_TOML, encoding="utf-8")
    positives = sum(1 for u in corpus.units if "water access" in u.codes)
    print(f"wrote {len(corpus.units)} units to {OUT_DIR / 'corpus.csv'}")
    print(f"codebook: {sorted(corpus.codebook)}")
    print(f"'water access' positives: {positives}")


if __name__ == "__main__":
    main()
