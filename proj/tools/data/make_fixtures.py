#!/usr/bin/env python3
"""Generate the bundled text fixtures under data/.

  data/models/reference_train.jsonl  {"text", "label"}   training set for the reference model
  data/eval/labeled.jsonl            {"text", "gold"}    500 held-out labeled examples
  data/demo/<entity>.jsonl           RawPost objects     50 posts per demo entity

All output is a pure function of the fixed seeds below.
"""

import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2] / "data"

ENTITIES = {
    # name: (display, products, positive share, negative share)
    "amazon": ("Amazon", ["prime delivery", "kindle", "echo speaker", "prime video", "customer service"], 0.62, 0.14),
    "samsung": ("Samsung", ["galaxy phone", "smart tv", "galaxy watch", "foldable", "battery"], 0.48, 0.22),
    "microsoft": ("Microsoft", ["windows update", "teams", "copilot", "xbox", "surface laptop"], 0.16, 0.58),
    "tesla": ("Tesla", ["model 3", "autopilot", "cybertruck", "supercharger", "stock"], 0.34, 0.40),
}

POS_CLAUSES = [
    "i love the {p}",
    "the {p} is amazing",
    "really happy with the {p}",
    "the {p} works great and i am impressed",
    "best {p} i have ever used",
    "so excited about the new {p}",
    "the {p} is fantastic, highly recommend it",
    "great job on the {p}",
    "the {p} made my day",
    "absolutely loving the {p} right now",
    "the {p} is super reliable and fast",
    "thank you for the awesome {p}",
    "the {p} is a huge win",
    "i am very pleased with the {p}",
    "the {p} exceeded my expectations",
]

NEG_CLAUSES = [
    "i hate the {p}",
    "the {p} is terrible",
    "really disappointed with the {p}",
    "the {p} is broken again and i am furious",
    "worst {p} i have ever used",
    "so annoyed with the new {p}",
    "the {p} is awful, do not buy it",
    "the {p} keeps failing",
    "the {p} ruined my day",
    "the {p} is a total waste of money",
    "the {p} is slow and buggy",
    "never buying the {p} again",
    "the {p} is a disaster",
    "i am very upset about the {p}",
    "the {p} is useless and frustrating",
]

NEU_CLAUSES = [
    "the {p} arrives next week",
    "just ordered the {p}",
    "anyone know when the {p} update comes out",
    "the {p} is available in three colors",
    "reading about the {p} today",
    "the {p} event is on tuesday",
    "switching to the {p} this month",
    "the {p} comes with a manual",
    "what is the price of the {p}",
    "they announced the {p} at the conference",
    "the {p} is sold in stores now",
    "looking at the {p} specs",
    "the {p} ships from the warehouse",
    "is the {p} worth a look",
    "my friend has the {p}",
]

OPENERS = ["", "", "", "honestly ", "ok so ", "well ", "just saying, ", "update: "]
POS_TAILS = ["", "", "", " 😍", " ❤️", " 🙂", "!", "!!", " #happy", " #winning", " lol"]
NEG_TAILS = ["", "", "", " 😡", " 😞", " 👎", "!", "!!", " #fail", " #annoyed", " smh"]
NEU_TAILS = ["", "", "", ".", " #news", " #tech", " btw", " fyi"]

GENERIC_PRODUCTS = [
    "app", "phone", "laptop", "service", "update", "delivery", "camera", "store", "website",
    "subscription", "headphones", "car", "game", "tablet", "support team",
]


def compose(rng, kind, products, entity=None):
    clauses = {"positive": POS_CLAUSES, "negative": NEG_CLAUSES, "neutral": NEU_CLAUSES}[kind]
    tails = {"positive": POS_TAILS, "negative": NEG_TAILS, "neutral": NEU_TAILS}[kind]
    body = rng.choice(clauses).format(p=rng.choice(products))
    text = rng.choice(OPENERS) + body
    if entity and rng.random() < 0.5:
        text += rng.choice([" from @{e}", " by {e}", " #{e}"]).format(e=entity)
    text += rng.choice(tails)
    if rng.random() < 0.15:
        text = text[0].upper() + text[1:]
    return text


def pick_kind(rng, pos_share, neg_share):
    r = rng.random()
    if r < pos_share:
        return "positive"
    if r < pos_share + neg_share:
        return "negative"
    return "neutral"


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def training_set():
    rng = random.Random(20240101)
    rows = []
    label_id = {"positive": 0, "negative": 1, "neutral": 2}
    for _ in range(1500):
        kind = rng.choice(["positive", "negative", "neutral"])
        text = compose(rng, kind, GENERIC_PRODUCTS)
        rows.append({"text": text, "label": label_id[kind]})
    return rows


def eval_set():
    rng = random.Random(20240202)
    products = sorted({p for _, ps, _, _ in ENTITIES.values() for p in ps})
    rows = []
    for _ in range(500):
        kind = rng.choice(["positive", "negative", "neutral"])
        rows.append({"text": compose(rng, kind, products), "gold": kind})
    return rows


def demo_posts(name, spec, seed):
    display, products, pos_share, neg_share = spec
    rng = random.Random(seed)
    start = datetime(2024, 1, 1, tzinfo=timezone.utc)
    rows = []
    for i in range(50):
        created = start + timedelta(days=i * 30 / 50, minutes=rng.randrange(0, 600))
        author_created = created - timedelta(days=rng.randrange(200, 3000))
        age_days = (created - author_created).days
        kind = pick_kind(rng, pos_share, neg_share)
        rows.append({
            "id": f"{name}-{i + 1:04d}",
            "created_at": created.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "text": compose(rng, kind, products, display),
            "author_id": f"u{rng.randrange(10_000, 99_999)}",
            "author_created_at": author_created.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "author_post_count": rng.randrange(10, age_days * 20),
            "like_count": rng.randrange(3, 400),
            "reply_count": rng.randrange(2, 60),
            "is_retweet": False,
            "lang": "en",
        })
    return rows


def main():
    write_jsonl(ROOT / "models" / "reference_train.jsonl", training_set())
    write_jsonl(ROOT / "eval" / "labeled.jsonl", eval_set())
    for seed, (name, spec) in enumerate(ENTITIES.items(), start=7):
        write_jsonl(ROOT / "demo" / f"{name}.jsonl", demo_posts(name, spec, seed))


if __name__ == "__main__":
    main()
