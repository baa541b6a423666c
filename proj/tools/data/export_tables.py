#!/usr/bin/env python3
"""Regenerates the bundled lookup tables under data/resources/.

Needs the `vaderSentiment`, `emoji`, `wordfreq` and `msgpack` packages
(only for regeneration; the build never runs this).
"""
import gzip
import os
import re
import sys

import msgpack

OUT = os.path.join(os.path.dirname(__file__), "..", "..", "data", "resources")


def export_lexicon(vader_dir):
    seen = {}
    with open(os.path.join(vader_dir, "vader_lexicon.txt"), encoding="utf-8") as f:
        for line in f:
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 2:
                continue
            seen[parts[0].lower()] = float(parts[1])
    with open(os.path.join(OUT, "vader_lexicon.tsv"), "w", encoding="utf-8") as f:
        f.write("# token\tvalence (mean rating, from the vaderSentiment 3.3.2 lexicon, MIT)\n")
        for tok in sorted(seen):
            if "\t" in tok or " " in tok:
                continue
            f.write(f"{tok}\t{seen[tok]:g}\n")


def emoji_name(raw):
    name = raw.strip(":").lower()
    name = re.sub(r"[^a-z0-9]+", "_", name).strip("_")
    return f":{name}:"


def export_emoji():
    import emoji

    rows = {}
    for em, meta in emoji.EMOJI_DATA.items():
        cps = [ord(c) for c in em if ord(c) != 0xFE0F]
        key = "-".join(f"{c:X}" for c in cps)
        if not key:
            continue
        rows.setdefault(key, emoji_name(meta["en"]))
    with open(os.path.join(OUT, "emoji.tsv"), "w", encoding="utf-8") as f:
        f.write("# codepoints (hex, '-' joined, FE0F removed)\t:name:  (names from the emoji package)\n")
        for key in sorted(rows):
            f.write(f"{key}\t{rows[key]}\n")


def export_wordfreq(wordfreq_dir):
    data = msgpack.unpackb(
        gzip.open(os.path.join(wordfreq_dir, "data", "small_en.msgpack.gz")).read(), raw=False
    )
    word_re = re.compile(r"^[a-z]+$")
    out = {}
    for centibels, bucket in enumerate(data[1:]):
        count = round(1e9 * 10 ** (-centibels / 100.0))
        for w in bucket:
            if word_re.match(w) and w not in out and count > 0:
                out[w] = count
    with open(os.path.join(OUT, "wordfreq.tsv"), "w", encoding="utf-8") as f:
        f.write("# word\tcount per 1e9 tokens (wordfreq small_en, CC-BY-SA 4.0)\n")
        for w, c in sorted(out.items(), key=lambda kv: (-kv[1], kv[0])):
            f.write(f"{w}\t{c}\n")


if __name__ == "__main__":
    site = sys.argv[1] if len(sys.argv) > 1 else None
    if site:
        sys.path.insert(0, site)
    import importlib.util

    def package_dir(name):
        return os.path.dirname(importlib.util.find_spec(name).origin)

    os.makedirs(OUT, exist_ok=True)
    export_lexicon(package_dir("vaderSentiment"))
    export_emoji()
    export_wordfreq(package_dir("wordfreq"))
