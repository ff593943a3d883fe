#!/usr/bin/env python3
"""Writes the synthetic dual-encoder fixture under data/synthetic and prints
oracle accuracies for it.

Image features are class-name embeddings plus Gaussian noise, stored as
float32 in the GLOVEMB1 layout. The oracle re-reads the float32 values and
classifies with unit(mean(unit(text))) prototypes, exactly as documented.
"""
import json
import math
import os
import struct
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(__file__))
from oracles import mean_embedding, surrogate_embed  # noqa: E402

ROOT = os.path.join(os.path.dirname(__file__), "..", "..", "data", "synthetic")
CLASSES = ["bird", "dog", "cat", "flower", "car", "plane"]
DIM = 16


def write_emb(path, rows):
    with open(path, "wb") as f:
        f.write(b"GLOVEMB1")
        f.write(struct.pack("<II", len(rows), DIM))
        for r in rows:
            f.write(struct.pack("<%df" % DIM, *r))


def read_emb(path):
    with open(path, "rb") as f:
        data = f.read()
    assert data[:8] == b"GLOVEMB1"
    count, dim = struct.unpack("<II", data[8:16])
    vals = struct.unpack("<%df" % (count * dim), data[16:])
    return [list(vals[i * dim:(i + 1) * dim]) for i in range(count)]


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def make_split(rng, per_class, noise):
    rows, labels = [], []
    for c, name in enumerate(CLASSES):
        base = np.array(surrogate_embed(name, DIM))
        for _ in range(per_class):
            rows.append((base + rng.normal(0.0, noise, DIM)).astype(np.float32).tolist())
            labels.append(c)
    return rows, labels


def predict(prompts, rows):
    protos = []
    for name in CLASSES:
        acc = [0.0] * DIM
        for p in prompts:
            t = unit(mean_embedding(p.replace("{}", name), DIM))
            acc = [a + b for a, b in zip(acc, t)]
        protos.append(unit([a / len(prompts) for a in acc]))
    preds = []
    for r in rows:
        img = unit(r)
        sims = [sum(a * b for a, b in zip(p, img)) for p in protos]
        preds.append(sims.index(max(sims)))
    return preds


def main():
    os.makedirs(ROOT, exist_ok=True)
    rng = np.random.default_rng(2024)
    with open(os.path.join(ROOT, "classes.txt"), "w") as f:
        f.write("\n".join(CLASSES) + "\n")
    for split, per_class in (("train", 1), ("test", 5)):
        rows, labels = make_split(rng, per_class, 0.35)
        write_emb(os.path.join(ROOT, split + ".emb"), rows)
        manifest = {
            "name": "synthetic objects",
            "description": "recognize six everyday object categories",
            "class_names": "classes.txt",
            "embeddings": split + ".emb",
            "examples": [{"row": i, "label": y} for i, y in enumerate(labels)],
        }
        with open(os.path.join(ROOT, split + ".json"), "w") as f:
            json.dump(manifest, f, indent=2)
            f.write("\n")

    test_rows = read_emb(os.path.join(ROOT, "test.emb"))
    labels = [c for c in range(len(CLASSES)) for _ in range(5)]
    for prompts in (["a photo of a {}"], ["a photo of a {}", "the {} in the sky"]):
        preds = predict(prompts, test_rows)
        correct = sum(int(p == y) for p, y in zip(preds, labels))
        per_class = [sum(int(preds[i] == c) for i in range(len(labels)) if labels[i] == c)
                     for c in range(len(CLASSES))]
        print(prompts, f"{correct}/{len(labels)}", per_class)


if __name__ == "__main__":
    main()
