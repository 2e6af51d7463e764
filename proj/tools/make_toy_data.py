"""Writes the bundled toy corpus and word vectors under data/."""

import json
import pathlib
import random

rng = random.Random(7)
out = pathlib.Path(__file__).resolve().parent.parent / "data"

SUBJECTS = [("the", "farmer"), ("a", "teacher"), ("the", "old", "man"),
            ("my", "sister"), ("the", "young", "doctor"), ("our", "team"),
            ("the", "company"), ("a", "small", "child")]
VERBS = [("bought", "buy"), ("sold", "sell"), ("painted", "paint"), ("found", "find"),
         ("built", "build"), ("carried", "carry"), ("opened", "open")]
AUX = ["can", "will", "might"]
OBJECTS = [("a", "house"), ("the", "red", "boat"), ("some", "bread"),
           ("the", "door"), ("an", "old", "car"), ("the", "box")]
PPS = [("in", "the", "city"), ("at", "the", "market"), ("for", "the", "school"),
       ("near", "the", "river")]
ADJ = {"old", "red", "young", "small"}
DET = {"the", "a", "an", "my", "our", "some"}


def noun_phrase(words, head_of_phrase):
    pos, heads, rels = [], [], []
    last = len(words) - 1
    for k, w in enumerate(words):
        if k == last:
            pos.append("NOUN")
            heads.append(None)
            rels.append(None)
        else:
            pos.append("ADJ" if w in ADJ else "DET")
            heads.append(("local", last))
            rels.append("amod" if w in ADJ else "det")
    return pos, heads, rels


def build(idx):
    tokens, pos, heads, rels = [], [], [], []
    spans = {}

    def add(words, p, h, r):
        base = len(tokens)
        tokens.extend(words)
        pos.extend(p)
        for hh in h:
            heads.append(base + hh[1] if hh is not None and hh[0] == "local" else hh)
        rels.extend(r)
        return base, len(tokens) - 1

    subj = list(rng.choice(SUBJECTS))
    if idx % 3 == 0:
        subj[0] = subj[0].capitalize()
    s0, s1 = add(subj, *noun_phrase(subj, None))
    aux = rng.choice(AUX) if idx % 2 == 0 else None
    if aux:
        a = add([aux], ["AUX"], [None], ["aux"])[0]
    past, base = rng.choice(VERBS)
    verb = base if aux else past
    v = add([verb], ["VERB"], [None], ["root"])[0]
    obj = list(rng.choice(OBJECTS))
    o0, o1 = add(obj, *noun_phrase(obj, None))
    pp = list(rng.choice(PPS)) if idx % 4 != 1 else None
    if pp:
        p0 = add(pp[:1], ["ADP"], [None], ["prep"])[0]
        n0, n1 = add(pp[1:], *noun_phrase(pp[1:], None))
    add(["."], ["PUNCT"], [None], ["punct"])

    heads[s1], rels[s1] = v, "nsubj"
    if aux:
        heads[a] = v
    heads[v] = -1
    heads[o1], rels[o1] = v, "dobj"
    if pp:
        heads[p0] = v
        heads[n1], rels[n1] = p0, "pobj"
    heads[-1] = v

    args = {"A0": [s0, s1], "A1": [o0, o1]}
    if pp:
        args["A2"] = [p0, n1]
    pred = [a if aux else v, v]
    conf = round(rng.uniform(0.3, 1.0), 3)
    return {"id": f"toy-{idx:02d}", "tokens": tokens, "pos": pos,
            "dep_head": heads, "dep_rel": rels,
            "extractions": [{"pred": pred, "args": args, "confidence": conf}]}


records = [{
    "id": "toy-purchase",
    "tokens": "Repeat customers can purchase luxury items at reduced prices .".split(),
    "pos": ["ADJ", "NOUN", "AUX", "VERB", "NOUN", "NOUN", "ADP", "ADJ", "NOUN", "PUNCT"],
    "dep_head": [1, 3, 3, -1, 5, 3, 3, 8, 6, 3],
    "dep_rel": ["amod", "nsubj", "aux", "root", "compound", "dobj", "prep", "amod",
                "pobj", "punct"],
    "extractions": [{"pred": [2, 3], "args": {"A0": [0, 1], "A1": [4, 5], "A2": [6, 8]},
                     "confidence": 0.92}],
}, {
    "id": "toy-james",
    "tokens": "James wants to sell his company".split(),
    "pos": ["PROPN", "VERB", "PART", "VERB", "PRON", "NOUN"],
    "dep_head": [1, -1, 3, 1, 5, 3],
    "dep_rel": ["nsubj", "root", "aux", "xcomp", "poss", "dobj"],
    "extractions": [
        {"pred": [1, 1], "args": {"A0": [0, 0], "A1": [2, 5]}, "confidence": 0.81},
        {"pred": [3, 3], "args": {"A0": [0, 0], "A1": [4, 5]}, "confidence": 0.388},
    ],
}]
records += [build(i) for i in range(18)]

with open(out / "toy_corpus.jsonl", "w") as f:
    for r in records:
        f.write(json.dumps(r) + "\n")

vocab = sorted({t.lower() for r in records for t in r["tokens"]})
with open(out / "toy_embeddings.txt", "w") as f:
    for w in vocab:
        f.write(w + " " + " ".join(f"{rng.gauss(0, 0.5):.4f}" for _ in range(100)) + "\n")
