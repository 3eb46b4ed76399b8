"""Synthetic SemEval-format corpora for tests.

Each directed label gets a unique cue token between the entities, so the
corpora are perfectly learnable; Other sentences carry a filler instead of
a cue. Generation is fully seeded.
"""

import numpy as np

from relclass.corpus import LABELS, OTHER_ID

NOUNS = ("gadget", "widget", "engine", "portal", "basket", "marble", "signal", "cloud")
FILLERS = ("the", "a", "old", "small", "quiet", "rusty", "green", "heavy")


def cue_token(label_id: int) -> str:
    return f"cue{label_id:02d}"


def make_sentences(n: int, seed: int, start_id: int = 1, label_ids=None):
    """Raw SemEval text plus the list of label ids used, in order."""
    rng = np.random.default_rng(seed)
    records = []
    used = []
    for k in range(n):
        sid = start_id + k
        if label_ids is not None:
            label_id = label_ids[k % len(label_ids)]
        else:
            label_id = int(rng.integers(0, OTHER_ID + 1))
        used.append(label_id)
        noun1 = NOUNS[int(rng.integers(len(NOUNS)))]
        noun2 = NOUNS[int(rng.integers(len(NOUNS)))]
        middle = (
            cue_token(label_id)
            if label_id != OTHER_ID
            else FILLERS[int(rng.integers(len(FILLERS)))]
        )
        left = [FILLERS[int(rng.integers(len(FILLERS)))] for _ in range(int(rng.integers(0, 4)))]
        right = [FILLERS[int(rng.integers(len(FILLERS)))] for _ in range(int(rng.integers(0, 4)))]
        sentence = " ".join(
            left + [f"<e1>{noun1}</e1>", middle, f"<e2>{noun2}</e2>"] + right
        )
        records.append(f'{sid}\t"{sentence}."\n{LABELS[label_id]}\n')
    return "\n".join(records), used


def make_corpus_text(n: int, seed: int, start_id: int = 1) -> str:
    text, _ = make_sentences(n, seed, start_id)
    return text


def to_semeval(sentence) -> str:
    """Re-serialize a LabeledSentence as a tagged SemEval record."""
    toks = list(sentence.tokens)
    (a1, b1), (a2, b2) = sentence.e1_span, sentence.e2_span
    tagged = (
        toks[:a1]
        + ["<e1>" + " ".join(toks[a1 : b1 + 1]) + "</e1>"]
        + toks[b1 + 1 : a2]
        + ["<e2>" + " ".join(toks[a2 : b2 + 1]) + "</e2>"]
        + toks[b2 + 1 :]
    )
    label = sentence.label if sentence.label is not None else ""
    record = f'{sentence.id}\t"{" ".join(tagged)}"\n'
    return record + (f"{label}\n" if sentence.label is not None else "")
