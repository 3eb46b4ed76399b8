"""SemEval 2010 Task 8 corpus handling.

Parses the official distribution format (``id TAB "sentence with <e1>/<e2>
tags"``, relation on the next line, optional ``Comment:`` line, blank line
between records) into :class:`LabeledSentence` objects, and owns the label
set, the tokenizer, the vocabulary and the train/dev split.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

FAMILIES = (
    "Cause-Effect",
    "Component-Whole",
    "Content-Container",
    "Entity-Destination",
    "Entity-Origin",
    "Instrument-Agency",
    "Member-Collection",
    "Message-Topic",
    "Product-Producer",
)

OTHER = "Other"

# Label ids: each family contributes (e1,e2) then (e2,e1); Other is last.
LABELS = tuple(
    f"{fam}({d})" for fam in FAMILIES for d in ("e1,e2", "e2,e1")
) + (OTHER,)
N_LABELS = len(LABELS)          # 19
N_DIRECTED = N_LABELS - 1       # 18, the ranking scorer has no Other row
OTHER_ID = N_LABELS - 1

_LABEL_TO_ID = {s: i for i, s in enumerate(LABELS)}

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
INDICATOR_TOKENS = ("<e1>", "</e1>", "<e2>", "</e2>")


class ParseError(ValueError):
    """Raised for malformed corpus input; message names the offending record."""


@dataclass(frozen=True)
class RelationLabel:
    """One of the 19 labels: 9 families x 2 directions, plus Other."""

    family: str
    direction: Optional[str]  # "e1,e2" | "e2,e1" | None (Other only)

    def __post_init__(self):
        if self.family == OTHER:
            if self.direction is not None:
                raise ValueError("Other carries no direction")
        elif self.family in FAMILIES:
            if self.direction not in ("e1,e2", "e2,e1"):
                raise ValueError(f"bad direction {self.direction!r} for {self.family}")
        else:
            raise ValueError(f"unknown relation family {self.family!r}")

    def __str__(self) -> str:
        if self.family == OTHER:
            return OTHER
        return f"{self.family}({self.direction})"

    @classmethod
    def from_string(cls, text: str) -> "RelationLabel":
        text = text.strip()
        if text == OTHER:
            return cls(OTHER, None)
        if text.endswith("(e1,e2)") or text.endswith("(e2,e1)"):
            fam, direction = text[:-7], text[-6:-1]
            if fam in FAMILIES:
                return cls(fam, direction)
        raise ParseError(f"unknown relation string {text!r}")


def label_to_id(label: RelationLabel) -> int:
    return _LABEL_TO_ID[str(label)]


def id_to_label(label_id: int) -> RelationLabel:
    if not 0 <= label_id < N_LABELS:
        raise ValueError(f"label id {label_id} out of range")
    return RelationLabel.from_string(LABELS[label_id])


@dataclass
class LabeledSentence:
    """A tokenized sentence with its two entity spans and relation label.

    Spans are inclusive token-index ranges; e1 always precedes e2 and the
    spans are disjoint. ``label`` is None only for unlabeled prediction input.
    """

    id: int
    tokens: list
    e1_span: tuple  # (start, end) inclusive
    e2_span: tuple
    label: Optional[RelationLabel]

    def validate(self) -> None:
        n = len(self.tokens)
        for name, (a, b) in (("e1", self.e1_span), ("e2", self.e2_span)):
            if not (0 <= a <= b < n):
                raise ValueError(f"sentence {self.id}: {name} span {(a, b)} out of bounds")
        if self.e1_span[1] >= self.e2_span[0]:
            raise ValueError(f"sentence {self.id}: e1 must end before e2 begins")
        for tok in self.tokens:
            if "<e1>" in tok or "<e2>" in tok or "</e1>" in tok or "</e2>" in tok:
                raise ValueError(f"sentence {self.id}: residual markup in token {tok!r}")


_PUNCT = set(string.punctuation)


def _peel(token: str) -> list:
    """Detach leading/trailing punctuation characters as separate tokens."""
    lead = []
    while len(token) > 1 and token[0] in _PUNCT:
        lead.append(token[0])
        token = token[1:]
    trail = []
    while len(token) > 1 and token[-1] in _PUNCT:
        trail.append(token[-1])
        token = token[:-1]
    return lead + [token] + trail[::-1]


def _tokenize_plain(text: str) -> list:
    out = []
    for raw in text.lower().split():
        out.extend(_peel(raw))
    return out


def tokenize(raw_sentence: str):
    """Tokenize a tagged sentence into (tokens, e1_span, e2_span).

    Lowercases, splits on whitespace, detaches leading/trailing punctuation;
    internal hyphens survive. Tag boundaries always act as token boundaries.
    """
    segments = _split_tagged(raw_sentence)
    before, e1_text, between, e2_text, after = segments
    tokens = _tokenize_plain(before)
    e1_toks = _tokenize_plain(e1_text)
    if not e1_toks:
        raise ParseError("empty e1 entity")
    e1_span = (len(tokens), len(tokens) + len(e1_toks) - 1)
    tokens += e1_toks
    tokens += _tokenize_plain(between)
    e2_toks = _tokenize_plain(e2_text)
    if not e2_toks:
        raise ParseError("empty e2 entity")
    e2_span = (len(tokens), len(tokens) + len(e2_toks) - 1)
    tokens += e2_toks
    tokens += _tokenize_plain(after)
    return tokens, e1_span, e2_span


def _split_tagged(raw: str):
    """Split a tagged sentence into the five text segments around the tags."""
    positions = {}
    for tag in ("<e1>", "</e1>", "<e2>", "</e2>"):
        first = raw.find(tag)
        if first < 0:
            raise ParseError(f"missing {tag} tag")
        if raw.find(tag, first + len(tag)) >= 0:
            raise ParseError(f"duplicate {tag} tag")
        positions[tag] = first
    o1, c1, o2, c2 = (positions[t] for t in ("<e1>", "</e1>", "<e2>", "</e2>"))
    if not (o1 < c1 < o2 < c2):
        raise ParseError("entity tags nested or out of order (expected e1 before e2)")
    return (
        raw[:o1],
        raw[o1 + 4 : c1],
        raw[c1 + 5 : o2],
        raw[o2 + 4 : c2],
        raw[c2 + 5 :],
    )


def parse_semeval_file(text: str, require_labels: bool = True) -> list:
    """Parse raw SemEval distribution text into LabeledSentences, in order."""
    sentences = []
    seen_ids = set()
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        head, tab, rest = line.partition("\t")
        if not tab or not head.strip().isdigit():
            raise ParseError(f"line {i + 1}: expected 'id<TAB>\"sentence\"', got {line!r}")
        sent_id = int(head)
        if sent_id in seen_ids:
            raise ParseError(f"line {i + 1}: duplicate sentence id {sent_id}")
        seen_ids.add(sent_id)
        raw = rest.strip()
        if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
            raw = raw[1:-1]
        try:
            tokens, e1_span, e2_span = tokenize(raw)
        except ParseError as exc:
            raise ParseError(f"sentence {sent_id} (line {i + 1}): {exc}") from None
        i += 1
        label = None
        if i < len(lines) and lines[i].strip() and "\t" not in lines[i]:
            candidate = lines[i].strip()
            if not candidate.startswith("Comment"):
                try:
                    label = RelationLabel.from_string(candidate)
                except ParseError:
                    raise ParseError(
                        f"sentence {sent_id} (line {i + 1}): unknown relation "
                        f"string {candidate!r}"
                    ) from None
                i += 1
        if i < len(lines) and lines[i].strip().startswith("Comment"):
            i += 1
        if label is None and require_labels:
            raise ParseError(f"sentence {sent_id}: missing relation label")
        sent = LabeledSentence(sent_id, tokens, e1_span, e2_span, label)
        sent.validate()
        sentences.append(sent)
    return sentences


def split_train_dev(sentences: list, dev_size: int, seed: int):
    """Seeded uniform dev sample; both parts keep the original corpus order."""
    if dev_size >= len(sentences):
        raise ValueError(f"dev_size {dev_size} >= corpus size {len(sentences)}")
    if dev_size < 0:
        raise ValueError("dev_size must be >= 0")
    rng = np.random.default_rng(seed)
    dev_idx = set(rng.choice(len(sentences), size=dev_size, replace=False).tolist())
    train = [s for i, s in enumerate(sentences) if i not in dev_idx]
    dev = [s for i, s in enumerate(sentences) if i in dev_idx]
    return train, dev


class Vocabulary:
    """Bijective token<->index map with reserved PADDING and UNKNOWN entries."""

    def __init__(self, tokens: Iterable[str]):
        self.id_to_token = list(tokens)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")
        self.pad_id = self.token_to_id[PAD_TOKEN]
        self.unk_id = self.token_to_id[UNK_TOKEN]

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def lookup(self, token: str) -> int:
        """Index of token, or the UNKNOWN index for out-of-vocabulary tokens."""
        return self.token_to_id.get(token, self.unk_id)


def build_vocabulary(
    train_sentences: list,
    pretrained_tokens: Optional[set] = None,
    include_indicators: bool = False,
) -> Vocabulary:
    """Vocabulary over the training tokens (plus optional pretrained tokens).

    Reserved entries come first (PADDING at index 0, UNKNOWN at 1, then the
    four position-indicator tokens when enabled); corpus tokens follow in
    sorted order so the mapping is independent of corpus ordering.
    """
    reserved = [PAD_TOKEN, UNK_TOKEN]
    if include_indicators:
        reserved += list(INDICATOR_TOKENS)
    seen = set()
    for sent in train_sentences:
        seen.update(sent.tokens)
    if pretrained_tokens:
        seen.update(pretrained_tokens)
    seen -= set(reserved)
    return Vocabulary(reserved + sorted(seen))


def write_corpus_cache(sentences: list) -> str:
    """Serialize to the line-delimited cache format (one record per line)."""
    lines = []
    for s in sentences:
        if s.label is None:
            raise ValueError(f"sentence {s.id}: cannot cache unlabeled sentence")
        lines.append(
            "\t".join(
                (
                    str(s.id),
                    str(s.label),
                    " ".join(s.tokens),
                    f"{s.e1_span[0]}:{s.e1_span[1]}",
                    f"{s.e2_span[0]}:{s.e2_span[1]}",
                )
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def read_corpus_cache(text: str) -> list:
    sentences = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ParseError(f"cache line {lineno}: expected 5 fields, got {len(fields)}")
        sid, label_str, token_str, s1, s2 = fields
        e1 = tuple(int(v) for v in s1.split(":"))
        e2 = tuple(int(v) for v in s2.split(":"))
        sent = LabeledSentence(
            int(sid), token_str.split(" "), e1, e2, RelationLabel.from_string(label_str)
        )
        sent.validate()
        sentences.append(sent)
    return sentences
