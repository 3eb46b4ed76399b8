"""Scoring with the official SemEval semantics, significance testing, and
the voting ensemble.

Macro-F1 is the unweighted mean of the 9 relation-family F1 scores: a true
positive needs an exact directed-label match, the precision denominator
counts predictions in the family regardless of direction, recall counts
gold members, and Other never contributes a family score (it only absorbs
errors). Families absent from both gold and predictions are excluded from
the mean so desk-scale subsets stay well-defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import (
    FAMILIES,
    LABELS,
    N_LABELS,
    ParseError,
    RelationLabel,
    label_to_id,
)


@dataclass
class FamilyScore:
    precision: float
    recall: float
    f1: float
    true_positives: int
    n_predicted: int
    n_gold: int


@dataclass
class EvalReport:
    per_family: dict                 # family name -> FamilyScore (present families)
    macro_f1: float                  # percent, mean over present families
    accuracy: float                  # percent exact-label matches, Other included
    confusion: np.ndarray            # 19 x 19, rows = gold, cols = predicted
    n_sentences: int
    absent_families: tuple = field(default_factory=tuple)


def macro_f1(gold: dict, predictions: dict) -> EvalReport:
    """Score predictions against gold; both map sentence id -> RelationLabel."""
    if set(gold) != set(predictions):
        missing = sorted(set(gold) ^ set(predictions))[:5]
        raise ValueError(f"gold/prediction id mismatch (e.g. ids {missing})")
    if not gold:
        raise ValueError("empty prediction set")
    confusion = np.zeros((N_LABELS, N_LABELS), dtype=np.int64)
    correct = 0
    for sid in gold:
        g, p = gold[sid], predictions[sid]
        confusion[label_to_id(g), label_to_id(p)] += 1
        if g == p:
            correct += 1
    per_family = {}
    absent = []
    for family in FAMILIES:
        tp = sum(
            1
            for sid in gold
            if gold[sid].family == family and predictions[sid] == gold[sid]
        )
        n_pred = sum(1 for sid in gold if predictions[sid].family == family)
        n_gold = sum(1 for sid in gold if gold[sid].family == family)
        if n_pred == 0 and n_gold == 0:
            absent.append(family)
            continue
        precision = 100.0 * tp / n_pred if n_pred else 0.0
        recall = 100.0 * tp / n_gold if n_gold else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        per_family[family] = FamilyScore(precision, recall, f1, tp, n_pred, n_gold)
    macro = (
        sum(s.f1 for s in per_family.values()) / len(per_family) if per_family else 0.0
    )
    return EvalReport(
        per_family=per_family,
        macro_f1=macro,
        accuracy=100.0 * correct / len(gold),
        confusion=confusion,
        n_sentences=len(gold),
        absent_families=tuple(absent),
    )


def significance_z_test(predictions_a: dict, predictions_b: dict, gold: dict):
    """Two-proportion z-test on per-sentence exact-match correctness of the
    two systems (pooled variance, two-tailed). Returns (z, p_value)."""
    if set(predictions_a) != set(gold) or set(predictions_b) != set(gold):
        raise ValueError("both prediction sets must cover exactly the gold ids")
    n = len(gold)
    if n == 0:
        raise ValueError("cannot test significance on zero sentences")
    correct_a = sum(1 for sid in gold if predictions_a[sid] == gold[sid])
    correct_b = sum(1 for sid in gold if predictions_b[sid] == gold[sid])
    p_a, p_b = correct_a / n, correct_b / n
    pooled = (correct_a + correct_b) / (2.0 * n)
    denom = math.sqrt(pooled * (1.0 - pooled) * (2.0 / n)) if 0.0 < pooled < 1.0 else 0.0
    if denom == 0.0:
        z = 0.0 if p_a == p_b else math.inf
    else:
        z = (p_a - p_b) / denom
    p_value = math.erfc(abs(z) / math.sqrt(2.0)) if math.isfinite(z) else 0.0
    return z, p_value


def ensemble_vote(prediction_sets: list, seed: int = 0) -> dict:
    """Per-sentence plurality over the prediction sets; ties are broken by a
    seeded uniform choice among the tied labels."""
    if not prediction_sets:
        raise ValueError("need at least one prediction set")
    ids = set(prediction_sets[0])
    for preds in prediction_sets[1:]:
        if set(preds) != ids:
            raise ValueError("prediction sets cover different sentence ids")
    rng = np.random.default_rng(seed)
    out = {}
    for sid in sorted(ids):
        counts = {}
        for preds in prediction_sets:
            key = str(preds[sid])
            counts[key] = counts.get(key, 0) + 1
        top = max(counts.values())
        tied = sorted(label for label, c in counts.items() if c == top)
        choice = tied[0] if len(tied) == 1 else tied[int(rng.integers(len(tied)))]
        out[sid] = RelationLabel.from_string(choice)
    return out


# ---------------------------------------------------------------------------
# Prediction / gold file I/O


def write_predictions(predictions: dict) -> str:
    """One line per sentence: id TAB official label spelling, sorted by id."""
    return "".join(f"{sid}\t{predictions[sid]}\n" for sid in sorted(predictions))


def read_predictions(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"prediction line {lineno}: expected 'id<TAB>label'")
        sid = int(parts[0])
        if sid in out:
            raise ParseError(f"prediction line {lineno}: duplicate id {sid}")
        out[sid] = RelationLabel.from_string(parts[1])
    return out


def read_gold_file(text: str) -> dict:
    """Gold labels from either a SemEval corpus file or an id TAB label file
    (auto-detected on the first record's shape)."""
    stripped = text.lstrip()
    first = stripped.splitlines()[0] if stripped else ""
    fields = first.split("\t")
    if len(fields) == 2 and not fields[1].lstrip().startswith('"'):
        return read_predictions(text)
    from .corpus import parse_semeval_file

    return {s.id: s.label for s in parse_semeval_file(text)}


def format_report(report: EvalReport) -> str:
    """Aligned text table plus a machine-readable key/value block."""
    lines = [f"{'family':<20} {'P':>7} {'R':>7} {'F1':>7} {'gold':>5} {'pred':>5}"]
    for family in FAMILIES:
        score = report.per_family.get(family)
        if score is None:
            continue
        lines.append(
            f"{family:<20} {score.precision:>7.2f} {score.recall:>7.2f} "
            f"{score.f1:>7.2f} {score.n_gold:>5} {score.n_predicted:>5}"
        )
    lines.append("")
    lines.append(f"macro_f1 = {report.macro_f1:.4f}")
    lines.append(f"accuracy = {report.accuracy:.4f}")
    lines.append(f"n_sentences = {report.n_sentences}")
    if report.absent_families:
        lines.append(f"absent_families = {','.join(report.absent_families)}")
    return "\n".join(lines) + "\n"
