"""Two-granularity evaluation: detection (utterance) and localization (word).

Accuracy and F1 come from hard decisions (parsed verdicts, or thresholded word
scores); AUC and EER come from continuous scores. EER uses a threshold sweep
over the unique scores with FAR(t) = P(neg score >= t) and FRR(t) =
P(pos score < t), linearly interpolating between adjacent operating points
when no exact crossing exists. AUC is the Mann-Whitney statistic: wins plus
half the ties over all positive/negative pairs.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from edittrace.answer_contract import EditResponse, Verdict


class DegenerateLabelsError(Exception):
    """Ranking metrics need at least one positive and one negative."""


class LengthMismatchError(Exception):
    pass


class MissingScoreError(Exception):
    pass


class ScoreRecord(NamedTuple):
    id: str
    score: float
    label: int  # 1 = edited / positive, 0 = bona fide / negative


@dataclass(frozen=True)
class LocalizationRecord:
    """Word-level scores and labels for one utterance, plus the text answers.

    ``predicted_words`` is None when the model's answer violated the output
    contract; such records keep their word trials but drop out of the
    exact-match rate.
    """

    id: str
    word_scores: tuple[float, ...]
    word_labels: tuple[int, ...]
    predicted_words: str | None = None
    truth_words: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "word_scores", tuple(self.word_scores))
        object.__setattr__(self, "word_labels", tuple(self.word_labels))
        if len(self.word_scores) != len(self.word_labels):
            raise LengthMismatchError(
                f"{self.id}: {len(self.word_scores)} scores vs {len(self.word_labels)} labels"
            )
        if not self.word_scores:
            raise ValueError(f"{self.id}: localization records need at least one word")


class Counts(NamedTuple):
    positives: int
    negatives: int
    trials: int


@dataclass(frozen=True)
class MetricsReport:
    granularity: str
    accuracy: float | None
    auc: float | None
    f1: float | None
    eer: float | None
    counts: Counts
    exact_match: float | None = None
    threshold: float | None = None
    violations: int = 0
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "accuracy": self.accuracy,
            "auc": self.auc,
            "f1": self.f1,
            "eer": self.eer,
            "exact_match": self.exact_match,
            "counts": {
                "positives": self.counts.positives,
                "negatives": self.counts.negatives,
                "trials": self.counts.trials,
                "violations": self.violations,
            },
            "threshold": self.threshold,
            "notes": self.notes,
        }


def _split_scores(records: Sequence[ScoreRecord]) -> tuple[list[float], list[float]]:
    pos = sorted(r.score for r in records if r.label == 1)
    neg = sorted(r.score for r in records if r.label == 0)
    if not pos or not neg:
        raise DegenerateLabelsError(
            f"need both classes, got {len(pos)} positives and {len(neg)} negatives"
        )
    return pos, neg


def eer(records: Sequence[ScoreRecord]) -> float:
    """Equal error rate from the FAR/FRR threshold sweep."""
    pos, neg = _split_scores(records)
    n_pos, n_neg = len(pos), len(neg)

    thresholds = sorted(set(pos) | set(neg))
    # (false-accept count, false-reject count) per operating point; the final
    # sentinel is a threshold above every score.
    points = [(n_neg - bisect_left(neg, t), bisect_left(pos, t)) for t in thresholds]
    points.append((0, n_pos))

    prev_fa, prev_fr = points[0]
    for fa, fr in points:
        sign = fa * n_pos - fr * n_neg  # sign of FAR - FRR, exactly
        if sign == 0:
            return fa / n_neg
        if sign < 0:
            far1, frr1 = prev_fa / n_neg, prev_fr / n_pos
            far2, frr2 = fa / n_neg, fr / n_pos
            t = (far1 - frr1) / ((far1 - frr1) + (frr2 - far2))
            return far1 + t * (far2 - far1)
        prev_fa, prev_fr = fa, fr
    raise AssertionError("sweep must cross FAR = FRR")  # pragma: no cover


def auc(records: Sequence[ScoreRecord]) -> float:
    """Mann-Whitney AUC: (wins + ties/2) / (positives * negatives)."""
    pos, neg = _split_scores(records)
    events = sorted([(s, 1) for s in pos] + [(s, 0) for s in neg])
    wins = ties = 0
    neg_below = 0
    i = 0
    while i < len(events):
        j = i
        group_pos = group_neg = 0
        score = events[i][0]
        while j < len(events) and events[j][0] == score:
            if events[j][1] == 1:
                group_pos += 1
            else:
                group_neg += 1
            j += 1
        wins += group_pos * neg_below
        ties += group_pos * group_neg
        neg_below += group_neg
        i = j
    return (2 * wins + ties) / (2 * len(pos) * len(neg))


def f1_accuracy(records: Sequence[ScoreRecord], threshold: float = 0.5) -> tuple[float, float]:
    """(accuracy, F1) after thresholding: predict positive when score >= threshold."""
    tp = fp = tn = fn = 0
    for rec in records:
        predicted = 1 if rec.score >= threshold else 0
        if predicted and rec.label:
            tp += 1
        elif predicted:
            fp += 1
        elif rec.label:
            fn += 1
        else:
            tn += 1
    total = tp + fp + tn + fn
    if total == 0:
        raise ValueError("no records")
    accuracy = (tp + tn) / total
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return accuracy, f1


def _verdict_confusion(verdicts: Sequence[EditResponse | None], truth: Sequence[int]):
    tp = fp = tn = fn = 0
    for verdict, label in zip(verdicts, truth):
        if verdict is None:
            continue
        predicted = 1 if verdict.verdict is Verdict.EDITED else 0
        if predicted and label:
            tp += 1
        elif predicted:
            fp += 1
        elif label:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


def detection_eval(
    verdicts: Sequence[EditResponse | None],
    scores: Sequence[float | None],
    truth: Sequence[int],
) -> MetricsReport:
    """Utterance-level report.

    Accuracy/F1 come from the parsed verdicts (threshold-free); AUC/EER come
    from the continuous utterance scores. A None verdict marks a contract
    violation: it is excluded from accuracy/F1 and counted. A None score
    raises MissingScoreError. Degenerate labels leave AUC/EER as None.
    """
    if not truth:
        raise ValueError("no trials")
    if not len(verdicts) == len(scores) == len(truth):
        raise ValueError("verdicts, scores, and truth must be aligned")
    for i, score in enumerate(scores):
        if score is None:
            raise MissingScoreError(f"trial {i} has no continuous score")

    records = [ScoreRecord(str(i), s, t) for i, (s, t) in enumerate(zip(scores, truth))]
    try:
        auc_value, eer_value = auc(records), eer(records)
    except DegenerateLabelsError:
        auc_value = eer_value = None

    tp, fp, tn, fn = _verdict_confusion(verdicts, truth)
    judged = tp + fp + tn + fn
    if judged:
        accuracy = (tp + tn) / judged
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    else:
        accuracy = f1 = None

    return MetricsReport(
        granularity="detection",
        accuracy=accuracy,
        auc=auc_value,
        f1=f1,
        eer=eer_value,
        counts=Counts(sum(truth), len(truth) - sum(truth), len(truth)),
        violations=sum(1 for v in verdicts if v is None),
        notes="accuracy/f1 from parsed verdicts; auc/eer from continuous utterance scores",
    )


def _normalize_words(text: str) -> str:
    return " ".join(text.split())


def localization_eval(
    records: Sequence[LocalizationRecord],
    threshold: float = 0.5,
) -> MetricsReport:
    """Word-level report over trials pooled across utterances.

    Every (word score, word label) pair is one trial for the ranking and
    thresholded metrics. The exact-match rate is the fraction of utterances
    whose predicted words equal the truth words after whitespace
    normalization, over utterances with a parseable prediction.
    """
    if not records:
        raise ValueError("no records")
    pooled = [
        ScoreRecord(f"{rec.id}:{i}", score, label)
        for rec in records
        for i, (score, label) in enumerate(zip(rec.word_scores, rec.word_labels))
    ]
    try:
        auc_value, eer_value = auc(pooled), eer(pooled)
    except DegenerateLabelsError:
        auc_value = eer_value = None
    accuracy, f1 = f1_accuracy(pooled, threshold)

    judged = [rec for rec in records if rec.predicted_words is not None]
    if judged:
        matches = sum(
            1
            for rec in judged
            if _normalize_words(rec.predicted_words) == _normalize_words(rec.truth_words)
        )
        exact = matches / len(judged)
    else:
        exact = None

    positives = sum(r.label for r in pooled)
    return MetricsReport(
        granularity="localization",
        accuracy=accuracy,
        auc=auc_value,
        f1=f1,
        eer=eer_value,
        counts=Counts(positives, len(pooled) - positives, len(pooled)),
        exact_match=exact,
        threshold=threshold,
        violations=len(records) - len(judged),
        notes="word trials pooled across utterances; exact match over parseable predictions",
    )
