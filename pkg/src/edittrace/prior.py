"""Word-level tampering priors.

Aggregates frame-level detector probabilities over forced-alignment word
boundaries and renders the structured prior line injected into prompts.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Iterable, Sequence

PRIOR_HEADER = "Word-level editing probabilities from an acoustic detector:"


class AggregationMethod(str, Enum):
    MEAN = "mean"
    MAX = "max"


class ScoreReduction(str, Enum):
    MAX = "max"
    MEAN = "mean"


class PriorError(Exception):
    pass


class EmptyWordError(PriorError):
    """A word boundary captured no frame centers."""


class UnsortedBoundariesError(PriorError):
    pass


class OverlappingBoundariesError(PriorError):
    pass


@dataclass(frozen=True)
class FrameProbSeq:
    """Per-frame tampering probabilities for one utterance."""

    utterance_id: str
    frame_shift_ms: float
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if self.frame_shift_ms <= 0:
            raise ValueError("frame_shift_ms must be positive")
        if any(not 0.0 <= p <= 1.0 for p in self.probs):
            raise ValueError("frame probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class WordBoundary:
    word: str
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if not self.word:
            raise ValueError("boundary word must be non-empty")
        if not 0.0 <= self.start_s < self.end_s:
            raise ValueError(f"need 0 <= start < end, got [{self.start_s}, {self.end_s})")


@dataclass(frozen=True)
class WordPrior:
    word: str
    probability: float
    frame_count: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")


def aggregate(
    frames: FrameProbSeq,
    boundaries: Sequence[WordBoundary],
    method: AggregationMethod = AggregationMethod.MEAN,
) -> list[WordPrior]:
    """Pool frame probabilities into one probability per word.

    Frame i has its center at (i + 0.5) * frame_shift; a frame belongs to the
    boundary whose half-open interval [start, end) contains that center.
    Frames outside every boundary (silence) are ignored. Boundaries must be
    sorted by start and non-overlapping, and each must capture at least one
    frame center.
    """
    for prev, cur in zip(boundaries, boundaries[1:]):
        if cur.start_s < prev.start_s:
            raise UnsortedBoundariesError(
                f"boundary {cur.word!r} starts before {prev.word!r}"
            )
        if cur.start_s < prev.end_s:
            raise OverlappingBoundariesError(
                f"boundary {cur.word!r} overlaps {prev.word!r}"
            )

    shift_s = frames.frame_shift_ms / 1000.0
    centers = [(i + 0.5) * shift_s for i in range(len(frames.probs))]

    priors: list[WordPrior] = []
    for boundary in boundaries:
        lo = bisect_left(centers, boundary.start_s)
        hi = bisect_left(centers, boundary.end_s)
        chunk = frames.probs[lo:hi]
        if not chunk:
            raise EmptyWordError(
                f"word {boundary.word!r} [{boundary.start_s}, {boundary.end_s}) "
                f"captures no frame centers (utterance {frames.utterance_id!r})"
            )
        if method is AggregationMethod.MEAN:
            value = sum(chunk) / len(chunk)
        else:
            value = max(chunk)
        priors.append(WordPrior(boundary.word, value, len(chunk)))
    return priors


def _format_prob(p: float) -> str:
    # Half-up rounding on the decimal value, not IEEE round-half-even.
    return str(Decimal(str(p)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def format_prior_prompt(priors: Sequence[WordPrior]) -> str:
    """Render the structured prior line, e.g. ``... A(p=0.10) B(p=0.90)``.

    One ``word(p=0.XX)`` entry per word in utterance order, two decimals,
    half-up rounding. Byte-deterministic.
    """
    if not priors:
        raise ValueError("priors must be non-empty")
    entries = " ".join(f"{p.word}(p={_format_prob(p.probability)})" for p in priors)
    return f"{PRIOR_HEADER} {entries}"


def utterance_score(
    priors: Sequence[WordPrior],
    reduction: ScoreReduction = ScoreReduction.MAX,
) -> float:
    """Collapse word priors into one utterance-level tampering score."""
    if not priors:
        raise ValueError("priors must be non-empty")
    values = [p.probability for p in priors]
    if reduction is ScoreReduction.MAX:
        return max(values)
    return sum(values) / len(values)


def boundaries_from_ctm(lines: Iterable[str]) -> dict[str, list[WordBoundary]]:
    """Parse CTM lines (``id channel start dur word``) into per-utterance boundaries."""
    out: dict[str, list[WordBoundary]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith(";;"):
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ValueError(f"CTM line {lineno}: expected 5 fields, got {len(fields)}")
        utt, _channel, start, dur, word = fields
        start_s = float(start)
        out.setdefault(utt, []).append(WordBoundary(word, start_s, start_s + float(dur)))
    return out
