"""Word-level edit planning.

Diffs a source sentence against an edited sentence, classifies the change as
one atomic add/delete/modify, validates it against the corpus-construction
constraints, and falls back to a rule-based synthetic edit when a language
model cannot produce a valid edit within the retry budget.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from edittrace.llm_client import ChatRequest, LlmClient

logger = logging.getLogger(__name__)


class Language(str, Enum):
    ENGLISH = "en"
    CHINESE = "zh"


class EditOperation(str, Enum):
    ADD = "add"
    DELETE = "delete"
    MODIFY = "modify"


class Violation(str, Enum):
    MULTI_REGION = "multi_region"
    BOUNDARY_DELETION = "boundary_deletion"
    LENGTH_MISMATCH = "length_mismatch"
    NO_EDIT = "no_edit"
    EMPTY_RESULT = "empty_result"


class EditPlanError(Exception):
    """Base class for edit-plan failures."""


class MultiRegionError(EditPlanError):
    pass


class NoEditError(EditPlanError):
    pass


class RegionOutOfBoundsError(EditPlanError):
    pass


class RemovedMismatchError(EditPlanError):
    pass


class SourceTooShortError(EditPlanError):
    pass


def join_tokens(tokens: Sequence[str], language: Language) -> str:
    """Render tokens back to text: spaces for English, concatenation for Chinese."""
    sep = " " if language is Language.ENGLISH else ""
    return sep.join(tokens)


@dataclass(frozen=True)
class TokenSequence:
    """An ordered token sequence tied to the tokenization rules of its language."""

    tokens: tuple[str, ...]
    language: Language = Language.ENGLISH

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if any(tok == "" for tok in self.tokens):
            raise ValueError("token sequences must not contain empty strings")

    @classmethod
    def from_text(cls, text: str, language: Language = Language.ENGLISH) -> "TokenSequence":
        """Tokenize text: whitespace words for English, single characters for Chinese."""
        stripped = text.strip()
        if language is Language.ENGLISH:
            tokens = tuple(stripped.split())
        else:
            tokens = tuple(stripped)
        return cls(tokens, language)

    @property
    def text(self) -> str:
        return join_tokens(self.tokens, self.language)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class DiffHunk:
    """One contiguous differing region: source span [src_start, src_end) maps to
    target span [tgt_start, tgt_end). At least one side is non-empty."""

    src_start: int
    src_end: int
    tgt_start: int
    tgt_end: int

    def __post_init__(self) -> None:
        if not (0 <= self.src_start <= self.src_end and 0 <= self.tgt_start <= self.tgt_end):
            raise ValueError(f"malformed hunk spans: {self}")
        if self.src_start == self.src_end and self.tgt_start == self.tgt_end:
            raise ValueError("hunk must change at least one side")


@dataclass(frozen=True)
class EditPlan:
    """One atomic edit: replace ``removed`` at ``region_start`` with ``inserted``.

    ``available`` is False only for heuristic-fallback plans, flagging samples
    that should be filtered from downstream training.
    """

    operation: EditOperation
    region_start: int
    removed: tuple[str, ...]
    inserted: tuple[str, ...]
    available: bool = True
    language: Language = Language.ENGLISH

    def __post_init__(self) -> None:
        object.__setattr__(self, "removed", tuple(self.removed))
        object.__setattr__(self, "inserted", tuple(self.inserted))
        if self.region_start < 0:
            raise ValueError("region_start must be non-negative")
        if self.operation is EditOperation.ADD and (self.removed or not self.inserted):
            raise ValueError("add plans must have empty removed and non-empty inserted")
        if self.operation is EditOperation.DELETE and (self.inserted or not self.removed):
            raise ValueError("delete plans must have empty inserted and non-empty removed")
        if self.operation is EditOperation.MODIFY and not (self.removed and self.inserted):
            raise ValueError("modify plans must have non-empty removed and inserted")

    @property
    def reported_words(self) -> str:
        """Words named in the ground-truth answer: what is audible for add/modify,
        what went missing for delete."""
        toks = self.removed if self.operation is EditOperation.DELETE else self.inserted
        return join_tokens(toks, self.language)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations


def word_diff(source: TokenSequence, target: TokenSequence) -> list[DiffHunk]:
    """Minimal token-level diff between source and target.

    Minimal under the longest-common-subsequence criterion; ambiguous edits are
    anchored to the earliest possible index so the output is deterministic.
    Identical inputs yield an empty list.
    """
    if source.language is not target.language:
        raise ValueError("cannot diff sequences of different languages")
    a, b = source.tokens, target.tokens
    n, m = len(a), len(b)

    # lcs[i][j] = LCS length of a[i:] vs b[j:]
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = lcs[i], lcs[i + 1]
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                down, right = nxt[j], row[j + 1]
                row[j] = down if down >= right else right

    hunks: list[DiffHunk] = []
    open_src = open_tgt = -1  # start of the hunk currently being built

    def close(i: int, j: int) -> None:
        nonlocal open_src, open_tgt
        if open_src >= 0:
            hunks.append(DiffHunk(open_src, i, open_tgt, j))
            open_src = open_tgt = -1

    i = j = 0
    while i < n or j < m:
        # Prefer insert, then delete, whenever doing so preserves the LCS;
        # this anchors ambiguous edits leftmost.
        if j < m and lcs[i][j + 1] == lcs[i][j]:
            if open_src < 0:
                open_src, open_tgt = i, j
            j += 1
        elif i < n and lcs[i + 1][j] == lcs[i][j]:
            if open_src < 0:
                open_src, open_tgt = i, j
            i += 1
        else:
            close(i, j)
            i += 1
            j += 1
    close(i, j)
    return hunks


def classify_edit(hunks: Sequence[DiffHunk], source: TokenSequence, target: TokenSequence) -> EditPlan:
    """Turn a single-hunk diff into an atomic EditPlan.

    Raises NoEditError for an empty diff and MultiRegionError when the edit is
    not confined to one contiguous region.
    """
    if len(hunks) == 0:
        raise NoEditError("source and target are identical")
    if len(hunks) > 1:
        raise MultiRegionError(f"edit spans {len(hunks)} regions, expected exactly 1")
    hunk = hunks[0]
    removed = source.tokens[hunk.src_start:hunk.src_end]
    inserted = target.tokens[hunk.tgt_start:hunk.tgt_end]
    if not removed:
        operation = EditOperation.ADD
    elif not inserted:
        operation = EditOperation.DELETE
    else:
        operation = EditOperation.MODIFY
    return EditPlan(
        operation=operation,
        region_start=hunk.src_start,
        removed=removed,
        inserted=inserted,
        available=True,
        language=source.language,
    )


def validate_plan(
    plan: EditPlan,
    source: TokenSequence,
    *,
    min_length_ratio: float = 0.5,
    max_length_ratio: float = 2.0,
) -> ValidationReport:
    """Check a plan against the corpus-construction constraints.

    Deletions may not touch the first or last token of the sentence, and a
    modification's replacement must stay within ``[ceil(min_ratio*n), max_ratio*n]``
    tokens of the original span length. Returns a report, never raises.
    """
    violations: list[Violation] = []
    if plan.operation is EditOperation.DELETE:
        touches_start = plan.region_start == 0
        touches_end = plan.region_start + len(plan.removed) == len(source.tokens)
        if touches_start or touches_end:
            violations.append(Violation.BOUNDARY_DELETION)
    if plan.operation is EditOperation.MODIFY:
        lo = math.ceil(min_length_ratio * len(plan.removed))
        hi = math.floor(max_length_ratio * len(plan.removed))
        if not lo <= len(plan.inserted) <= hi:
            violations.append(Violation.LENGTH_MISMATCH)
    return ValidationReport(tuple(violations))


def apply_plan(plan: EditPlan, source: TokenSequence) -> TokenSequence:
    """Apply a plan to its source sequence, yielding the edited sequence."""
    toks = source.tokens
    start = plan.region_start
    end = start + len(plan.removed)
    if start > len(toks) or end > len(toks):
        raise RegionOutOfBoundsError(
            f"region [{start}, {end}) out of bounds for {len(toks)} tokens"
        )
    if toks[start:end] != plan.removed:
        raise RemovedMismatchError(
            f"source slice {toks[start:end]!r} does not match plan.removed {plan.removed!r}"
        )
    return TokenSequence(toks[:start] + plan.inserted + toks[end:], source.language)


_PLACEHOLDERS = {
    Language.ENGLISH: ("something", "different"),
    Language.CHINESE: ("某", "另"),
}


def heuristic_fallback(source: TokenSequence, operation: EditOperation) -> EditPlan:
    """Deterministic rule-based synthetic edit, flagged ``available=False``.

    Pivots on the middle token: delete removes it, add duplicates it after
    itself, modify swaps it for a fixed placeholder. Requires at least three
    tokens so a deletion never touches a sentence boundary.
    """
    if len(source) < 3:
        raise SourceTooShortError(f"need >= 3 tokens for a fallback edit, got {len(source)}")
    mid = len(source) // 2
    pivot = source.tokens[mid]
    if operation is EditOperation.DELETE:
        return EditPlan(operation, mid, (pivot,), (), available=False, language=source.language)
    if operation is EditOperation.ADD:
        return EditPlan(operation, mid + 1, (), (pivot,), available=False, language=source.language)
    placeholder, alternate = _PLACEHOLDERS[source.language]
    replacement = placeholder if pivot != placeholder else alternate
    return EditPlan(operation, mid, (pivot,), (replacement,), available=False, language=source.language)


_EDIT_SYSTEM = (
    "You rewrite sentences by applying exactly one text edit. "
    "Reply with the edited sentence only, with no explanation and no quotes."
)

_EDIT_INSTRUCTIONS = {
    EditOperation.ADD: (
        "Insert one short, contextually relevant phrase at a single position "
        "in the sentence below."
    ),
    EditOperation.DELETE: (
        "Remove one short span of words from the interior of the sentence below. "
        "Never remove the first or the last word."
    ),
    EditOperation.MODIFY: (
        "Replace one short span of words in the sentence below with different "
        "words of similar length."
    ),
}


def edit_request(
    source: TokenSequence,
    operation: EditOperation,
    temperature: float = 0.7,
    max_tokens: int = 256,
) -> ChatRequest:
    """The fixed instruction template sent to the editing model."""
    return ChatRequest(
        system=_EDIT_SYSTEM,
        user=f"{_EDIT_INSTRUCTIONS[operation]}\n\n{source.text}",
        temperature=temperature,
        max_tokens=max_tokens,
    )


def generate_with_retries(
    client: LlmClient,
    source: TokenSequence,
    operation: EditOperation,
    max_retries: int = 5,
) -> EditPlan:
    """Request an edit from the model, validating each attempt strictly.

    Each attempt runs reply -> word_diff -> classify_edit -> validate_plan and
    the first valid plan wins. After ``max_retries`` failed attempts the
    heuristic fallback is returned with ``available=False``. Transport errors
    from the client propagate unchanged.
    """
    if max_retries < 1:
        raise ValueError("max_retries must be >= 1")
    request = edit_request(source, operation)
    for attempt in range(1, max_retries + 1):
        reply = client.complete(request)
        if not reply.strip():
            logger.debug("attempt %d: %s", attempt, Violation.EMPTY_RESULT.value)
            continue
        target = TokenSequence.from_text(reply, source.language)
        try:
            plan = classify_edit(word_diff(source, target), source, target)
        except NoEditError:
            logger.debug("attempt %d: %s", attempt, Violation.NO_EDIT.value)
            continue
        except MultiRegionError:
            logger.debug("attempt %d: %s", attempt, Violation.MULTI_REGION.value)
            continue
        report = validate_plan(plan, source)
        if report.valid:
            return plan
        logger.debug("attempt %d: %s", attempt, ",".join(v.value for v in report.violations))
    logger.debug("all %d attempts failed, using heuristic fallback", max_retries)
    return heuristic_fallback(source, operation)
