"""JSONL manifest reading/writing for every pipeline file format.

All writes are atomic (temp file in the target directory, then rename), so a
crashed run never leaves a partial line behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from edittrace.answer_contract import EditResponse, EditType, Verdict
from edittrace.edit_plan import EditPlan, EditOperation, Language, TokenSequence
from edittrace.prior import FrameProbSeq, WordBoundary, WordPrior


class ManifestError(Exception):
    pass


# "none" marks a bona fide passthrough sample: no edit is planned and the
# ground-truth answer is the bona fide template.
SAMPLE_OPERATIONS = ("add", "delete", "modify", "none")


@dataclass(frozen=True)
class SampleSpec:
    id: str
    source: TokenSequence
    operation: str  # one of SAMPLE_OPERATIONS


@dataclass(frozen=True)
class TruthRecord:
    id: str
    label: int
    truth_words: str = ""
    word_labels: tuple[int, ...] = ()


def read_jsonl(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"input file not found: {path}")
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(row, dict):
                raise ManifestError(f"{path}:{lineno}: expected a JSON object")
            rows.append(row)
    return rows


def write_jsonl(path, rows: Iterable[dict]) -> None:
    _atomic_write(path, "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows))


def write_json(path, obj) -> None:
    _atomic_write(path, json.dumps(obj, ensure_ascii=False, indent=2) + "\n")


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(row: dict, key: str, path, lineno: int):
    if key not in row:
        raise ManifestError(f"{path}:{lineno}: missing required field {key!r}")
    return row[key]


def load_manifest(path) -> list[SampleSpec]:
    """Input corpus: {"id", "source_text", "language": "en"|"zh", "operation"}."""
    samples = []
    seen: set[str] = set()
    for lineno, row in enumerate(read_jsonl(path), start=1):
        sample_id = str(_require(row, "id", path, lineno))
        if sample_id in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate id {sample_id!r}")
        seen.add(sample_id)
        language_code = _require(row, "language", path, lineno)
        try:
            language = Language(language_code)
        except ValueError:
            raise ManifestError(f"{path}:{lineno}: unknown language {language_code!r}") from None
        operation = _require(row, "operation", path, lineno)
        if operation not in SAMPLE_OPERATIONS:
            raise ManifestError(f"{path}:{lineno}: unknown operation {operation!r}")
        source = TokenSequence.from_text(str(_require(row, "source_text", path, lineno)), language)
        if len(source) == 0:
            raise ManifestError(f"{path}:{lineno}: empty source text")
        samples.append(SampleSpec(sample_id, source, operation))
    return samples


def plan_to_row(sample: SampleSpec, plan: EditPlan | None, edited: TokenSequence) -> dict:
    return {
        "id": sample.id,
        "source_text": sample.source.text,
        "edited_text": edited.text,
        "operation": plan.operation.value if plan is not None else "none",
        "region_start": plan.region_start if plan is not None else None,
        "removed": list(plan.removed) if plan is not None else [],
        "inserted": list(plan.inserted) if plan is not None else [],
        "available": plan.available if plan is not None else True,
    }


def plan_from_row(row: dict, language: Language) -> EditPlan | None:
    if row["operation"] == "none":
        return None
    return EditPlan(
        operation=EditOperation(row["operation"]),
        region_start=int(row["region_start"]),
        removed=tuple(row["removed"]),
        inserted=tuple(row["inserted"]),
        available=bool(row["available"]),
        language=language,
    )


def load_frames(path) -> dict[str, FrameProbSeq]:
    """Frame probabilities: {"id", "frame_shift_ms", "probs": [..]}."""
    out: dict[str, FrameProbSeq] = {}
    for lineno, row in enumerate(read_jsonl(path), start=1):
        utt = str(_require(row, "id", path, lineno))
        try:
            out[utt] = FrameProbSeq(
                utterance_id=utt,
                frame_shift_ms=float(_require(row, "frame_shift_ms", path, lineno)),
                probs=tuple(_require(row, "probs", path, lineno)),
            )
        except (TypeError, ValueError) as exc:
            raise ManifestError(f"{path}:{lineno}: {exc}") from exc
    return out


def load_boundaries(path) -> dict[str, list[WordBoundary]]:
    """Word alignments: {"id", "words": [{"w", "start_s", "end_s"}, ..]}."""
    out: dict[str, list[WordBoundary]] = {}
    for lineno, row in enumerate(read_jsonl(path), start=1):
        utt = str(_require(row, "id", path, lineno))
        words = _require(row, "words", path, lineno)
        try:
            out[utt] = [
                WordBoundary(str(w["w"]), float(w["start_s"]), float(w["end_s"])) for w in words
            ]
        except (TypeError, KeyError, ValueError) as exc:
            raise ManifestError(f"{path}:{lineno}: bad word entry ({exc})") from exc
    return out


def priors_to_row(utt_id: str, priors: Sequence[WordPrior], score: float) -> dict:
    return {
        "id": utt_id,
        "priors": [
            {"w": p.word, "p": p.probability, "frames": p.frame_count} for p in priors
        ],
        "utterance_score": score,
    }


def load_priors(path) -> dict[str, tuple[list[WordPrior], float]]:
    out: dict[str, tuple[list[WordPrior], float]] = {}
    for lineno, row in enumerate(read_jsonl(path), start=1):
        utt = str(_require(row, "id", path, lineno))
        entries = _require(row, "priors", path, lineno)
        try:
            priors = [WordPrior(str(e["w"]), float(e["p"]), int(e["frames"])) for e in entries]
        except (TypeError, KeyError, ValueError) as exc:
            raise ManifestError(f"{path}:{lineno}: bad prior entry ({exc})") from exc
        out[utt] = (priors, float(_require(row, "utterance_score", path, lineno)))
    return out


def load_responses(path) -> dict[str, str]:
    """Model answers: {"id", "text"}."""
    out: dict[str, str] = {}
    for lineno, row in enumerate(read_jsonl(path), start=1):
        out[str(_require(row, "id", path, lineno))] = str(_require(row, "text", path, lineno))
    return out


def load_mock_script(path) -> dict[str, list[str]]:
    """Per-sample scripted replies: {"id", "replies": [..]}."""
    out: dict[str, list[str]] = {}
    for lineno, row in enumerate(read_jsonl(path), start=1):
        replies = _require(row, "replies", path, lineno)
        if not isinstance(replies, list):
            raise ManifestError(f"{path}:{lineno}: replies must be a list")
        out[str(_require(row, "id", path, lineno))] = [str(r) for r in replies]
    return out


def parsed_to_row(utt_id: str, response: EditResponse | None, violation: str | None = None, text: str = "") -> dict:
    if response is None:
        return {"id": utt_id, "violation": violation or "unrecognized_template", "text": text}
    return {
        "id": utt_id,
        "verdict": response.verdict.value,
        "edited_words": response.edited_words,
        "edit_type": response.edit_type.value if response.edit_type else None,
    }


def load_parsed(path) -> dict[str, EditResponse | None]:
    out: dict[str, EditResponse | None] = {}
    for lineno, row in enumerate(read_jsonl(path), start=1):
        utt = str(_require(row, "id", path, lineno))
        if "violation" in row:
            out[utt] = None
            continue
        verdict = Verdict(_require(row, "verdict", path, lineno))
        if verdict is Verdict.BONA_FIDE:
            out[utt] = EditResponse(verdict)
        else:
            out[utt] = EditResponse(
                verdict,
                str(_require(row, "edited_words", path, lineno)),
                EditType(_require(row, "edit_type", path, lineno)),
            )
    return out


def load_truth(path) -> dict[str, TruthRecord]:
    """Ground truth: {"id", "label", optional "truth_words", optional "word_labels"}."""
    out: dict[str, TruthRecord] = {}
    for lineno, row in enumerate(read_jsonl(path), start=1):
        utt = str(_require(row, "id", path, lineno))
        label = int(_require(row, "label", path, lineno))
        if label not in (0, 1):
            raise ManifestError(f"{path}:{lineno}: label must be 0 or 1")
        out[utt] = TruthRecord(
            id=utt,
            label=label,
            truth_words=str(row.get("truth_words", "")),
            word_labels=tuple(int(x) for x in row.get("word_labels", ())),
        )
    return out
