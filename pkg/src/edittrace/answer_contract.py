"""Prompt construction and the strict answer templates.

A model under evaluation must answer with exactly one of two templates:

    No evidence of speech editing was detected.
    Yes, <exact words> was <type> in the speech.

where <type> is added, deleted, or modified. Anything else is a contract
violation and is surfaced as a ParseError, never coerced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from edittrace.edit_plan import EditOperation, EditPlan

BONA_FIDE_TEMPLATE = "No evidence of speech editing was detected."


class PromptStrategy(str, Enum):
    GENERIC = "generic"
    DESCRIPTIVE = "descriptive"
    DETAILED = "detailed"


class Verdict(str, Enum):
    BONA_FIDE = "bonafide"
    EDITED = "edited"


class EditType(str, Enum):
    ADDED = "added"
    DELETED = "deleted"
    MODIFIED = "modified"


class ParseError(ValueError):
    UNRECOGNIZED_TEMPLATE = "unrecognized_template"
    UNKNOWN_EDIT_TYPE = "unknown_edit_type"

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str


@dataclass(frozen=True)
class EditResponse:
    verdict: Verdict
    edited_words: str = ""
    edit_type: EditType | None = None

    def __post_init__(self) -> None:
        if self.verdict is Verdict.BONA_FIDE and (self.edited_words or self.edit_type):
            raise ValueError("bona fide responses carry no words or edit type")
        if self.verdict is Verdict.EDITED and (not self.edited_words or self.edit_type is None):
            raise ValueError("edited responses need words and an edit type")


_DEFAULT_SYSTEM = "You are a helpful assistant."

_TASK_DEFINITION = (
    "Task: speech editing detection and content localization. Speech editing "
    "manipulates a short segment of an utterance (for example a negation or a "
    "key entity) while preserving the overall naturalness of the recording. "
    "Decide whether the audio contains edited speech and, if it does, identify "
    "the exact edited words."
)

_OUTPUT_SIMPLE = "Answer concisely in one sentence."

_EDIT_TYPES = (
    "There are three possible edit types:\n"
    "- added: new words were inserted into the original speech.\n"
    "- deleted: words were removed from the original speech.\n"
    "- modified: words were replaced with different words."
)

_OUTPUT_STRICT = (
    "Respond with exactly one of the following templates and nothing else:\n"
    f'- If the speech is genuine: "{BONA_FIDE_TEMPLATE}"\n'
    '- If the speech was edited: "Yes, <exact words> was <type> in the speech." '
    "where <type> is one of added, deleted, or modified."
)

_USER_QUESTION = (
    "Listen to the audio. Has this speech been edited? If it has, report the "
    "exact edited words and the edit type."
)

_SYSTEM_BODIES = {
    PromptStrategy.GENERIC: _DEFAULT_SYSTEM,
    PromptStrategy.DESCRIPTIVE: f"{_DEFAULT_SYSTEM}\n\n{_TASK_DEFINITION}\n\n{_OUTPUT_SIMPLE}",
    PromptStrategy.DETAILED: f"{_DEFAULT_SYSTEM}\n\n{_TASK_DEFINITION}\n\n{_EDIT_TYPES}\n\n{_OUTPUT_STRICT}",
}


def build_prompt(strategy: PromptStrategy, prior: str | None = None) -> PromptBundle:
    """Assemble the system/user pair for one of the three prompt strategies.

    Generic keeps the default system prompt and states the task only in the
    user text; descriptive adds the task definition to the system prompt;
    detailed additionally enumerates the edit types and the strict output
    templates. A prior line, when given, becomes the final user paragraph.
    Byte-deterministic for identical inputs.
    """
    user = _USER_QUESTION
    if prior is not None:
        user = f"{user}\n\n{prior}"
    return PromptBundle(system=_SYSTEM_BODIES[strategy], user=user)


_EDITED_RE = re.compile(r"^Yes, (.+) was ((?i:added|deleted|modified)) in the speech\.$")
_EDITED_SHAPE_RE = re.compile(r"^Yes, (.+) was (\S+) in the speech\.$")


def parse_response(text: str) -> EditResponse:
    """Parse a model answer against the strict templates.

    Surrounding whitespace is trimmed; the edit-type keyword is matched
    case-insensitively while the edited words are captured as written. Any
    other deviation raises ParseError.
    """
    body = text.strip()
    if body == BONA_FIDE_TEMPLATE:
        return EditResponse(Verdict.BONA_FIDE)
    match = _EDITED_RE.match(body)
    if match:
        words = match.group(1)
        if not words.strip():
            raise ParseError(ParseError.UNRECOGNIZED_TEMPLATE, f"blank edited words in {body!r}")
        return EditResponse(Verdict.EDITED, words, EditType(match.group(2).lower()))
    shape = _EDITED_SHAPE_RE.match(body)
    if shape:
        raise ParseError(
            ParseError.UNKNOWN_EDIT_TYPE,
            f"unknown edit type {shape.group(2)!r}; expected added, deleted, or modified",
        )
    raise ParseError(ParseError.UNRECOGNIZED_TEMPLATE, f"off-template answer: {body!r}")


_OPERATION_TO_TYPE = {
    EditOperation.ADD: EditType.ADDED,
    EditOperation.DELETE: EditType.DELETED,
    EditOperation.MODIFY: EditType.MODIFIED,
}


def serialize_label(plan: EditPlan | None) -> str:
    """Ground-truth answer text for a sample: None means bona fide.

    Modify reports the replacement words (what is audible in the edited
    audio); delete reports the removed words.
    """
    if plan is None:
        return BONA_FIDE_TEMPLATE
    kind = _OPERATION_TO_TYPE[plan.operation]
    return f"Yes, {plan.reported_words} was {kind.value} in the speech."
