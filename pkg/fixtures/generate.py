#!/usr/bin/env python3
"""Regenerate the shipped 20-sample pipeline fixture under fixtures/pipeline/.

The fixture is fully deterministic: sources and scripted mock replies are
fixed, frame probabilities follow a fixed per-index pattern (elevated over the
edited word span), and simulated model responses are derived from the realized
plans, with two deliberately wrong answers and one off-template answer to
exercise the violation path.
"""

from pathlib import Path

from edittrace.answer_contract import serialize_label
from edittrace.edit_plan import (
    EditOperation,
    Language,
    TokenSequence,
    apply_plan,
    generate_with_retries,
)
from edittrace.llm_client import MockLlmClient
from edittrace.manifests import write_jsonl

OUT = Path(__file__).parent / "pipeline"

FRAME_SHIFT_MS = 20.0
FRAMES_PER_WORD = 15  # 0.3 s per word
WORD_SECONDS = 0.3

# (id, language, operation, source_text, scripted replies)
SAMPLES = [
    ("s01", "en", "none", "the weather is clear today", []),
    ("s02", "en", "none", "she walked to the station", []),
    ("s03", "zh", "none", "我今天去学校上课", []),
    ("s04", "en", "none", "the cat sat on the mat", []),
    ("s05", "zh", "none", "他昨天买了一本书", []),
    ("s06", "en", "add", "the cat sat", ["the black cat sat"]),
    ("s07", "en", "add", "he did go home", ["he did not go home"]),
    ("s08", "en", "add", "they finished the project", ["they finally finished the project"]),
    ("s09", "zh", "add", "我去学校", ["我不去学校"]),
    # first reply edits two regions, so the retry path fires
    ("s10", "en", "add", "the meeting starts soon",
     ["a meeting starts very soon", "the meeting starts very soon"]),
    ("s11", "en", "delete", "she quickly ran to the store", ["she ran to the store"]),
    ("s12", "en", "delete", "the old house was empty", ["the house was empty"]),
    ("s13", "zh", "delete", "我今天不去学校", ["我今天去学校"]),
    ("s14", "en", "delete", "he carefully reviewed all documents", ["he reviewed all documents"]),
    ("s15", "en", "delete", "the train was very late", ["the train was late"]),
    ("s16", "en", "modify", "the cat sat", ["the dog sat"]),
    ("s17", "en", "modify", "the food was good", ["the food was terrible"]),
    ("s18", "zh", "modify", "他买了一本书", ["他买了一本笔"]),
    ("s19", "en", "modify", "the movie was short", ["the movie was quite long"]),
    # every reply equals the source: NoEdit five times, heuristic fallback fires
    ("s20", "en", "modify", "the sun rose slowly today", ["the sun rose slowly today"] * 5),
]

# leading silence (seconds) per sample, to exercise silence-frame dropping
SILENCE = {"s03": 0.2}

WRONG_EDITED = "s02"      # bona fide sample answered as edited
WRONG_BONA_FIDE = "s14"   # edited sample answered as bona fide
OFF_TEMPLATE = "s07"      # answer violating the output contract


def background(i: int) -> float:
    return 0.04 + 0.002 * (i % 7)


def elevated(i: int) -> float:
    return 0.86 + 0.002 * (i % 7)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    manifest_rows, script_rows = [], []
    frames_rows, words_rows, response_rows, truth_rows = [], [], [], []

    for sample_id, lang_code, operation, source_text, replies in SAMPLES:
        language = Language(lang_code)
        source = TokenSequence.from_text(source_text, language)
        manifest_rows.append({
            "id": sample_id, "source_text": source_text,
            "language": lang_code, "operation": operation,
        })
        if replies:
            script_rows.append({"id": sample_id, "replies": replies})

        if operation == "none":
            plan, edited = None, source
        else:
            plan = generate_with_retries(
                MockLlmClient(replies), source, EditOperation(operation), max_retries=5
            )
            edited = apply_plan(plan, source)

        # word labels over the edited tokens: the inserted span is edited
        tokens = edited.tokens
        if plan is None or plan.operation is EditOperation.DELETE:
            labels = [0] * len(tokens)
        else:
            start, end = plan.region_start, plan.region_start + len(plan.inserted)
            labels = [1 if start <= i < end else 0 for i in range(len(tokens))]

        silence = SILENCE.get(sample_id, 0.0)
        n_silence = int(round(silence / (FRAME_SHIFT_MS / 1000.0)))
        probs = [background(i) for i in range(n_silence)]
        words = []
        for w_idx, (word, label) in enumerate(zip(tokens, labels)):
            start_s = silence + w_idx * WORD_SECONDS
            words.append({"w": word, "start_s": round(start_s, 4),
                          "end_s": round(start_s + WORD_SECONDS, 4)})
            level = elevated if label else background
            base = len(probs)
            probs.extend(level(base + k) for k in range(FRAMES_PER_WORD))
        frames_rows.append({"id": sample_id, "frame_shift_ms": FRAME_SHIFT_MS, "probs": probs})
        words_rows.append({"id": sample_id, "words": words})

        if sample_id == WRONG_EDITED:
            answer = "Yes, beeps was added in the speech."
        elif sample_id == WRONG_BONA_FIDE:
            answer = "No evidence of speech editing was detected."
        elif sample_id == OFF_TEMPLATE:
            answer = "I think the phrase not was inserted into this audio."
        else:
            answer = serialize_label(plan)
        response_rows.append({"id": sample_id, "text": answer})

        truth_rows.append({
            "id": sample_id,
            "label": 0 if operation == "none" else 1,
            "truth_words": plan.reported_words if plan is not None else "",
            "word_labels": labels,
        })

    write_jsonl(OUT / "manifest.jsonl", manifest_rows)
    write_jsonl(OUT / "mock_script.jsonl", script_rows)
    write_jsonl(OUT / "frames.jsonl", frames_rows)
    write_jsonl(OUT / "words.jsonl", words_rows)
    write_jsonl(OUT / "responses.jsonl", response_rows)
    write_jsonl(OUT / "truth.jsonl", truth_rows)
    print(f"wrote fixture to {OUT}")


if __name__ == "__main__":
    main()
