# Plan word-level edits against a source sentence: diff, classify, validate,
# retry against a (mocked) language model, and fall back when it misbehaves.

from edittrace import (
    EditOperation,
    Language,
    MockLlmClient,
    TokenSequence,
    apply_plan,
    classify_edit,
    generate_with_retries,
    heuristic_fallback,
    validate_plan,
    word_diff,
)

source = TokenSequence.from_text("the cat sat on the mat")
target = TokenSequence.from_text("the black cat sat on the mat")

hunks = word_diff(source, target)
print("diff hunks:", hunks)

plan = classify_edit(hunks, source, target)
print("classified:", plan.operation.value, "at", plan.region_start,
      "inserted:", plan.inserted)
print("validation:", validate_plan(plan, source))
print("roundtrip :", apply_plan(plan, source).text)
print()

# Chinese diffs per character, so the same machinery covers both languages.
zh_source = TokenSequence.from_text("我今天去学校", Language.CHINESE)
zh_target = TokenSequence.from_text("我今天不去学校", Language.CHINESE)
zh_plan = classify_edit(word_diff(zh_source, zh_target), zh_source, zh_target)
print("zh edit:", zh_plan.operation.value, zh_plan.inserted, "->", apply_plan(zh_plan, zh_source).text)
print()

# The retry loop: the first reply edits two regions, the second is clean.
client = MockLlmClient(["a meeting starts very soon", "the meeting starts very soon"])
meeting = TokenSequence.from_text("the meeting starts soon")
plan = generate_with_retries(client, meeting, EditOperation.ADD, max_retries=5)
print("after", client.call_count, "attempts:", apply_plan(plan, meeting).text,
      "(available =", str(plan.available) + ")")

# Exhausting the budget flags the sample and falls back to a synthetic edit.
stubborn = MockLlmClient(["the sun rose slowly today"] * 5)  # identical = no edit
sun = TokenSequence.from_text("the sun rose slowly today")
fallback = generate_with_retries(stubborn, sun, EditOperation.MODIFY, max_retries=5)
print("fallback:", apply_plan(fallback, sun).text, "(available =", str(fallback.available) + ")")
print("fallback always satisfies the constraints:", validate_plan(fallback, sun).valid)

# Constraint checks in isolation: boundary deletions are forbidden.
bad = heuristic_fallback(sun, EditOperation.DELETE)
print("fallback delete keeps the boundary rule:", validate_plan(bad, sun).valid)
