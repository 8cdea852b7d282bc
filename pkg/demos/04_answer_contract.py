# Prompt strategies and the strict answer templates: build the three prompt
# levels, serialize ground-truth labels, and parse model answers strictly.

from edittrace import (
    EditOperation,
    EditPlan,
    ParseError,
    PromptStrategy,
    build_prompt,
    parse_response,
    serialize_label,
)

prior_line = ("Word-level editing probabilities from an acoustic detector: "
              "the(p=0.05) black(p=0.93) cat(p=0.06) sat(p=0.05)")

for strategy in PromptStrategy:
    bundle = build_prompt(strategy, prior_line)
    print(f"--- {strategy.value} system prompt ({len(bundle.system)} chars) ---")
    print(bundle.system)
    print()

print("--- user text (prior injected as the final paragraph) ---")
print(build_prompt(PromptStrategy.DETAILED, prior_line).user)
print()

# Ground-truth answers follow the same templates the model must emit.
plan = EditPlan(EditOperation.ADD, 1, (), ("black",))
print("label for an add plan:   ", serialize_label(plan))
print("label for a bona fide id:", serialize_label(None))
print()

# Parsing is strict: near misses are contract violations, never coerced.
answers = [
    "No evidence of speech editing was detected.",
    "Yes, black was added in the speech.",
    "Yes, very fast was DELETED in the speech.",   # type keyword is case-insensitive
    "The audio sounds fake to me.",                # off template
    "Yes, black was added in the speech",          # missing final period
]
for text in answers:
    try:
        response = parse_response(text)
        print(f"ok        {text!r} -> {response.verdict.value}"
              + (f" / {response.edited_words!r} {response.edit_type.value}"
                 if response.edit_type else ""))
    except ParseError as err:
        print(f"violation {text!r} -> {err.kind}")
