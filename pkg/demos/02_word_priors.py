# Turn frame-level tampering probabilities into word-level priors using
# forced-alignment boundaries, then render the structured prompt line.

from edittrace import (
    AggregationMethod,
    FrameProbSeq,
    ScoreReduction,
    WordBoundary,
    aggregate,
    boundaries_from_ctm,
    format_prior_prompt,
    utterance_score,
)

# A detector emits one probability per 20 ms frame. Frames 30..44 cover an
# inserted word, so their probabilities sit near 1.
probs = [0.05] * 30 + [0.93] * 15 + [0.05] * 15
frames = FrameProbSeq("utt1", frame_shift_ms=20.0, probs=tuple(probs))

boundaries = [
    WordBoundary("the", 0.0, 0.3),
    WordBoundary("cat", 0.3, 0.6),
    WordBoundary("black", 0.6, 0.9),   # the edited word
    WordBoundary("sat", 0.9, 1.2),
]

priors = aggregate(frames, boundaries, AggregationMethod.MEAN)
for p in priors:
    print(f"{p.word:>6}: p={p.probability:.3f} over {p.frame_count} frames")

print()
print(format_prior_prompt(priors))
print()
print("utterance score (max): ", utterance_score(priors, ScoreReduction.MAX))
print("utterance score (mean):", round(utterance_score(priors, ScoreReduction.MEAN), 4))

# Max aggregation highlights narrow peaks that a mean would dilute.
peaky = aggregate(frames, boundaries, AggregationMethod.MAX)
print("max-aggregated:", [round(p.probability, 3) for p in peaky])

# Alignments often arrive as CTM; the helper groups lines per utterance.
ctm = [
    "utt2 1 0.00 0.30 he",
    "utt2 1 0.30 0.25 did",
    "utt2 1 0.55 0.20 go",
]
print()
print("from CTM:", boundaries_from_ctm(ctm)["utt2"])
