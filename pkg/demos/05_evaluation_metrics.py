# Detection- and localization-granularity evaluation: EER/AUC from continuous
# scores, accuracy/F1 from hard verdicts, word trials pooled across utterances.

from edittrace import (
    EditResponse,
    EditType,
    LocalizationRecord,
    ScoreRecord,
    Verdict,
    auc,
    detection_eval,
    eer,
    f1_accuracy,
    localization_eval,
)

records = [
    ScoreRecord("u1", 0.05, 0),
    ScoreRecord("u2", 0.12, 0),
    ScoreRecord("u3", 0.88, 1),
    ScoreRecord("u4", 0.93, 1),
    ScoreRecord("u5", 0.31, 1),  # a quiet edit the detector almost missed
]
print("eer:", round(eer(records), 4))
print("auc:", round(auc(records), 4))
print("acc/f1 at 0.5:", f1_accuracy(records, threshold=0.5))
print()

# Detection granularity mixes both views: hard verdicts for accuracy/F1,
# continuous prior scores for EER/AUC. A None verdict is a contract violation.
verdicts = [
    EditResponse(Verdict.BONA_FIDE),
    EditResponse(Verdict.BONA_FIDE),
    EditResponse(Verdict.EDITED, "black", EditType.ADDED),
    EditResponse(Verdict.EDITED, "not", EditType.ADDED),
    None,  # the model answered off-template
]
scores = [r.score for r in records]
truth = [r.label for r in records]
report = detection_eval(verdicts, scores, truth)
print("detection report:")
for key, value in report.to_dict().items():
    print(f"  {key}: {value}")
print()

# Localization pools (word score, word label) trials across utterances and
# additionally reports how often the predicted words match exactly.
loc = [
    LocalizationRecord("u3", (0.1, 0.9, 0.1), (0, 1, 0), "black", "black"),
    LocalizationRecord("u4", (0.05, 0.85), (0, 1), "not", "not"),
    LocalizationRecord("u5", (0.2, 0.4, 0.1), (0, 1, 0), "loud", "quiet"),
]
report = localization_eval(loc, threshold=0.5)
print("localization report:")
for key, value in report.to_dict().items():
    print(f"  {key}: {value}")
