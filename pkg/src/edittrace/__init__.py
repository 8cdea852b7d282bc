"""edittrace: speech-editing detection toolkit.

Edit planning for parallel corpus construction, word-level tampering priors,
the centroid-based acoustic consistency loss with verified gradients, strict
answer-contract parsing, and a two-granularity evaluation harness.
"""

__version__ = "0.1.0"

from edittrace.acoustic_loss import (
    FeatureSequence,
    LossConfig,
    LossResult,
    SpeechLabel,
    centroid,
    consistency_loss,
    descent_demo,
    frame_distances,
    gradient_check,
    total_loss,
)
from edittrace.answer_contract import (
    BONA_FIDE_TEMPLATE,
    EditResponse,
    EditType,
    ParseError,
    PromptBundle,
    PromptStrategy,
    Verdict,
    build_prompt,
    parse_response,
    serialize_label,
)
from edittrace.edit_plan import (
    DiffHunk,
    EditOperation,
    EditPlan,
    Language,
    TokenSequence,
    ValidationReport,
    Violation,
    apply_plan,
    classify_edit,
    generate_with_retries,
    heuristic_fallback,
    validate_plan,
    word_diff,
)
from edittrace.llm_client import (
    ChatRequest,
    ClientConfig,
    ClientError,
    HttpLlmClient,
    MockLlmClient,
    mock_client,
)
from edittrace.metrics import (
    LocalizationRecord,
    MetricsReport,
    ScoreRecord,
    auc,
    detection_eval,
    eer,
    f1_accuracy,
    localization_eval,
)
from edittrace.pipeline import PipelineConfig, run_pipeline
from edittrace.prior import (
    AggregationMethod,
    FrameProbSeq,
    ScoreReduction,
    WordBoundary,
    WordPrior,
    aggregate,
    boundaries_from_ctm,
    format_prior_prompt,
    utterance_score,
)
