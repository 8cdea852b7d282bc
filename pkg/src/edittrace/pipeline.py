"""End-to-end pipeline: plan -> prior -> prompt -> (external model) -> parse -> eval.

Samples flow through a bounded worker pool, but every artifact is written in
input-manifest order so reruns with the same inputs are byte-identical.
Per-sample failures never abort other samples; they are collected as rows in
errors.jsonl with the stage that failed and the reason.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from edittrace import answer_contract, edit_plan, manifests, metrics, prior
from edittrace.acoustic_loss import LossConfig
from edittrace.answer_contract import EditResponse, PromptStrategy, Verdict
from edittrace.edit_plan import EditOperation, EditPlan, TokenSequence
from edittrace.llm_client import ClientConfig, ClientError, HttpLlmClient, MockLlmClient
from edittrace.manifests import SampleSpec
from edittrace.metrics import LocalizationRecord
from edittrace.prior import AggregationMethod, PriorError, ScoreReduction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    workers: int = 20
    batch_size: int = 50
    max_retries: int = 5
    strategy: PromptStrategy = PromptStrategy.DETAILED
    seed: int = 0
    aggregation: AggregationMethod = AggregationMethod.MEAN
    reduction: ScoreReduction = ScoreReduction.MAX
    threshold: float = 0.5
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


@dataclass(frozen=True)
class StageError:
    id: str
    stage: str
    reason: str

    def to_row(self) -> dict:
        return {"id": self.id, "stage": self.stage, "reason": self.reason}


@dataclass
class PipelineResult:
    out_dir: Path
    artifacts: list[str]
    errors: list[StageError]
    report: dict | None = None


@dataclass
class _SampleState:
    spec: SampleSpec
    plan: EditPlan | None = None
    edited: TokenSequence | None = None
    priors: list | None = None
    score: float | None = None
    response: EditResponse | None = None  # parsed verdict
    has_response: bool = False
    failed: bool = False


def _plan_one(
    state: _SampleState,
    config: PipelineConfig,
    client,
    mock_script: dict[str, list[str]] | None,
) -> StageError | None:
    spec = state.spec
    if spec.operation == "none":
        state.edited = spec.source
        return None
    operation = EditOperation(spec.operation)
    if mock_script is not None:
        sample_client = MockLlmClient(mock_script.get(spec.id, []))
    else:
        sample_client = client
    try:
        state.plan = edit_plan.generate_with_retries(
            sample_client, spec.source, operation, config.max_retries
        )
        state.edited = edit_plan.apply_plan(state.plan, spec.source)
    except ClientError as exc:
        state.failed = True
        return StageError(spec.id, "plan", str(exc))
    except edit_plan.EditPlanError as exc:
        state.failed = True
        return StageError(spec.id, "plan", str(exc))
    return None


def plan_corpus(
    samples: list[SampleSpec],
    config: PipelineConfig,
    client=None,
    mock_script: dict[str, list[str]] | None = None,
) -> tuple[list["_SampleState"], list[StageError]]:
    """Plan every sample under a bounded worker pool, batch by batch.

    Results come back in manifest order regardless of completion order;
    per-sample failures are returned as error rows, never raised.
    """
    states = [_SampleState(spec) for spec in samples]
    errors: list[StageError] = []
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for start in range(0, len(states), config.batch_size):
            batch = states[start:start + config.batch_size]
            for err in pool.map(
                lambda s: _plan_one(s, config, client, mock_script), batch
            ):
                if err is not None:
                    errors.append(err)
    return states, errors


def _word_labels(state: _SampleState) -> tuple[int, ...]:
    """Binary edited/genuine flag per token of the edited text.

    Inserted spans (add/modify) are the edited words; deletions leave no
    synthetic word behind, so their labels are all zero.
    """
    n_tokens = len(state.edited.tokens)
    plan = state.plan
    if plan is None or plan.operation is EditOperation.DELETE:
        return (0,) * n_tokens
    start = plan.region_start
    end = start + len(plan.inserted)
    return tuple(1 if start <= i < end else 0 for i in range(n_tokens))


def run_pipeline(
    config: PipelineConfig,
    manifest_path,
    frames_path,
    alignments_path,
    out_dir,
    responses_path=None,
    mock_script_path=None,
    client=None,
) -> PipelineResult:
    """Run every stage over the corpus, writing artifacts under ``out_dir``.

    Writes plans.jsonl, priors.jsonl, and prompts.jsonl always; parsed.jsonl
    and report.json when ``responses_path`` is given; errors.jsonl when any
    sample failed. Raises ManifestError for unusable inputs (missing files,
    bad schema); per-sample problems become error rows instead.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    samples = manifests.load_manifest(manifest_path)
    frames = manifests.load_frames(frames_path)
    boundaries = manifests.load_boundaries(alignments_path)
    responses = manifests.load_responses(responses_path) if responses_path else None
    mock_script = manifests.load_mock_script(mock_script_path) if mock_script_path else None
    if mock_script is None and client is None:
        client = HttpLlmClient(ClientConfig.from_env())

    logger.info(
        "planning %d samples (workers=%d, batch=%d, retries=%d)",
        len(samples), config.workers, config.batch_size, config.max_retries,
    )
    states, errors = plan_corpus(samples, config, client, mock_script)
    artifacts: list[str] = []

    plan_rows = [
        manifests.plan_to_row(s.spec, s.plan, s.edited) for s in states if not s.failed
    ]
    manifests.write_jsonl(out_dir / "plans.jsonl", plan_rows)
    artifacts.append("plans.jsonl")

    # prior stage
    prior_rows = []
    for state in states:
        if state.failed:
            continue
        spec = state.spec
        if spec.id not in frames:
            errors.append(StageError(spec.id, "prior", "no frame probabilities for id"))
            state.failed = True
            continue
        if spec.id not in boundaries:
            errors.append(StageError(spec.id, "prior", "no word boundaries for id"))
            state.failed = True
            continue
        try:
            word_priors = prior.aggregate(frames[spec.id], boundaries[spec.id], config.aggregation)
        except PriorError as exc:
            errors.append(StageError(spec.id, "prior", str(exc)))
            state.failed = True
            continue
        state.priors = word_priors
        state.score = prior.utterance_score(word_priors, config.reduction)
        prior_rows.append(manifests.priors_to_row(spec.id, word_priors, state.score))
    manifests.write_jsonl(out_dir / "priors.jsonl", prior_rows)
    artifacts.append("priors.jsonl")

    # prompt stage
    prompt_rows = []
    for state in states:
        if state.failed:
            continue
        bundle = answer_contract.build_prompt(
            config.strategy, prior.format_prior_prompt(state.priors)
        )
        prompt_rows.append({"id": state.spec.id, "system": bundle.system, "user": bundle.user})
    manifests.write_jsonl(out_dir / "prompts.jsonl", prompt_rows)
    artifacts.append("prompts.jsonl")

    report_obj = None
    if responses is not None:
        parsed_rows = []
        for state in states:
            if state.failed:
                continue
            spec = state.spec
            if spec.id not in responses:
                errors.append(StageError(spec.id, "parse", "no response for id"))
                state.failed = True
                continue
            text = responses[spec.id]
            state.has_response = True
            try:
                state.response = answer_contract.parse_response(text)
                parsed_rows.append(manifests.parsed_to_row(spec.id, state.response))
            except answer_contract.ParseError as exc:
                state.response = None
                parsed_rows.append(manifests.parsed_to_row(spec.id, None, exc.kind, text))
        manifests.write_jsonl(out_dir / "parsed.jsonl", parsed_rows)
        artifacts.append("parsed.jsonl")

        report_obj = _evaluate(states, config, errors)
        manifests.write_json(out_dir / "report.json", report_obj)
        artifacts.append("report.json")

    if errors:
        manifests.write_jsonl(out_dir / "errors.jsonl", [e.to_row() for e in errors])
        artifacts.append("errors.jsonl")
        logger.warning("%d sample(s) failed; see errors.jsonl", len(errors))

    return PipelineResult(out_dir=out_dir, artifacts=artifacts, errors=errors, report=report_obj)


def _evaluate(states: list[_SampleState], config: PipelineConfig, errors: list[StageError]) -> dict:
    live = [s for s in states if not s.failed and s.has_response]
    verdicts = [s.response for s in live]
    scores = [s.score for s in live]
    truth = [0 if s.spec.operation == "none" else 1 for s in live]

    detection = metrics.detection_eval(verdicts, scores, truth) if live else None

    loc_records = []
    for state in live:
        word_scores = tuple(p.probability for p in state.priors)
        labels = _word_labels(state)
        if len(word_scores) != len(labels):
            errors.append(
                StageError(
                    state.spec.id,
                    "eval",
                    f"{len(word_scores)} aligned words vs {len(labels)} edited tokens",
                )
            )
            continue
        if state.response is None:
            predicted = None
        elif state.response.verdict is Verdict.BONA_FIDE:
            predicted = ""
        else:
            predicted = state.response.edited_words
        truth_words = state.plan.reported_words if state.plan is not None else ""
        loc_records.append(
            LocalizationRecord(
                id=state.spec.id,
                word_scores=word_scores,
                word_labels=labels,
                predicted_words=predicted,
                truth_words=truth_words,
            )
        )
    localization = (
        metrics.localization_eval(loc_records, config.threshold) if loc_records else None
    )

    return {
        "detection": detection.to_dict() if detection else None,
        "localization": localization.to_dict() if localization else None,
        "samples": len(states),
        "evaluated": len(live),
        "errors": len(errors),
    }
