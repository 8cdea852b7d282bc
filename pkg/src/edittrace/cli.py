"""Command-line interface.

Subcommands: plan, prior, prompt, parse, eval, loss, pipeline, version.
Every stage reads/writes the JSONL formats documented in the README, so the
stages can be run one at a time or end to end via ``pipeline``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from edittrace import __version__, answer_contract, manifests, metrics, prior
from edittrace.acoustic_loss import (
    FeatureSequence,
    LossConfig,
    SpeechLabel,
    consistency_loss,
    descent_demo,
    gradient_check,
    read_feature_matrix,
)
from edittrace.answer_contract import PromptStrategy
from edittrace.llm_client import ClientConfig, HttpLlmClient
from edittrace.manifests import ManifestError
from edittrace.metrics import LocalizationRecord
from edittrace.pipeline import PipelineConfig, plan_corpus, run_pipeline
from edittrace.prior import AggregationMethod, ScoreReduction


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=PipelineConfig().workers)
    parser.add_argument("--batch-size", type=int, default=PipelineConfig().batch_size)
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])


def _config_from_args(args) -> PipelineConfig:
    return PipelineConfig(
        workers=args.workers,
        batch_size=args.batch_size,
        max_retries=getattr(args, "max_retries", PipelineConfig().max_retries),
        strategy=PromptStrategy(getattr(args, "strategy", PipelineConfig().strategy.value)),
        seed=args.seed,
        aggregation=AggregationMethod(getattr(args, "method", AggregationMethod.MEAN.value)),
        threshold=getattr(args, "threshold", 0.5),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edittrace")
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="generate validated edit plans for a corpus manifest")
    p_plan.add_argument("--in", dest="manifest", required=True)
    p_plan.add_argument("--out", required=True)
    p_plan.add_argument("--max-retries", type=int, default=PipelineConfig().max_retries)
    p_plan.add_argument("--mock-llm", dest="mock_llm", default=None,
                        help="JSONL script of per-sample replies instead of a live service")
    _add_common(p_plan)

    p_prior = sub.add_parser("prior", help="aggregate frame probabilities into word priors")
    p_prior.add_argument("--frames", required=True)
    p_prior.add_argument("--align", required=True)
    p_prior.add_argument("--method", default="mean", choices=[m.value for m in AggregationMethod])
    p_prior.add_argument("--reduction", default="max", choices=[r.value for r in ScoreReduction])
    p_prior.add_argument("--out", required=True)
    _add_common(p_prior)

    p_prompt = sub.add_parser("prompt", help="build system/user prompts, optionally prior-injected")
    p_prompt.add_argument("--strategy", default="detailed",
                          choices=[s.value for s in PromptStrategy])
    p_prompt.add_argument("--priors", default=None)
    p_prompt.add_argument("--ids", default=None,
                          help="manifest whose ids to prompt when no priors file is given")
    p_prompt.add_argument("--out", required=True)
    _add_common(p_prompt)

    p_parse = sub.add_parser("parse", help="parse model answers against the strict templates")
    p_parse.add_argument("--in", dest="responses", required=True)
    p_parse.add_argument("--out", required=True)
    p_parse.add_argument("--violations", default=None)
    _add_common(p_parse)

    p_eval = sub.add_parser("eval", help="score parsed answers at a chosen granularity")
    p_eval.add_argument("--parsed", required=True)
    p_eval.add_argument("--priors", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--granularity", required=True, choices=["detection", "localization"])
    p_eval.add_argument("--threshold", type=float, default=0.5)
    p_eval.add_argument("--out", required=True)
    _add_common(p_eval)

    p_loss = sub.add_parser("loss", help="evaluate the acoustic consistency loss on a feature file")
    p_loss.add_argument("--features", required=True)
    p_loss.add_argument("--label", required=True, choices=[l.value for l in SpeechLabel])
    p_loss.add_argument("--margin", type=float, default=LossConfig().margin)
    p_loss.add_argument("--topk", type=float, default=LossConfig().topk_fraction)
    p_loss.add_argument("--lam", type=float, default=LossConfig().lam)
    p_loss.add_argument("--gradcheck", action="store_true")
    p_loss.add_argument("--demo", action="store_true")
    p_loss.add_argument("--steps", type=int, default=200)
    p_loss.add_argument("--lr", type=float, default=0.1)
    p_loss.add_argument("--out", required=True)
    _add_common(p_loss)

    p_pipe = sub.add_parser("pipeline", help="run plan -> prior -> prompt -> parse -> eval")
    p_pipe.add_argument("--manifest", required=True)
    p_pipe.add_argument("--frames", required=True)
    p_pipe.add_argument("--align", required=True)
    p_pipe.add_argument("--responses", default=None)
    p_pipe.add_argument("--mock-llm", dest="mock_llm", default=None)
    p_pipe.add_argument("--out-dir", required=True)
    p_pipe.add_argument("--max-retries", type=int, default=PipelineConfig().max_retries)
    p_pipe.add_argument("--strategy", default="detailed",
                        choices=[s.value for s in PromptStrategy])
    p_pipe.add_argument("--method", default="mean", choices=[m.value for m in AggregationMethod])
    p_pipe.add_argument("--threshold", type=float, default=0.5)
    _add_common(p_pipe)

    p_version = sub.add_parser("version", help="print the tool version and effective defaults")
    _add_common(p_version)

    return parser


def _cmd_plan(args) -> int:
    samples = manifests.load_manifest(args.manifest)
    config = _config_from_args(args)
    mock_script = manifests.load_mock_script(args.mock_llm) if args.mock_llm else None
    client = None if mock_script is not None else HttpLlmClient(ClientConfig.from_env())
    states, errors = plan_corpus(samples, config, client, mock_script)
    rows = [
        manifests.plan_to_row(s.spec, s.plan, s.edited) for s in states if not s.failed
    ]
    manifests.write_jsonl(args.out, rows)
    for error in errors:
        print(json.dumps(error.to_row()), file=sys.stderr)
    return 0


def _cmd_prior(args) -> int:
    frames = manifests.load_frames(args.frames)
    boundaries = manifests.load_boundaries(args.align)
    method = AggregationMethod(args.method)
    reduction = ScoreReduction(args.reduction)
    rows = []
    for utt_id, frame_seq in frames.items():
        if utt_id not in boundaries:
            raise ManifestError(f"no word boundaries for id {utt_id!r} in {args.align}")
        priors = prior.aggregate(frame_seq, boundaries[utt_id], method)
        rows.append(manifests.priors_to_row(utt_id, priors, prior.utterance_score(priors, reduction)))
    manifests.write_jsonl(args.out, rows)
    return 0


def _cmd_prompt(args) -> int:
    strategy = PromptStrategy(args.strategy)
    rows = []
    if args.priors:
        for utt_id, (priors, _score) in manifests.load_priors(args.priors).items():
            bundle = answer_contract.build_prompt(strategy, prior.format_prior_prompt(priors))
            rows.append({"id": utt_id, "system": bundle.system, "user": bundle.user})
    elif args.ids:
        for spec in manifests.load_manifest(args.ids):
            bundle = answer_contract.build_prompt(strategy, None)
            rows.append({"id": spec.id, "system": bundle.system, "user": bundle.user})
    else:
        raise ManifestError("prompt needs --priors or --ids")
    manifests.write_jsonl(args.out, rows)
    return 0


def _cmd_parse(args) -> int:
    responses = manifests.load_responses(args.responses)
    parsed_rows, violation_rows = [], []
    for utt_id, text in responses.items():
        try:
            response = answer_contract.parse_response(text)
            parsed_rows.append(manifests.parsed_to_row(utt_id, response))
        except answer_contract.ParseError as exc:
            parsed_rows.append(manifests.parsed_to_row(utt_id, None, exc.kind, text))
            violation_rows.append({"id": utt_id, "kind": exc.kind, "text": text})
    manifests.write_jsonl(args.out, parsed_rows)
    if args.violations:
        manifests.write_jsonl(args.violations, violation_rows)
    return 0


def _cmd_eval(args) -> int:
    parsed = manifests.load_parsed(args.parsed)
    priors = manifests.load_priors(args.priors)
    truth = manifests.load_truth(args.truth)
    ids = [utt_id for utt_id in truth if utt_id in parsed]
    if not ids:
        raise ManifestError("no ids shared between parsed and truth inputs")
    for utt_id in ids:
        if utt_id not in priors:
            raise metrics.MissingScoreError(f"id {utt_id!r} has no prior score")

    if args.granularity == "detection":
        report = metrics.detection_eval(
            [parsed[u] for u in ids],
            [priors[u][1] for u in ids],
            [truth[u].label for u in ids],
        )
    else:
        records = []
        for utt_id in ids:
            word_priors, _score = priors[utt_id]
            response = parsed[utt_id]
            if response is None:
                predicted = None
            elif response.verdict is answer_contract.Verdict.BONA_FIDE:
                predicted = ""
            else:
                predicted = response.edited_words
            records.append(
                LocalizationRecord(
                    id=utt_id,
                    word_scores=tuple(p.probability for p in word_priors),
                    word_labels=truth[utt_id].word_labels,
                    predicted_words=predicted,
                    truth_words=truth[utt_id].truth_words,
                )
            )
        report = metrics.localization_eval(records, args.threshold)
    manifests.write_json(args.out, report.to_dict())
    return 0


def _cmd_loss(args) -> int:
    values = read_feature_matrix(args.features)
    features = FeatureSequence(values, SpeechLabel(args.label))
    cfg = LossConfig(margin=args.margin, topk_fraction=args.topk, lam=args.lam)
    result = consistency_loss(features, cfg)
    out = {
        "label": features.label.value,
        "value": result.value,
        "distances": [float(d) for d in result.distances],
        "topk_indices": list(result.topk_indices),
        "config": {"margin": cfg.margin, "topk": cfg.topk_fraction, "lambda": cfg.lam},
    }
    if args.gradcheck:
        out["gradcheck_max_rel_error"] = gradient_check(features, cfg)
    if args.demo:
        trajectory = descent_demo(features, cfg, steps=args.steps, step_size=args.lr)
        out["demo"] = [
            {"step": p.step, "value": p.value, "mean_distance": p.mean_distance,
             "topk_mean_distance": p.topk_mean_distance}
            for p in trajectory
        ]
    manifests.write_json(args.out, out)
    return 0


def _cmd_pipeline(args) -> int:
    config = _config_from_args(args)
    result = run_pipeline(
        config,
        manifest_path=args.manifest,
        frames_path=args.frames,
        alignments_path=args.align,
        out_dir=args.out_dir,
        responses_path=args.responses,
        mock_script_path=args.mock_llm,
    )
    print(json.dumps({
        "out_dir": str(result.out_dir),
        "artifacts": result.artifacts,
        "errors": len(result.errors),
    }))
    return 0


def version_and_config_dump(args) -> str:
    """Tool version plus every paper-anchored default, resolved from flags."""
    loss = LossConfig()
    dump = {
        "tool": "edittrace",
        "version": __version__,
        "seed": args.seed,
        "config": {
            "workers": args.workers,
            "batch_size": args.batch_size,
            "max_retries": PipelineConfig().max_retries,
            "strategy": PipelineConfig().strategy.value,
            "margin": loss.margin,
            "topk": loss.topk_fraction,
            "lambda": loss.lam,
        },
    }
    return json.dumps(dump, indent=2)


def _cmd_version(args) -> int:
    print(version_and_config_dump(args))
    return 0


_COMMANDS = {
    "plan": _cmd_plan,
    "prior": _cmd_prior,
    "prompt": _cmd_prompt,
    "parse": _cmd_parse,
    "eval": _cmd_eval,
    "loss": _cmd_loss,
    "pipeline": _cmd_pipeline,
    "version": _cmd_version,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper()))
    try:
        return _COMMANDS[args.command](args)
    except (ManifestError, metrics.MissingScoreError, OSError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
