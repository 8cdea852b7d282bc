# Run the whole pipeline over the shipped 20-sample fixture: plan edits with
# the scripted mock model, aggregate priors, build prompts, parse the
# simulated answers, and score both granularities.

import json
import tempfile
from pathlib import Path

from edittrace import PipelineConfig, run_pipeline

fixture = Path(__file__).parent.parent / "fixtures" / "pipeline"
out_dir = Path(tempfile.mkdtemp(prefix="edittrace_demo_"))

result = run_pipeline(
    PipelineConfig(),
    manifest_path=fixture / "manifest.jsonl",
    frames_path=fixture / "frames.jsonl",
    alignments_path=fixture / "words.jsonl",
    out_dir=out_dir,
    responses_path=fixture / "responses.jsonl",
    mock_script_path=fixture / "mock_script.jsonl",
)

print("artifacts written to", out_dir)
for name in result.artifacts:
    print("  ", name)
print("sample-level errors:", len(result.errors))
print()

plans = [json.loads(line) for line in (out_dir / "plans.jsonl").open()]
flagged = [p["id"] for p in plans if not p["available"]]
print(f"{len(plans)} plans; flagged by the heuristic fallback: {flagged}")

parsed = [json.loads(line) for line in (out_dir / "parsed.jsonl").open()]
violations = [p["id"] for p in parsed if "violation" in p]
print(f"{len(parsed)} parsed answers; contract violations: {violations}")
print()

print("report.json:")
print(json.dumps(result.report, indent=2, ensure_ascii=False))
