"""Edit-plan tests: diff oracle, classification, validation, fallback, retries."""

import random

import pytest

from edittrace.edit_plan import (
    EditOperation,
    EditPlan,
    Language,
    MultiRegionError,
    NoEditError,
    RegionOutOfBoundsError,
    RemovedMismatchError,
    SourceTooShortError,
    TokenSequence,
    Violation,
    apply_plan,
    classify_edit,
    generate_with_retries,
    heuristic_fallback,
    validate_plan,
    word_diff,
)
from edittrace.llm_client import ClientHttpError, MockLlmClient


def en(text: str) -> TokenSequence:
    return TokenSequence.from_text(text, Language.ENGLISH)


def zh(text: str) -> TokenSequence:
    return TokenSequence.from_text(text, Language.CHINESE)


def lcs_length_bruteforce(a: tuple, b: tuple) -> int:
    """Independent oracle: enumerate every subsequence of the shorter side."""
    if len(a) > len(b):
        a, b = b, a
    best = 0
    for mask in range(1 << len(a)):
        subseq = [a[i] for i in range(len(a)) if mask >> i & 1]
        it = iter(b)
        if all(tok in it for tok in subseq):
            best = max(best, len(subseq))
    return best


def replay_hunks(hunks, source: TokenSequence, target: TokenSequence) -> tuple:
    out = list(source.tokens)
    for hunk in reversed(hunks):
        out[hunk.src_start:hunk.src_end] = target.tokens[hunk.tgt_start:hunk.tgt_end]
    return tuple(out)


class TestWordDiff:
    def test_identical_inputs_give_empty_diff(self):
        assert word_diff(en("the cat sat"), en("the cat sat")) == []

    def test_single_insertion(self):
        hunks = word_diff(en("the cat sat"), en("the black cat sat"))
        assert len(hunks) == 1
        h = hunks[0]
        assert (h.src_start, h.src_end) == (1, 1)
        assert (h.tgt_start, h.tgt_end) == (1, 2)

    def test_insertion_of_not(self):
        hunks = word_diff(en("he did go"), en("he did not go"))
        assert len(hunks) == 1
        assert (hunks[0].src_start, hunks[0].src_end) == (2, 2)

    def test_ambiguous_insertion_anchors_leftmost(self):
        hunks = word_diff(en("a a"), en("a a a"))
        assert hunks == word_diff(en("a a"), en("a a a"))  # deterministic
        assert hunks[0].src_start == 0

    def test_language_mismatch_rejected(self):
        with pytest.raises(ValueError):
            word_diff(en("a b"), zh("你好"))

    def test_hunks_replay_and_are_lcs_minimal(self):
        rng = random.Random(1234)
        alphabet = [f"w{i}" for i in range(6)]
        for _ in range(300):
            src = tuple(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
            tgt = tuple(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
            s = TokenSequence(src)
            t = TokenSequence(tgt)
            hunks = word_diff(s, t)
            assert replay_hunks(hunks, s, t) == tgt
            # disjoint and sorted
            for a, b in zip(hunks, hunks[1:]):
                assert a.src_end <= b.src_start
            # minimality: matched tokens equal the brute-force LCS length
            matched = len(src) - sum(h.src_end - h.src_start for h in hunks)
            assert matched == lcs_length_bruteforce(src, tgt)


class TestClassifyEdit:
    def test_add(self):
        s, t = en("the cat sat"), en("the black cat sat")
        plan = classify_edit(word_diff(s, t), s, t)
        assert plan.operation is EditOperation.ADD
        assert plan.inserted == ("black",)
        assert plan.removed == ()
        assert plan.available

    def test_zero_hunks_is_no_edit(self):
        s = en("the cat sat")
        with pytest.raises(NoEditError):
            classify_edit([], s, s)

    def test_two_regions_rejected(self):
        s, t = en("a b c d e"), en("a x c y e")
        hunks = word_diff(s, t)
        assert len(hunks) == 2
        with pytest.raises(MultiRegionError):
            classify_edit(hunks, s, t)

    def test_region_is_contiguous_by_reconstruction(self):
        rng = random.Random(99)
        alphabet = [f"t{i}" for i in range(30)]
        for _ in range(200):
            src = tuple(rng.sample(alphabet, rng.randint(3, 8)))
            s = TokenSequence(src)
            start = rng.randint(0, len(src) - 1)
            span = rng.randint(1, len(src) - start)
            t = apply_plan(
                EditPlan(EditOperation.MODIFY, start, src[start:start + span], ("fresh1", "fresh2")),
                s,
            )
            plan = classify_edit(word_diff(s, t), s, t)
            # single contiguous region: applying it reproduces the target exactly
            assert apply_plan(plan, s).tokens == t.tokens


class TestValidatePlan:
    def test_interior_deletion_valid(self):
        s = en("a b c d")
        plan = EditPlan(EditOperation.DELETE, 1, ("b", "c"), ())
        assert validate_plan(plan, s).valid

    def test_deletion_at_start_rejected(self):
        s = en("a b c d")
        plan = EditPlan(EditOperation.DELETE, 0, ("a",), ())
        report = validate_plan(plan, s)
        assert report.violations == (Violation.BOUNDARY_DELETION,)
        assert not report.valid

    def test_deletion_touching_end_rejected(self):
        s = en("a b c d")
        plan = EditPlan(EditOperation.DELETE, 3, ("d",), ())
        assert Violation.BOUNDARY_DELETION in validate_plan(plan, s).violations

    def test_modify_length_ratio_bounds(self):
        s = en("a b c d e f")
        # removed 2 tokens: inserted length must lie in [1, 4]
        for n_inserted, ok in [(1, True), (2, True), (4, True), (5, False), (7, False)]:
            plan = EditPlan(
                EditOperation.MODIFY, 1, ("b", "c"), tuple(f"x{i}" for i in range(n_inserted))
            )
            report = validate_plan(plan, s)
            assert report.valid is ok, (n_inserted, report)
            if not ok:
                assert report.violations == (Violation.LENGTH_MISMATCH,)

    def test_ratio_lower_bound_uses_ceil(self):
        s = en("a b c d e")
        # removed 3: lower bound is ceil(1.5) = 2
        short = EditPlan(EditOperation.MODIFY, 1, ("b", "c", "d"), ("x",))
        assert not validate_plan(short, s).valid
        ok = EditPlan(EditOperation.MODIFY, 1, ("b", "c", "d"), ("x", "y"))
        assert validate_plan(ok, s).valid


class TestApplyPlan:
    def test_add(self):
        plan = EditPlan(EditOperation.ADD, 1, (), ("black",))
        assert apply_plan(plan, en("the cat sat")).text == "the black cat sat"

    def test_modify(self):
        plan = EditPlan(EditOperation.MODIFY, 1, ("cat",), ("dog",))
        assert apply_plan(plan, en("the cat sat")).text == "the dog sat"

    def test_region_out_of_bounds(self):
        plan = EditPlan(EditOperation.DELETE, 5, ("x",), ())
        with pytest.raises(RegionOutOfBoundsError):
            apply_plan(plan, en("a b c"))

    def test_removed_mismatch(self):
        plan = EditPlan(EditOperation.DELETE, 1, ("dog",), ())
        with pytest.raises(RemovedMismatchError):
            apply_plan(plan, en("the cat sat"))


class TestHeuristicFallback:
    def test_delete_removes_middle_token(self):
        plan = heuristic_fallback(en("a b c d e"), EditOperation.DELETE)
        assert plan.operation is EditOperation.DELETE
        assert plan.region_start == 2
        assert plan.removed == ("c",)
        assert plan.available is False

    def test_too_short_rejected(self):
        with pytest.raises(SourceTooShortError):
            heuristic_fallback(en("a b"), EditOperation.DELETE)

    def test_modify_uses_placeholder(self):
        plan = heuristic_fallback(en("a b c"), EditOperation.MODIFY)
        assert plan.removed == ("b",)
        assert plan.inserted == ("something",)
        assert plan.available is False

    def test_placeholder_collision_avoided(self):
        plan = heuristic_fallback(en("a something c"), EditOperation.MODIFY)
        assert plan.inserted != plan.removed

    @pytest.mark.parametrize("operation", list(EditOperation))
    @pytest.mark.parametrize("length", [3, 4, 5, 9, 12])
    def test_every_fallback_validates_and_applies(self, operation, length):
        source = TokenSequence(tuple(f"w{i}" for i in range(length)))
        plan = heuristic_fallback(source, operation)
        assert plan.available is False
        assert validate_plan(plan, source).valid
        apply_plan(plan, source)  # must not raise

    def test_chinese_fallback(self):
        plan = heuristic_fallback(zh("我今天去学校"), EditOperation.MODIFY)
        assert plan.inserted == ("某",)
        assert validate_plan(plan, zh("我今天去学校")).valid


class TestGenerateWithRetries:
    def test_first_attempt_valid(self):
        client = MockLlmClient(["the black cat sat"])
        plan = generate_with_retries(client, en("the cat sat"), EditOperation.ADD)
        assert plan.available
        assert plan.inserted == ("black",)
        assert client.call_count == 1

    def test_falls_back_after_exhausting_retries(self):
        # every reply edits two disjoint regions
        client = MockLlmClient(["a x c y e"] * 5)
        plan = generate_with_retries(client, en("a b c d e"), EditOperation.MODIFY, max_retries=5)
        assert plan.available is False
        assert client.call_count == 5

    def test_at_most_max_retries_requests(self):
        client = MockLlmClient(["a b c d e"] * 10)  # identical reply: NoEdit every time
        generate_with_retries(client, en("a b c d e"), EditOperation.ADD, max_retries=3)
        assert client.call_count == 3

    def test_client_error_propagates(self):
        class FailingClient:
            def complete(self, request):
                raise ClientHttpError(500)

        with pytest.raises(ClientHttpError):
            generate_with_retries(FailingClient(), en("a b c"), EditOperation.ADD)

    def test_retry_then_success(self):
        client = MockLlmClient(["a x c y e", "a b see d e"])
        plan = generate_with_retries(client, en("a b c d e"), EditOperation.MODIFY)
        assert plan.available
        assert plan.operation is EditOperation.MODIFY
        assert client.call_count == 2

    def test_empty_reply_counts_as_attempt(self):
        client = MockLlmClient(["", "the black cat sat"])
        plan = generate_with_retries(client, en("the cat sat"), EditOperation.ADD)
        assert plan.inserted == ("black",)
        assert client.call_count == 2

    def test_boundary_deletion_rejected_until_fallback(self):
        # model keeps deleting the first word
        client = MockLlmClient(["b c d e"] * 5)
        plan = generate_with_retries(client, en("a b c d e"), EditOperation.DELETE)
        assert plan.available is False
        assert validate_plan(plan, en("a b c d e")).valid


class TestRoundtripProperty:
    def test_roundtrip_on_unique_token_edits(self):
        """apply(classify(diff)) == target for 1000 random single-region edits."""
        rng = random.Random(2024)
        successes = 0
        for case in range(1000):
            n = rng.randint(3, 14)
            src = tuple(f"u{case}_{i}" for i in range(n))  # pairwise distinct
            s = TokenSequence(src)
            operation = rng.choice(list(EditOperation))
            if operation is EditOperation.ADD:
                start = rng.randint(0, n)
                plan = EditPlan(operation, start, (), (f"ins{case}a", f"ins{case}b")[: rng.randint(1, 2)])
            elif operation is EditOperation.DELETE:
                start = rng.randint(1, n - 2)
                span = rng.randint(1, n - 1 - start)
                plan = EditPlan(operation, start, src[start:start + span], ())
            else:
                start = rng.randint(0, n - 1)
                span = rng.randint(1, n - start)
                inserted = tuple(f"m{case}_{i}" for i in range(rng.randint(1, 2 * span)))
                plan = EditPlan(operation, start, src[start:start + span], inserted)
            target = apply_plan(plan, s)
            recovered = classify_edit(word_diff(s, target), s, target)
            assert apply_plan(recovered, s).tokens == target.tokens
            successes += 1
        assert successes == 1000

    def test_roundtrip_with_colliding_tokens(self):
        """With a tiny alphabet, classification may fail (multi-region), but
        whenever it succeeds the roundtrip must hold."""
        rng = random.Random(77)
        alphabet = ["a", "b", "c"]
        succeeded = 0
        for _ in range(500):
            n = rng.randint(3, 9)
            src = tuple(rng.choice(alphabet) for _ in range(n))
            s = TokenSequence(src)
            start = rng.randint(0, n - 1)
            span = rng.randint(1, n - start)
            inserted = tuple(rng.choice(alphabet) for _ in range(rng.randint(1, 3)))
            try:
                plan = EditPlan(EditOperation.MODIFY, start, src[start:start + span], inserted)
            except ValueError:
                continue
            target = apply_plan(plan, s)
            try:
                recovered = classify_edit(word_diff(s, target), s, target)
            except (NoEditError, MultiRegionError):
                continue
            assert apply_plan(recovered, s).tokens == target.tokens
            succeeded += 1
        assert succeeded > 150  # enough cases classify for the property to bite


class TestTokenSequence:
    def test_english_roundtrip(self):
        assert en("  the cat   sat ").text == "the cat sat"

    def test_chinese_roundtrip(self):
        assert zh("我今天去学校").text == "我今天去学校"

    def test_empty_token_rejected(self):
        with pytest.raises(ValueError):
            TokenSequence(("a", "", "b"))

    def test_plan_structural_invariants(self):
        with pytest.raises(ValueError):
            EditPlan(EditOperation.ADD, 0, ("x",), ("y",))
        with pytest.raises(ValueError):
            EditPlan(EditOperation.DELETE, 0, (), ())
        with pytest.raises(ValueError):
            EditPlan(EditOperation.MODIFY, 0, ("x",), ())
