from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from promptevo.core import (
    EmptyEvaluationSet,
    FailurePhase,
    FailureRecord,
    MethodResult,
    MethodStatus,
    Origin,
    Prompt,
    PromptPopulation,
    Rule,
    RuleSet,
    ScoreReport,
    aggregate_coverage,
    fitness,
    select_top,
)


def report(lc: float, bc: float) -> ScoreReport:
    return ScoreReport("p", lc, bc, ())


def seed(pid: str, text: str | None = None) -> Prompt:
    return Prompt(pid, text or f"instruction {pid}")


def gen(pid: str, iteration: int) -> Prompt:
    return Prompt(pid, f"instruction {pid}", Origin.generated(iteration, "d"), ("s0",))


def passed(fid: str, lines: tuple[int, int], branches: tuple[int, int] = (0, 0)) -> MethodResult:
    return MethodResult(fid, MethodStatus.PASSED, lines[0], lines[1], branches[0], branches[1])


class TestFitness:
    def test_mean_of_coverages(self):
        assert fitness(report(50.0, 30.0)) == 40.0

    def test_zero(self):
        assert fitness(report(0.0, 0.0)) == 0.0

    def test_reported_headline_numbers(self):
        assert fitness(report(53.80, 41.84)) == pytest.approx(47.82, abs=1e-9)

    @given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 100))
    def test_monotone_in_each_component(self, lc, bc, bump):
        lc2 = min(100.0, lc + bump)
        assert fitness(report(lc2, bc)) >= fitness(report(lc, bc))
        assert fitness(report(bc, lc2)) >= fitness(report(bc, lc))


class TestAggregateCoverage:
    def test_symmetric_halves(self):
        assert aggregate_coverage([passed("a", (5, 10)), passed("b", (5, 10))])[0] == 50.0

    def test_full(self):
        assert aggregate_coverage([passed("a", (10, 10))])[0] == 100.0

    def test_micro_average_and_branchless_methods(self):
        lc, bc = aggregate_coverage([passed("a", (3, 10), (1, 4)), passed("b", (7, 10), (0, 0))])
        assert lc == 50.0
        assert bc == 25.0

    def test_no_branches_anywhere(self):
        assert aggregate_coverage([passed("a", (1, 2))]) == (50.0, 0.0)

    def test_empty_is_an_error(self):
        with pytest.raises(EmptyEvaluationSet, match="empty evaluation set"):
            aggregate_coverage([])

    def test_failures_keep_their_denominator(self):
        failed = MethodResult("b", MethodStatus.RUNTIME_ERROR, 0, 10, 0, 4)
        assert aggregate_coverage([passed("a", (10, 10), (4, 4)), failed]) == (50.0, 50.0)

    @given(
        st.lists(
            st.tuples(st.integers(0, 50), st.integers(1, 50), st.integers(0, 10), st.integers(0, 10)),
            min_size=2,
            max_size=12,
        ),
        st.randoms(use_true_random=False),
    )
    def test_partition_recombination(self, raw, rnd):
        results = [
            passed(f"m{i}", (min(a, b), b), (min(c, d), d)) for i, (a, b, c, d) in enumerate(raw)
        ]
        cut = rnd.randint(1, len(results) - 1)
        shuffled = results[:]
        rnd.shuffle(shuffled)
        left, right = shuffled[:cut], shuffled[cut:]
        # recombining the partition's raw counters gives the whole-set result
        merged = [
            MethodResult(
                "merged",
                MethodStatus.PASSED,
                sum(r.executed_lines for r in part),
                sum(r.total_lines for r in part),
                sum(r.executed_branches for r in part),
                sum(r.total_branches for r in part),
            )
            for part in (left, right)
        ]
        assert aggregate_coverage(merged) == pytest.approx(aggregate_coverage(results))


class TestSelectTop:
    def test_ordering(self):
        pop = PromptPopulation((seed("a"), seed("b"), seed("c")))
        assert [p.id for p in select_top(pop, {"a": 40, "b": 50, "c": 30}, 2)] == ["b", "a"]

    def test_ties_go_to_smallest_seed_id(self):
        pop = PromptPopulation((seed("s2"), seed("s0"), seed("s1")))
        assert select_top(pop, {"s0": 1, "s1": 1, "s2": 1}, 1)[0].id == "s0"

    def test_ties_prefer_earlier_iteration(self):
        pop = PromptPopulation((gen("a1", 2), gen("z9", 1)))
        assert select_top(pop, {"a1": 5, "z9": 5}, 1)[0].id == "z9"

    def test_full_population_is_reordered(self):
        pop = PromptPopulation((seed("a"), seed("b"), seed("c")))
        assert [p.id for p in select_top(pop, {"a": 1, "b": 3, "c": 2}, 3)] == ["b", "c", "a"]

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            select_top(PromptPopulation((seed("a"),)), {"a": 1}, 2)

    def test_missing_score(self):
        with pytest.raises(KeyError):
            select_top(PromptPopulation((seed("a"), seed("b"))), {"a": 1}, 1)

    @given(st.lists(st.integers(0, 3), min_size=1, max_size=8), st.randoms(use_true_random=False))
    def test_permutation_invariant(self, raw_scores, rnd):
        prompts = [seed(f"s{i}") if i % 2 else gen(f"g{i}", i % 3) for i in range(len(raw_scores))]
        scores = {p.id: s for p, s in zip(prompts, raw_scores)}
        k = rnd.randint(1, len(prompts))
        shuffled = prompts[:]
        rnd.shuffle(shuffled)
        assert select_top(prompts, scores, k) == select_top(shuffled, scores, k)


class TestValueTypes:
    def test_prompt_needs_text(self):
        with pytest.raises(ValueError):
            Prompt("a", "   ")

    def test_parents_iff_generated(self):
        with pytest.raises(ValueError):
            Prompt("a", "x", Origin.seed(), ("b",))
        with pytest.raises(ValueError):
            Prompt("a", "x", Origin.generated(1, "d1-0"), ())

    def test_population_ids_unique(self):
        with pytest.raises(ValueError):
            PromptPopulation((seed("a"), seed("a", "other")))

    def test_rule_set_requires_positive_delta(self):
        with pytest.raises(ValueError):
            RuleSet((Rule("r", "text", None, 0.0),))
        rs = RuleSet().with_rule(Rule("r", "text", "c1-0", 1.5))
        assert rs.texts == ("text",)

    def test_method_result_invariants(self):
        with pytest.raises(ValueError):
            MethodResult("m", MethodStatus.PASSED, 11, 10, 0, 0)
        with pytest.raises(ValueError):
            MethodResult("m", MethodStatus.COMPILE_ERROR, 3, 10, 0, 0)

    def test_round_trips(self):
        p = gen("p1-0", 1)
        assert Prompt.from_dict(p.to_dict()) == p
        f = FailureRecord("m", "src", "raw", "norm", FailurePhase.RUNTIME)
        r = ScoreReport.from_results("p", [passed("b", (1, 2)), passed("a", (2, 2), (1, 1))], [f])
        assert [m.focal_method_id for m in r.per_method] == ["a", "b"]
        assert ScoreReport.from_dict(r.to_dict()) == r
        rule = Rule("r1-0", "t", "c1-0", 2.0)
        assert Rule.from_dict(rule.to_dict()) == rule

    def test_random_round_trip_of_reports(self):
        rnd = random.Random(3)
        for _ in range(20):
            total = rnd.randint(1, 20)
            res = passed("m", (rnd.randint(0, total), total))
            rep = ScoreReport.from_results("p", [res])
            assert ScoreReport.from_dict(rep.to_dict()) == rep
