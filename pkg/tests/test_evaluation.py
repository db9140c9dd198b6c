"""Scoring pipeline: repeat rules, outcome mapping, fitness, caching."""

import threading

import pytest

from evoproof.backends.toy import ToyBackend
from evoproof.evaluation import (
    Backend,
    EvalCache,
    EvalOutcome,
    FailureKind,
    Individual,
    Population,
    ScriptResult,
    StepResult,
    StepStatus,
    assign_fitness,
    check_repeat_rules,
    evaluate,
    evaluate_population,
)
from evoproof.genome import Chromosome, parse_tactic_base, parse_theorem

# index 5 excludes index 3 so a complete prefix can end exactly at a
# violation; the other constraints mirror the shared tiny base
RULES_BASE = parse_tactic_base(
    "intros\tnorepeat\n"
    "split\n"
    "assumption\n"
    "exact H0\n"
    "left\texcl=1\n"
    "trivial\texcl=3\n",
    origin="<rules>",
)

NESTED = parse_theorem("[statement]\nTheorem nested : A -> B -> A /\\ (B \\/ C).\n")


class CountingBackend(Backend):
    """ToyBackend wrapper that counts run_script invocations."""

    def __init__(self):
        self._inner = ToyBackend()
        self.calls = 0
        self._lock = threading.Lock()

    @property
    def info(self):
        return self._inner.info

    def run_script(self, statement, tactics):
        with self._lock:
            self.calls += 1
        return self._inner.run_script(statement, tactics)


class FaultyBackend(Backend):
    def __init__(self, result):
        self._result = result

    @property
    def info(self):
        return {"id": "faulty", "version": "0", "completion_patterns": []}

    def run_script(self, statement, tactics):
        return self._result


class TestRepeatRules:
    def test_clean_sequence(self):
        assert check_repeat_rules(Chromosome((1, 2, 1, 2)), RULES_BASE) is None

    def test_norepeat_violation_position(self):
        assert check_repeat_rules(Chromosome((1, 0, 0, 2)), RULES_BASE) == 2

    def test_repeat_allowed_without_flag(self):
        assert check_repeat_rules(Chromosome((2, 2, 2)), RULES_BASE) is None

    def test_excluded_pair_both_orders(self):
        assert check_repeat_rules(Chromosome((1, 4)), RULES_BASE) == 1
        assert check_repeat_rules(Chromosome((4, 1)), RULES_BASE) == 1

    def test_first_violation_wins(self):
        assert check_repeat_rules(Chromosome((2, 4, 1, 0, 0)), RULES_BASE) == 2

    def test_single_gene_never_violates(self):
        assert check_repeat_rules(Chromosome((0,)), RULES_BASE) is None


class TestEvaluate:
    def run(self, genes):
        return evaluate(Chromosome(genes), RULES_BASE, NESTED, ToyBackend())

    def test_complete_via_accepted_qed(self):
        # split, assumption, left, exact H0 closes the goal exactly
        outcome = self.run((1, 2, 4, 3))
        assert outcome.complete
        assert outcome.passed_count == 4
        assert outcome.failure is FailureKind.NONE

    def test_complete_via_completion_signal(self):
        # the goal closes after four tactics; the fifth draws the signal
        outcome = self.run((1, 2, 4, 3, 1, 1))
        assert outcome.complete
        assert outcome.passed_count == 4

    def test_tactic_error_scores_passed_prefix(self):
        # exact H0 cannot close the remaining disjunction subgoal
        outcome = self.run((1, 2, 3, 3))
        assert not outcome.complete
        assert outcome.failure is FailureKind.TACTIC_ERROR
        assert outcome.passed_count == 2

    def test_repeat_violation_scores_clean_prefix(self):
        outcome = self.run((1, 2, 0, 0, 3))
        assert not outcome.complete
        assert outcome.failure is FailureKind.REPEAT_VIOLATION
        assert outcome.passed_count == 3

    def test_violation_beats_qed_of_truncated_prefix(self):
        # the prefix before the violation proves the theorem, but the
        # chromosome as written is still judged by its first bad event
        genes = (1, 2, 4, 3, 5)
        assert check_repeat_rules(Chromosome(genes), RULES_BASE) == 4
        outcome = self.run(genes)
        assert not outcome.complete
        assert outcome.failure is FailureKind.REPEAT_VIOLATION
        assert outcome.passed_count == 4

    def test_completion_signal_beats_later_violation(self):
        # completion fires inside the truncated prefix, before the
        # violating position is ever reached
        genes = (1, 2, 4, 3, 1, 0, 0)
        assert check_repeat_rules(Chromosome(genes), RULES_BASE) == 6
        outcome = self.run(genes)
        assert outcome.complete
        assert outcome.passed_count == 4

    def test_failure_inside_truncated_prefix_wins(self):
        outcome = self.run((1, 3, 0, 0))
        assert outcome.failure is FailureKind.TACTIC_ERROR
        assert outcome.passed_count == 1

    def test_backend_fault_scores_zero(self):
        outcome = evaluate(
            Chromosome((1, 2)),
            RULES_BASE,
            NESTED,
            FaultyBackend(ScriptResult(steps=(), fault="boom")),
        )
        assert outcome.failure is FailureKind.BACKEND_FAULT
        assert outcome.passed_count == 0

    def test_contract_breach_becomes_fault(self):
        # backend claims success but returned verdicts for too few steps
        short = ScriptResult(
            steps=(StepResult(0, StepStatus.PASSED),), qed_accepted=True
        )
        outcome = evaluate(Chromosome((1, 2)), RULES_BASE, NESTED, FaultyBackend(short))
        assert outcome.failure is FailureKind.BACKEND_FAULT

    def test_timeout_failure_kind(self):
        timed = ScriptResult(
            steps=(
                StepResult(0, StepStatus.PASSED),
                StepResult(1, StepStatus.FAILED, "slow", timed_out=True),
            )
        )
        outcome = evaluate(Chromosome((1, 2)), RULES_BASE, NESTED, FaultyBackend(timed))
        assert outcome.failure is FailureKind.TIMEOUT
        assert outcome.passed_count == 0


class TestAssignFitness:
    def test_incomplete_scores_passed_count(self):
        outcome = EvalOutcome(passed_count=7, complete=False)
        assert assign_fitness(outcome, 1000) == 7

    def test_complete_rewards_short_proofs(self):
        shorter = EvalOutcome(passed_count=4, complete=True)
        longer = EvalOutcome(passed_count=9, complete=True)
        assert assign_fitness(shorter, 1000) == 996
        assert assign_fitness(longer, 1000) == 991
        assert assign_fitness(shorter, 1000) > assign_fitness(longer, 1000)

    def test_complete_outcome_cannot_carry_failure(self):
        with pytest.raises(ValueError):
            EvalOutcome(passed_count=1, complete=True, failure=FailureKind.TACTIC_ERROR)


class TestEvaluatePopulation:
    def population(self, gene_lists):
        return Population(
            members=tuple(
                Individual(chromosome=Chromosome(tuple(genes))) for genes in gene_lists
            ),
            generation=0,
        )

    def test_duplicates_cost_one_backend_call(self):
        backend = CountingBackend()
        population = self.population([(1, 2), (1, 2), (1, 3), (1, 2)])
        evaluated = evaluate_population(
            population, RULES_BASE, NESTED, backend, completion_base=1000
        )
        assert backend.calls == 2
        assert all(member.evaluated for member in evaluated.members)
        assert evaluated.members[0].outcome == evaluated.members[1].outcome

    def test_cache_persists_across_sweeps(self):
        backend = CountingBackend()
        cache = EvalCache()
        population = self.population([(1, 2), (1, 3)])
        evaluate_population(
            population, RULES_BASE, NESTED, backend, completion_base=1000, cache=cache
        )
        evaluate_population(
            population, RULES_BASE, NESTED, backend, completion_base=1000, cache=cache
        )
        assert backend.calls == 2
        assert cache.hits == 2
        assert cache.misses == 2

    def test_worker_parity(self):
        gene_lists = [
            (1, 2, 4, 3),
            (1, 2, 3, 3),
            (1, 2, 0, 0, 3),
            (2, 2, 2, 2),
            (1, 2, 4, 3, 1, 1),
            (1, 2, 4, 3),
        ]
        serial = evaluate_population(
            self.population(gene_lists),
            RULES_BASE,
            NESTED,
            CountingBackend(),
            completion_base=1000,
        )
        threaded_backend = CountingBackend()
        threaded = evaluate_population(
            self.population(gene_lists),
            RULES_BASE,
            NESTED,
            threaded_backend,
            completion_base=1000,
            workers=4,
        )
        assert [m.fitness for m in serial.members] == [m.fitness for m in threaded.members]
        assert [m.outcome for m in serial.members] == [m.outcome for m in threaded.members]
        assert threaded_backend.calls == 5

    def test_fitness_attached_matches_outcome(self):
        population = self.population([(1, 2, 4, 3), (1, 2)])
        evaluated = evaluate_population(
            population, RULES_BASE, NESTED, ToyBackend(), completion_base=1000
        )
        for member in evaluated.members:
            assert member.fitness == assign_fitness(member.outcome, 1000)
