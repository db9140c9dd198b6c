"""Scoring of chromosomes against a proof-checking backend.

A chromosome is rendered to tactic texts and submitted tactic by tactic.
The score of an individual is the number of its own tactics the backend
accepts; chromosomes that finish the proof are rewarded inversely to their
used length.  Local repetition rules are enforced here, before anything
reaches the backend, so provers never see trivially redundant scripts.
"""

from __future__ import annotations

import enum
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .genome import (
    Chromosome,
    ContractError,
    EvoproofError,
    INTRO_TACTIC,
    TacticBase,
    TheoremStatement,
    decode,
)


class BackendUnavailable(EvoproofError):
    """The backend process or environment cannot be brought up at all."""


class StepStatus(enum.Enum):
    PASSED = "passed"
    FAILED = "failed"
    COMPLETION_SIGNAL = "completion_signal"


@dataclass(frozen=True, slots=True)
class StepResult:
    """Outcome of one submitted tactic.

    Position 0 is the injected ``intros``; positions 1..n are the
    chromosome's own tactics in order.
    """

    position: int
    status: StepStatus
    message: str = ""
    timed_out: bool = False


@dataclass(frozen=True, slots=True)
class ScriptResult:
    """Everything a backend reports about one script submission.

    ``qed_accepted`` is set only when every submitted tactic passed and the
    closing ``Qed.`` was therefore attempted.  ``fault`` carries a
    description of infrastructure failures (dead session, unparsable
    statement); it voids the step data.
    """

    steps: tuple[StepResult, ...]
    qed_accepted: bool | None = None
    fault: str | None = None


class FailureKind(enum.Enum):
    NONE = "none"
    TACTIC_ERROR = "tactic_error"
    REPEAT_VIOLATION = "repeat_violation"
    TIMEOUT = "timeout"
    BACKEND_FAULT = "backend_fault"


@dataclass(frozen=True, slots=True)
class EvalOutcome:
    """Judgement of one chromosome: how far it got and how it ended."""

    passed_count: int
    complete: bool
    failure: FailureKind = FailureKind.NONE
    steps: tuple[StepResult, ...] = ()

    def __post_init__(self) -> None:
        if self.passed_count < 0:
            raise ValueError("passed_count must be non-negative")
        if self.complete and self.failure is not FailureKind.NONE:
            raise ValueError("a complete outcome cannot carry a failure kind")


class Backend(ABC):
    """Stateless script checker.

    Implementations may keep worker processes alive between calls, but each
    ``run_script`` invocation must behave as if it ran against a fresh
    prover: no state leaks from one individual's evaluation to the next.
    """

    @abstractmethod
    def run_script(
        self, statement: TheoremStatement, tactics: Sequence[str]
    ) -> ScriptResult:
        """Submit ``tactics`` (position 0 is the injected intro step) one by
        one and classify each response.

        Submission stops at the first failed step or the first completion
        signal.  When every tactic passes, ``Qed.`` is attempted and its
        acceptance is reported via ``qed_accepted``.
        """

    @property
    @abstractmethod
    def info(self) -> dict:
        """Capability descriptor: id, version, completion message patterns."""

    def close(self) -> None:
        """Release any long-lived resources.  Default: nothing to release."""


def check_repeat_rules(chromosome: Chromosome, base: TacticBase) -> int | None:
    """Return the first gene position that violates an adjacency rule.

    A position ``p >= 1`` violates when the gene repeats position ``p - 1``
    and the entry forbids immediate repetition, or when the two adjacent
    entries form an excluded pair in either order.  ``None`` means clean.
    """
    genes = chromosome.genes
    entries = base.entries
    prev = genes[0]
    for p in range(1, len(genes)):
        cur = genes[p]
        if cur == prev and entries[cur].no_immediate_repeat:
            return p
        if cur in entries[prev].pair_exclusions or prev in entries[cur].pair_exclusions:
            return p
        prev = cur
    return None


def evaluate(
    chromosome: Chromosome,
    base: TacticBase,
    statement: TheoremStatement,
    backend: Backend,
) -> EvalOutcome:
    """Score one chromosome.

    The gene sequence is truncated just before the first repetition
    violation, decoded, and submitted behind an injected ``intros``.  The
    first completion signal or failed step ends the walk; the score is the
    number of chromosome tactics that passed before it.
    """
    violation = check_repeat_rules(chromosome, base)
    texts = decode(chromosome, base)
    submitted = texts if violation is None else texts[:violation]
    result = backend.run_script(statement, [INTRO_TACTIC, *submitted])
    if result.fault is not None:
        return EvalOutcome(
            passed_count=0,
            complete=False,
            failure=FailureKind.BACKEND_FAULT,
            steps=result.steps,
        )
    for step in result.steps:
        if step.status is StepStatus.COMPLETION_SIGNAL:
            return EvalOutcome(
                passed_count=max(step.position - 1, 0),
                complete=True,
                steps=result.steps,
            )
        if step.status is StepStatus.FAILED:
            kind = FailureKind.TIMEOUT if step.timed_out else FailureKind.TACTIC_ERROR
            return EvalOutcome(
                passed_count=max(step.position - 1, 0),
                complete=False,
                failure=kind,
                steps=result.steps,
            )
    if len(result.steps) != len(submitted) + 1 or result.qed_accepted is None:
        # contract breach: every submitted tactic needs a verdict, and an
        # all-passed prefix must have had Qed attempted
        return EvalOutcome(
            passed_count=0,
            complete=False,
            failure=FailureKind.BACKEND_FAULT,
            steps=result.steps,
        )
    if violation is not None:
        # the violating tactic was withheld; everything before it passed
        return EvalOutcome(
            passed_count=violation,
            complete=False,
            failure=FailureKind.REPEAT_VIOLATION,
            steps=result.steps,
        )
    return EvalOutcome(
        passed_count=len(submitted),
        complete=bool(result.qed_accepted),
        steps=result.steps,
    )


def assign_fitness(outcome: EvalOutcome, completion_base: int) -> int:
    """Incomplete chromosomes score their passed count; complete ones score
    ``completion_base - passed_count`` so that shorter proofs rank higher."""
    if outcome.complete:
        return completion_base - outcome.passed_count
    return outcome.passed_count


@dataclass(frozen=True, slots=True)
class Individual:
    """A chromosome with, once evaluated, its outcome and fitness."""

    chromosome: Chromosome
    outcome: EvalOutcome | None = None
    fitness: int | None = None

    @property
    def evaluated(self) -> bool:
        return self.outcome is not None and self.fitness is not None


@dataclass(frozen=True, slots=True)
class Population:
    """One generation's members, in creation order."""

    members: tuple[Individual, ...]
    generation: int

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("population must not be empty")
        if self.generation < 0:
            raise ValueError("generation must be non-negative")

    def __len__(self) -> int:
        return len(self.members)


class EvalCache:
    """Maps gene tuples to outcomes so duplicate chromosomes cost one
    backend invocation.  Reads and idempotent inserts are safe under the
    interpreter lock; the dedupe pass in ``evaluate_population`` guarantees
    each distinct chromosome is submitted exactly once per sweep."""

    def __init__(self) -> None:
        self._outcomes: dict[tuple[int, ...], EvalOutcome] = {}
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._outcomes)

    def get(self, genes: tuple[int, ...]) -> EvalOutcome | None:
        return self._outcomes.get(genes)

    def put(self, genes: tuple[int, ...], outcome: EvalOutcome) -> None:
        self._outcomes[genes] = outcome


def evaluate_population(
    population: Population,
    base: TacticBase,
    statement: TheoremStatement,
    backend: Backend,
    completion_base: int,
    cache: EvalCache | None = None,
    workers: int = 1,
) -> Population:
    """Evaluate every member, reusing cached outcomes for duplicates.

    With ``workers > 1`` the distinct uncached chromosomes are scored on a
    thread pool; results are re-attached by position, so the returned
    population is identical to a sequential sweep.
    """
    if cache is None:
        cache = EvalCache()
    pending: dict[tuple[int, ...], Chromosome] = {}
    hits = 0
    for member in population.members:
        genes = member.chromosome.genes
        if cache.get(genes) is None:
            pending.setdefault(genes, member.chromosome)
        else:
            hits += 1
    ordered = list(pending.values())
    if workers > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(lambda c: evaluate(c, base, statement, backend), ordered)
            )
    else:
        outcomes = [evaluate(c, base, statement, backend) for c in ordered]
    for chromosome, outcome in zip(ordered, outcomes):
        cache.put(chromosome.genes, outcome)
    cache.hits += hits
    cache.misses += len(ordered)
    members = []
    for member in population.members:
        outcome = cache.get(member.chromosome.genes)
        if outcome is None:
            raise ContractError("cache lost an outcome during the sweep")
        members.append(
            Individual(
                chromosome=member.chromosome,
                outcome=outcome,
                fitness=assign_fitness(outcome, completion_base),
            )
        )
    return Population(members=tuple(members), generation=population.generation)
