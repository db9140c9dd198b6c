"""Evolutionary operators and the generational search loop.

The loop is a plain generational EA: random variable-length initialization,
rank-based parental selection from the top half, one-point crossover whose
child always inherits the second parent's length, single-gene point
mutation, full replacement each generation, and a fixed generation count as
the only stopping rule.  Completed proofs do not stop the run; they are
archived and the search keeps going, which is how proof diversity arises.
"""

from __future__ import annotations

import random

from .archive import (
    GenerationStats,
    ProofRecord,
    ReportSink,
    RunReport,
    RunTotals,
    base_digest,
    config_fingerprint,
)
from .evaluation import (
    Backend,
    BackendUnavailable,
    EvalCache,
    FailureKind,
    Individual,
    Population,
    evaluate_population,
)
from .genome import Chromosome, ContractError, EAConfig, TacticBase, TheoremStatement

__all__ = [
    "RandomSource",
    "Individual",
    "Population",
    "initialize",
    "rank",
    "select_parent",
    "crossover",
    "mutate",
    "evolve",
]


class RandomSource:
    """Seeded random stream with a fixed draw discipline.

    Backed by the Mersenne Twister (MT19937).  Integer draws take
    ``bit_length(span - 1)`` bits and reject out-of-range values, so the
    consumed bit stream depends only on the seed and the requested spans;
    real draws use the generator's 53-bit uniform.  Every operator documents
    how many draws it takes, which makes whole runs replayable by seed.
    """

    def __init__(self, seed: int):
        self._rng = random.Random(seed)
        self.seed = seed

    def uniform_int(self, lower: int, upper: int) -> int:
        """Uniform integer from the inclusive range [lower, upper]."""
        if upper < lower:
            raise ContractError(f"empty integer range [{lower}, {upper}]")
        span = upper - lower + 1
        if span == 1:
            return lower
        bits = (span - 1).bit_length()
        draw = self._rng.getrandbits(bits)
        while draw >= span:
            draw = self._rng.getrandbits(bits)
        return lower + draw

    def uniform_int_below(self, lower: int, upper: int) -> int:
        """Uniform integer from the half-open range [lower, upper)."""
        return self.uniform_int(lower, upper - 1)

    def uniform_real(self) -> float:
        """Uniform float in [0, 1)."""
        return self._rng.random()


def initialize(
    pop_size: int, l_lower: int, l_upper: int, t_max: int, rng: RandomSource
) -> Population:
    """Draw the generation-0 population.

    Per individual: one length draw from [l_lower, l_upper], then one gene
    draw from [0, t_max] per position, left to right.
    """
    if pop_size < 2:
        raise ContractError("pop_size must be at least 2")
    members = []
    for _ in range(pop_size):
        length = rng.uniform_int(l_lower, l_upper)
        genes = tuple(rng.uniform_int(0, t_max) for _ in range(length))
        members.append(Individual(chromosome=Chromosome(genes)))
    return Population(members=tuple(members), generation=0)


def rank(population: Population) -> list[Individual]:
    """Best first: higher fitness wins, ties go to the shorter chromosome,
    remaining ties keep population order (the sort is stable)."""
    for member in population.members:
        if not member.evaluated:
            raise ContractError("cannot rank an unevaluated population")
    return sorted(
        population.members,
        key=lambda member: (-member.fitness, len(member.chromosome)),
    )


def select_parent(
    ranked: list[Individual], pop_size: int, rng: RandomSource
) -> Individual:
    """Pick uniformly among the top half: rank index from [0, pop_size // 2).

    One integer draw.
    """
    if pop_size < 2 or len(ranked) != pop_size:
        raise ContractError("ranked list must hold pop_size (>= 2) members")
    return ranked[rng.uniform_int_below(0, pop_size // 2)]


def crossover(p1: Individual, p2: Individual, rng: RandomSource) -> Chromosome:
    """One-point crossover: head of the first parent, tail of the second.

    The cut point is one integer draw from [1, min(len1, len2)] inclusive,
    so the child always has the second parent's length.
    """
    genes1 = p1.chromosome.genes
    genes2 = p2.chromosome.genes
    cut = rng.uniform_int(1, min(len(genes1), len(genes2)))
    return Chromosome(genes1[:cut] + genes2[cut:])


def mutate(chromosome: Chromosome, t_max: int, rng: RandomSource) -> Chromosome:
    """Replace one uniformly chosen gene with a uniform draw from [0, t_max].

    Two integer draws (position, then replacement); the replacement may
    coincide with the old gene, in which case nothing visibly changes.
    """
    genes = list(chromosome.genes)
    position = rng.uniform_int(0, len(genes) - 1)
    genes[position] = rng.uniform_int(0, t_max)
    return Chromosome(tuple(genes))


def _check_population(population: Population, config: EAConfig) -> None:
    # generation-boundary invariants: exact size, every length within bounds
    if len(population) != config.pop_size:
        raise ContractError(
            f"population size {len(population)} != pop_size {config.pop_size}"
        )
    for member in population.members:
        length = len(member.chromosome)
        if not config.l_lower <= length <= config.l_upper:
            raise ContractError(
                f"chromosome length {length} outside [{config.l_lower}, {config.l_upper}]"
            )


def _breed(
    ranked: list[Individual], config: EAConfig, t_max: int, rng: RandomSource
) -> list[Individual]:
    """One full offspring generation.  Per child, in draw order: first
    parent, second parent, cut point, mutation coin, and when the coin is
    at most mut_rat, the two mutation draws."""
    offspring = []
    for _ in range(config.pop_size):
        first = select_parent(ranked, config.pop_size, rng)
        second = select_parent(ranked, config.pop_size, rng)
        child = crossover(first, second, rng)
        if rng.uniform_real() <= config.mut_rat:
            child = mutate(child, t_max, rng)
        offspring.append(Individual(chromosome=child))
    return offspring


def _harvest(
    population: Population,
    base: TacticBase,
    statement: TheoremStatement,
    config: EAConfig,
    sink: ReportSink,
    distinct_so_far: int,
) -> GenerationStats:
    """Build the generation's stat row and archive its complete proofs."""
    fitnesses = [member.fitness for member in population.members]
    complete_count = 0
    new_distinct = 0
    for member in population.members:
        outcome = member.outcome
        if outcome is None or not outcome.complete:
            continue
        complete_count += 1
        used = member.chromosome.genes[: outcome.passed_count]
        record = ProofRecord(
            theorem_id=statement.theorem_id,
            genes=used,
            tactics=tuple(base.text_of(gene) for gene in used),
            generation=population.generation,
            seed=config.seed,
            length=outcome.passed_count,
        )
        if sink.record_proof(record):
            new_distinct += 1
    stats = GenerationStats(
        generation=population.generation,
        best_fitness=max(fitnesses),
        mean_fitness=sum(fitnesses) / len(fitnesses),
        complete_count=complete_count,
        distinct_complete=distinct_so_far + new_distinct,
        new_distinct=new_distinct,
    )
    sink.record_generation(stats)
    return stats


def evolve(
    config: EAConfig,
    base: TacticBase,
    statement: TheoremStatement,
    backend: Backend,
    sink: ReportSink,
    workers: int = 1,
) -> RunReport:
    """Run the full generational loop and return the run report.

    Generation 0 is the evaluated random population; each of the max_gen
    following generations is bred by selection, crossover and mutation and
    then evaluated, so the report always holds max_gen + 1 stat rows.  If
    the backend becomes unavailable mid-run, the report is returned with
    the rows gathered so far and flagged incomplete.
    """
    rng = RandomSource(config.seed)
    cache = EvalCache()
    digest = base_digest(base)
    report = RunReport(
        config=config,
        theorem_id=statement.theorem_id,
        backend_info=backend.info,
        base_size=len(base),
        base_digest=digest,
        config_hash=config_fingerprint(config, digest),
    )
    t_max = base.t_max
    distinct = 0
    complete_total = 0
    first_generation: int | None = None
    first_length: int | None = None

    def finish(incomplete: bool) -> RunReport:
        report.generations = list(sink.rows)
        report.totals = RunTotals(
            evaluations=config.pop_size * len(report.generations),
            backend_calls=cache.misses,
            complete_count=complete_total,
            distinct_complete=distinct,
            first_complete_generation=first_generation,
            first_complete_length=first_length,
        )
        report.incomplete = incomplete
        return report

    population = initialize(config.pop_size, config.l_lower, config.l_upper, t_max, rng)
    for generation in range(config.max_gen + 1):
        if generation > 0:
            ranked = rank(population)
            population = Population(
                members=tuple(_breed(ranked, config, t_max, rng)),
                generation=generation,
            )
        _check_population(population, config)
        try:
            population = evaluate_population(
                population, base, statement, backend, config.completion_base,
                cache=cache, workers=workers,
            )
        except BackendUnavailable:
            return finish(incomplete=True)
        if generation == 0 and all(
            member.outcome.failure is FailureKind.BACKEND_FAULT
            for member in population.members
        ):
            # a backend that faults on every single member cannot score
            # anything; stop instead of grinding out meaningless generations
            _harvest(population, base, statement, config, sink, distinct)
            return finish(incomplete=True)
        stats = _harvest(population, base, statement, config, sink, distinct)
        complete_total += stats.complete_count
        if stats.complete_count and first_generation is None:
            first_generation = generation
            first_length = next(
                member.outcome.passed_count
                for member in population.members
                if member.outcome is not None and member.outcome.complete
            )
        distinct = stats.distinct_complete
    return finish(incomplete=False)
