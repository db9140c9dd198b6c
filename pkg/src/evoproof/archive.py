"""Proof archive, per-generation statistics and run reports.

Every distinct complete proof found during a run is recorded here, keyed by
theorem and rendered tactic sequence.  Archiving is bookkeeping only: the
search never reads the archive back into its population.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

from .genome import EAConfig, EvoproofError, TacticBase, serialize_tactic_base


@dataclass(frozen=True, slots=True)
class ProofRecord:
    """One complete proof: the passing gene prefix and its rendered tactics.

    ``length`` is the number of chromosome tactics the checker consumed, so
    trailing junk genes after the closing tactic are never archived.
    """

    theorem_id: str
    genes: tuple[int, ...]
    tactics: tuple[str, ...]
    generation: int
    seed: int
    length: int
    verified: bool = True

    def __post_init__(self) -> None:
        if len(self.genes) != len(self.tactics) or len(self.genes) != self.length:
            raise ValueError("genes, tactics and length must agree")
        if self.generation < 0:
            raise ValueError("generation must be non-negative")

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        """Identity for deduplication: theorem plus rendered tactic texts."""
        return (self.theorem_id, self.tactics)

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "genes": list(self.genes),
            "tactics": list(self.tactics),
            "generation": self.generation,
            "seed": self.seed,
            "length": self.length,
            "verified": self.verified,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ProofRecord":
        return cls(
            theorem_id=payload["theorem_id"],
            genes=tuple(payload["genes"]),
            tactics=tuple(payload["tactics"]),
            generation=payload["generation"],
            seed=payload["seed"],
            length=payload["length"],
            verified=payload["verified"],
        )


class ProofArchive:
    """Insertion-ordered, duplicate-free collection of proof records.

    ``record`` is idempotent; re-offering a known proof is a no-op.  Unions
    of archives agree as sets regardless of merge order.
    """

    def __init__(self, records: Iterable[ProofRecord] = ()) -> None:
        self._records: dict[tuple[str, tuple[str, ...]], ProofRecord] = {}
        for record in records:
            self.record(record)

    def record(self, record: ProofRecord) -> bool:
        """Insert a proof; returns False when it was already archived."""
        if record.key in self._records:
            return False
        self._records[record.key] = record
        return True

    @property
    def records(self) -> list[ProofRecord]:
        return list(self._records.values())

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, record: ProofRecord) -> bool:
        return record.key in self._records

    def distinct_count(self, theorem_id: str | None = None) -> int:
        if theorem_id is None:
            return len(self._records)
        return sum(1 for key in self._records if key[0] == theorem_id)

    def theorem_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for key in self._records:
            seen.setdefault(key[0])
        return list(seen)

    def merge(self, other: "ProofArchive") -> "ProofArchive":
        merged = ProofArchive(self.records)
        for record in other.records:
            merged.record(record)
        return merged

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for record in self._records.values():
                handle.write(json.dumps(record.to_dict()) + "\n")

    @classmethod
    def read_jsonl(cls, path: str | Path) -> "ProofArchive":
        archive = cls()
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    archive.record(ProofRecord.from_dict(json.loads(line)))
        return archive


@dataclass(frozen=True, slots=True)
class GenerationStats:
    """One row of a run report."""

    generation: int
    best_fitness: int
    mean_fitness: float
    complete_count: int
    distinct_complete: int
    new_distinct: int

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "best_fitness": self.best_fitness,
            "mean_fitness": self.mean_fitness,
            "complete_count": self.complete_count,
            "distinct_complete": self.distinct_complete,
            "new_distinct": self.new_distinct,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GenerationStats":
        return cls(**payload)


CSV_COLUMNS = (
    "generation",
    "best_fitness",
    "mean_fitness",
    "complete_count",
    "distinct_complete",
    "new_distinct",
)


class ReportSink:
    """Receives proofs and stat rows as a run progresses.

    ``progress`` is an optional callback invoked with each finished row,
    which the command line uses for live output.
    """

    def __init__(
        self,
        archive: ProofArchive | None = None,
        progress: Callable[[GenerationStats], None] | None = None,
    ) -> None:
        self.archive = archive if archive is not None else ProofArchive()
        self.rows: list[GenerationStats] = []
        self._progress = progress

    def record_proof(self, record: ProofRecord) -> bool:
        return self.archive.record(record)

    def record_generation(self, stats: GenerationStats) -> None:
        self.rows.append(stats)
        if self._progress is not None:
            self._progress(stats)


class RandomSearchProbability(NamedTuple):
    value: float
    text: str


def random_search_probability(
    evaluations: int, base_size: int, length: int
) -> RandomSearchProbability:
    """Chance that uniform random guessing of ``length``-tactic scripts finds
    one particular proof within an evaluation budget: budget / base^length."""
    if evaluations < 0:
        raise ValueError("evaluations must be non-negative")
    if base_size < 1 or length < 0:
        raise ValueError("base_size must be positive and length non-negative")
    value = evaluations / (base_size ** length)
    if value == 0.0 and evaluations > 0:
        # the exact quotient underflowed; recover its magnitude in log
        # space so the report still shows something informative
        exponent10 = math.log10(evaluations) - length * math.log10(base_size)
        power = math.floor(exponent10)
        mantissa = 10.0 ** (exponent10 - power)
        if mantissa >= 9.9995:
            mantissa /= 10.0
            power += 1
        return RandomSearchProbability(value=value, text=f"{mantissa:.3f}e{power:+03d}")
    return RandomSearchProbability(value=value, text=f"{value:.3e}")


@dataclass(frozen=True, slots=True)
class DiversitySummary:
    """Distinct-proof bookkeeping for one theorem."""

    theorem_id: str
    present: bool
    distinct_count: int
    length_histogram: dict[int, int]
    first_found_generation: int | None

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "present": self.present,
            "distinct_count": self.distinct_count,
            "length_histogram": {str(k): v for k, v in sorted(self.length_histogram.items())},
            "first_found_generation": self.first_found_generation,
        }


def diversity_summary(archive: ProofArchive, theorem_id: str) -> DiversitySummary:
    records = [r for r in archive.records if r.theorem_id == theorem_id]
    if not records:
        return DiversitySummary(
            theorem_id=theorem_id,
            present=False,
            distinct_count=0,
            length_histogram={},
            first_found_generation=None,
        )
    histogram: dict[int, int] = {}
    for record in records:
        histogram[record.length] = histogram.get(record.length, 0) + 1
    return DiversitySummary(
        theorem_id=theorem_id,
        present=True,
        distinct_count=len(records),
        length_histogram=histogram,
        first_found_generation=min(r.generation for r in records),
    )


def base_digest(base: TacticBase) -> str:
    return hashlib.sha256(serialize_tactic_base(base).encode("utf-8")).hexdigest()


def config_fingerprint(config: EAConfig, digest: str) -> str:
    """Hash of everything that must match before runs may be aggregated.

    The seed is deliberately excluded: replicate runs differ only by seed.
    """
    payload = {
        "pop_size": config.pop_size,
        "max_gen": config.max_gen,
        "mut_rat": config.mut_rat,
        "l_lower": config.l_lower,
        "l_upper": config.l_upper,
        "completion_base": config.completion_base,
        "backend_id": config.backend_id,
        "base_digest": digest,
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True, slots=True)
class RunTotals:
    evaluations: int
    backend_calls: int
    complete_count: int
    distinct_complete: int
    first_complete_generation: int | None
    first_complete_length: int | None

    def to_dict(self) -> dict:
        return {
            "evaluations": self.evaluations,
            "backend_calls": self.backend_calls,
            "complete_count": self.complete_count,
            "distinct_complete": self.distinct_complete,
            "first_complete_generation": self.first_complete_generation,
            "first_complete_length": self.first_complete_length,
        }


REPORT_FORMAT = "evoproof-run-report/1"


@dataclass(slots=True)
class RunReport:
    """Full account of one run: effective configuration, per-generation
    rows, totals, and identity hashes used when aggregating runs."""

    config: EAConfig
    theorem_id: str
    backend_info: dict
    base_size: int
    base_digest: str
    config_hash: str
    generations: list[GenerationStats] = field(default_factory=list)
    totals: RunTotals | None = None
    incomplete: bool = False

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "theorem_id": self.theorem_id,
            "config": {
                "pop_size": self.config.pop_size,
                "max_gen": self.config.max_gen,
                "mut_rat": self.config.mut_rat,
                "l_lower": self.config.l_lower,
                "l_upper": self.config.l_upper,
                "completion_base": self.config.completion_base,
                "seed": self.config.seed,
                "backend_id": self.config.backend_id,
            },
            "config_hash": self.config_hash,
            "tactic_base": {"size": self.base_size, "digest": self.base_digest},
            "backend": self.backend_info,
            "incomplete": self.incomplete,
            "generations": [row.to_dict() for row in self.generations],
            "totals": self.totals.to_dict() if self.totals else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.generations:
            payload = row.to_dict()
            writer.writerow([payload[column] for column in CSV_COLUMNS])
        return buffer.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_dict(cls, payload: dict) -> "RunReport":
        if payload.get("format") != REPORT_FORMAT:
            raise EvoproofError(f"unsupported report format {payload.get('format')!r}")
        config = EAConfig(**payload["config"])
        totals = RunTotals(**payload["totals"]) if payload.get("totals") else None
        return cls(
            config=config,
            theorem_id=payload["theorem_id"],
            backend_info=payload["backend"],
            base_size=payload["tactic_base"]["size"],
            base_digest=payload["tactic_base"]["digest"],
            config_hash=payload["config_hash"],
            generations=[GenerationStats.from_dict(r) for r in payload["generations"]],
            totals=totals,
            incomplete=payload["incomplete"],
        )

    @classmethod
    def read_json(cls, path: str | Path) -> "RunReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
