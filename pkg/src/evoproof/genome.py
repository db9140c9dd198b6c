"""Chromosome representation and its decoding into proof scripts.

A chromosome is a variable-length sequence of integer genes.  Each gene
indexes an entry of a tactic base, so a chromosome decodes to a sequence
of tactic invocations.  This module owns the data types for tactic bases,
chromosomes, theorem statements and run configuration, plus the loaders
for the on-disk formats and the script renderer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator


class EvoproofError(Exception):
    """Base class for errors raised by this package."""


class TacticBaseError(EvoproofError):
    """Malformed tactic-base document.  Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TheoremFileError(EvoproofError):
    """Malformed theorem document."""


class DecodeError(EvoproofError):
    """Chromosome refers to a gene outside the tactic base."""


class ContractError(EvoproofError):
    """An operation was invoked outside its stated preconditions."""


@dataclass(frozen=True, slots=True)
class TacticEntry:
    """One gene value: a tactic text plus its local repetition constraints.

    ``pair_exclusions`` lists partner indices that may not appear adjacent
    to this entry in either order.  ``no_immediate_repeat`` forbids the
    entry from directly following itself.
    """

    index: int
    text: str
    no_immediate_repeat: bool = False
    pair_exclusions: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"negative tactic index {self.index}")
        if not self.text:
            raise ValueError("tactic text must be non-empty")
        if "\n" in self.text or "." in self.text:
            raise ValueError(f"tactic text {self.text!r} contains a line break or period")
        if self.index in self.pair_exclusions and not self.no_immediate_repeat:
            raise ValueError(
                f"entry {self.index} excludes itself but is not marked norepeat"
            )


@dataclass(frozen=True, slots=True)
class TacticBase:
    """Ordered, duplicate-free collection of tactic entries."""

    entries: tuple[TacticEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("tactic base must contain at least one entry")
        texts = set()
        for position, entry in enumerate(self.entries):
            if entry.index != position:
                raise ValueError(
                    f"entry index {entry.index} does not match position {position}"
                )
            if entry.text in texts:
                raise ValueError(f"duplicate tactic text {entry.text!r}")
            texts.add(entry.text)
            for partner in entry.pair_exclusions:
                if not 0 <= partner < len(self.entries):
                    raise ValueError(
                        f"entry {entry.index} excludes out-of-range index {partner}"
                    )

    @property
    def t_max(self) -> int:
        """Largest legal gene value."""
        return len(self.entries) - 1

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> TacticEntry:
        return self.entries[index]

    def text_of(self, gene: int) -> str:
        return self.entries[gene].text


@dataclass(frozen=True, slots=True)
class Chromosome:
    """Variable-length gene sequence.  Genes are validated against a base
    separately because the base bound is not known to the type itself."""

    genes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.genes) < 1:
            raise ValueError("chromosome must hold at least one gene")
        for position, gene in enumerate(self.genes):
            if not isinstance(gene, int) or gene < 0:
                raise ValueError(f"gene {gene!r} at position {position} is not a non-negative int")

    def __len__(self) -> int:
        return len(self.genes)

    def __iter__(self) -> Iterator[int]:
        return iter(self.genes)

    def __getitem__(self, position: int) -> int:
        return self.genes[position]


@dataclass(frozen=True, slots=True)
class TheoremStatement:
    """A proof goal: identifier, optional preamble lines, declaration lines.

    The preamble is emitted verbatim ahead of the declaration when a script
    is rendered; it carries imports and auxiliary definitions.
    """

    theorem_id: str
    declaration: tuple[str, ...]
    preamble: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.theorem_id:
            raise ValueError("theorem id must be non-empty")
        if not self.declaration or not any(line.strip() for line in self.declaration):
            raise ValueError("declaration must be non-empty")

    @property
    def declaration_text(self) -> str:
        """Declaration joined to a single line, for parsers and prover input."""
        return " ".join(line.strip() for line in self.declaration if line.strip())


@dataclass(frozen=True, slots=True)
class EAConfig:
    """Parameters of one evolutionary run."""

    pop_size: int = 1000
    max_gen: int = 100
    mut_rat: float = 0.25
    l_lower: int = 4
    l_upper: int = 15
    completion_base: int = 1000
    seed: int = 0
    backend_id: str = "toy"

    def __post_init__(self) -> None:
        if self.pop_size < 2:
            # parental selection draws from the top half, which must be non-empty
            raise ValueError("pop_size must be at least 2")
        if self.max_gen < 1:
            raise ValueError("max_gen must be positive")
        if not 0.0 <= self.mut_rat <= 1.0:
            raise ValueError("mut_rat must lie in [0, 1]")
        if self.l_lower < 1:
            raise ValueError("l_lower must be at least 1")
        if self.l_upper < self.l_lower:
            raise ValueError("l_upper must not be smaller than l_lower")
        if self.completion_base <= self.l_upper:
            # completion scores must dominate every incomplete score
            raise ValueError("completion_base must exceed l_upper")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an int")
        if not self.backend_id:
            raise ValueError("backend_id must be non-empty")


_FLAG_NOREPEAT = "norepeat"
_FLAG_EXCL = "excl="


def parse_tactic_base(text: str, origin: str = "<string>") -> TacticBase:
    """Parse a tactic-base document.

    One entry per line: the tactic text, then optional tab-separated
    constraint flags (``norepeat``, ``excl=<i>[,<i>...]``).  Lines that are
    blank or start with ``#`` are skipped and do not consume an index.
    """
    entries: list[TacticEntry] = []
    seen_texts: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        tactic_text = fields[0].strip()
        if not tactic_text:
            raise TacticBaseError("entry has empty tactic text", lineno)
        no_repeat = False
        exclusions: set[int] = set()
        for flag in fields[1:]:
            flag = flag.strip()
            if not flag:
                continue
            if flag == _FLAG_NOREPEAT:
                no_repeat = True
            elif flag.startswith(_FLAG_EXCL):
                payload = flag[len(_FLAG_EXCL):]
                for piece in payload.split(","):
                    piece = piece.strip()
                    if not re.fullmatch(r"\d+", piece or ""):
                        raise TacticBaseError(
                            f"bad exclusion index {piece!r} in flag {flag!r}", lineno
                        )
                    exclusions.add(int(piece))
            else:
                raise TacticBaseError(f"unknown constraint flag {flag!r}", lineno)
        index = len(entries)
        if tactic_text in seen_texts:
            raise TacticBaseError(
                f"duplicate tactic text {tactic_text!r} (first at line {seen_texts[tactic_text]})",
                lineno,
            )
        seen_texts[tactic_text] = lineno
        try:
            entries.append(
                TacticEntry(
                    index=index,
                    text=tactic_text,
                    no_immediate_repeat=no_repeat,
                    pair_exclusions=frozenset(exclusions),
                )
            )
        except ValueError as exc:
            raise TacticBaseError(str(exc), lineno) from exc
    if not entries:
        raise TacticBaseError(f"{origin} contains no tactic entries")
    try:
        return TacticBase(entries=tuple(entries))
    except ValueError as exc:
        raise TacticBaseError(str(exc)) from exc


def load_tactic_base(path: str | Path) -> TacticBase:
    path = Path(path)
    return parse_tactic_base(path.read_text(encoding="utf-8"), origin=str(path))


def serialize_tactic_base(base: TacticBase) -> str:
    """Render a base back to its document form (canonical flag order).

    Loading the result reproduces the base exactly; comments from the
    original document are not retained.
    """
    lines = []
    for entry in base.entries:
        fields = [entry.text]
        if entry.no_immediate_repeat:
            fields.append(_FLAG_NOREPEAT)
        if entry.pair_exclusions:
            fields.append(_FLAG_EXCL + ",".join(str(i) for i in sorted(entry.pair_exclusions)))
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


_THEOREM_ID_RE = re.compile(
    r"^\s*(?:Theorem|Lemma|Fact|Remark|Corollary|Proposition|Example)\s+"
    r"([A-Za-z_][A-Za-z0-9_']*)\s*:"
)


def parse_theorem(text: str, origin: str = "<string>") -> TheoremStatement:
    """Parse a theorem document with ``[preamble]`` and ``[statement]`` sections.

    The preamble section is optional; the statement section is mandatory and
    holds the declaration verbatim (it may span several lines).
    """
    section: str | None = None
    preamble: list[str] = []
    statement: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped == "[preamble]":
            section = "preamble"
            continue
        if stripped == "[statement]":
            section = "statement"
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            raise TheoremFileError(f"{origin}: line {lineno}: unknown section {stripped}")
        if section is None:
            if stripped:
                raise TheoremFileError(
                    f"{origin}: line {lineno}: content before any section header"
                )
            continue
        if section == "preamble":
            preamble.append(raw.rstrip())
        else:
            statement.append(raw.rstrip())
    if not any(line.strip() for line in statement):
        raise TheoremFileError(f"{origin}: missing or empty [statement] section")
    # trim leading/trailing blank lines, keep interior layout verbatim
    while preamble and not preamble[0].strip():
        preamble.pop(0)
    while preamble and not preamble[-1].strip():
        preamble.pop()
    while statement and not statement[0].strip():
        statement.pop(0)
    while statement and not statement[-1].strip():
        statement.pop()
    joined = " ".join(line.strip() for line in statement)
    match = _THEOREM_ID_RE.match(joined)
    if not match:
        raise TheoremFileError(
            f"{origin}: statement does not declare a named theorem: {joined!r}"
        )
    return TheoremStatement(
        theorem_id=match.group(1),
        declaration=tuple(statement),
        preamble=tuple(preamble),
    )


def load_theorem(path: str | Path) -> TheoremStatement:
    path = Path(path)
    return parse_theorem(path.read_text(encoding="utf-8"), origin=str(path))


def validate(chromosome: Chromosome, base: TacticBase) -> list[tuple[int, int]]:
    """Return (position, gene) pairs whose gene exceeds the base bound."""
    t_max = base.t_max
    return [(p, g) for p, g in enumerate(chromosome.genes) if g > t_max]


def decode(chromosome: Chromosome, base: TacticBase) -> list[str]:
    """Map genes to tactic texts, raising on out-of-range genes."""
    bad = validate(chromosome, base)
    if bad:
        position, gene = bad[0]
        raise DecodeError(
            f"gene {gene} at position {position} exceeds t_max {base.t_max}"
        )
    return [base.entries[g].text for g in chromosome.genes]


INTRO_TACTIC = "intros"


def render_tactic_script(statement: TheoremStatement, tactics: Iterable[str]) -> str:
    """Render a prover script around already-decoded tactic texts.

    Layout: preamble lines, the declaration, ``Proof.``, ``intros.``, one
    line per tactic, ``Qed.``.  The leading ``intros`` is always injected
    and is not part of the gene alphabet.
    """
    lines: list[str] = list(statement.preamble)
    lines.extend(statement.declaration)
    lines.append("Proof.")
    lines.append(f"{INTRO_TACTIC}.")
    for text in tactics:
        lines.append(f"{text}.")
    lines.append("Qed.")
    return "\n".join(lines) + "\n"


def render_script(
    chromosome: Chromosome, base: TacticBase, statement: TheoremStatement
) -> str:
    """Render the full prover script for a chromosome (see
    ``render_tactic_script`` for the layout)."""
    return render_tactic_script(statement, decode(chromosome, base))


def tactic_line_count(script: str) -> int:
    """Number of tactic lines in a rendered script (between Proof. and Qed.)."""
    lines = script.splitlines()
    try:
        start = lines.index("Proof.")
        end = lines.index("Qed.")
    except ValueError as exc:
        raise EvoproofError("script lacks Proof./Qed. delimiters") from exc
    return end - start - 1
