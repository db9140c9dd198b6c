"""Command line interface: run searches, verify proof scripts, aggregate runs.

``evoproof run`` evolves proofs for one or more theorems and writes one
report directory per (theorem, seed) pair.  ``evoproof verify`` replays an
archived script through a backend step by step.  ``evoproof stats``
aggregates reports from replicate runs and prints random-guessing baselines
for every theorem that was actually proven.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .archive import (
    ProofArchive,
    RunReport,
    random_search_probability,
    ReportSink,
)
from .assets import default_base_path, default_suite_paths
from .backends import make_backend
from .evaluation import StepStatus
from .genome import (
    EAConfig,
    EvoproofError,
    TheoremStatement,
    load_tactic_base,
    load_theorem,
    render_tactic_script,
)
from .operators import evolve


class ConfigError(EvoproofError):
    """Bad config file or option combination."""


# canonical option table: key -> (parser, multi-valued)
_OPTION_TYPES = {
    "theorem": (str, True),
    "tactic_base": (str, False),
    "backend": (str, False),
    "coq": (str, False),
    "pop_size": (int, False),
    "max_gen": (int, False),
    "mut_rate": (float, False),
    "len_min": (int, False),
    "len_max": (int, False),
    "completion_base": (int, False),
    "seed": (int, True),
    "out": (str, False),
    "workers": (int, False),
    "step_timeout": (float, False),
}

_DEFAULTS = {
    "theorem": None,
    "tactic_base": None,
    "backend": "toy",
    "coq": None,
    "pop_size": 1000,
    "max_gen": 100,
    "mut_rate": 0.25,
    "len_min": 4,
    "len_max": 15,
    "completion_base": 1000,
    "seed": [0],
    "out": "runs",
    "workers": 1,
    "step_timeout": 5.0,
}


def parse_config_file(path: str | Path) -> dict:
    """Parse a plain ``key = value`` options file mirroring the run flags.

    Multi-valued keys (theorem, seed) may repeat or hold comma-separated
    values.  Every diagnostic names the offending line.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    options: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key not in _OPTION_TYPES:
            raise ConfigError(f"{path}: line {lineno}: unknown option {key!r}")
        parse, multi = _OPTION_TYPES[key]
        pieces = [p.strip() for p in value.split(",")] if multi else [value]
        try:
            parsed = [parse(p) for p in pieces if p != ""]
        except ValueError:
            raise ConfigError(
                f"{path}: line {lineno}: bad {parse.__name__} value {value!r} for {key!r}"
            ) from None
        if not parsed:
            raise ConfigError(f"{path}: line {lineno}: empty value for {key!r}")
        if multi:
            options.setdefault(key, []).extend(parsed)
        else:
            options[key] = parsed[0]
    return options


def _seed_values(text: str) -> list[int]:
    """Argument type for --seed: one integer or a comma-separated list."""
    pieces = [p.strip() for p in text.split(",") if p.strip() != ""]
    if not pieces:
        raise argparse.ArgumentTypeError("empty seed list")
    try:
        return [int(p) for p in pieces]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be integers: {text!r}") from None


def _effective_options(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and command line; flags win."""
    options = dict(_DEFAULTS)
    if args.config:
        options.update(parse_config_file(args.config))
    for key in _OPTION_TYPES:
        value = getattr(args, key, None)
        if key == "seed" and value is not None:
            # append action collects one list per flag occurrence
            value = [seed for chunk in value for seed in chunk]
        if value is not None and value != []:
            options[key] = value
    return options


def _load_statements(options: dict) -> list[TheoremStatement]:
    paths = options["theorem"]
    if not paths:
        paths = default_suite_paths(options["backend"])
        if not paths:
            raise ConfigError(f"no bundled theorems for backend {options['backend']!r}")
    statements = [load_theorem(p) for p in paths]
    seen: dict[str, int] = {}
    for i, statement in enumerate(statements):
        if statement.theorem_id in seen:
            raise ConfigError(
                f"duplicate theorem id {statement.theorem_id!r} in "
                f"{paths[seen[statement.theorem_id]]} and {paths[i]}"
            )
        seen[statement.theorem_id] = i
    return statements


def _write_run_outputs(
    run_dir: Path, report: RunReport, sink: ReportSink, statement: TheoremStatement
) -> None:
    report.write_json(run_dir / "report.json")
    report.write_csv(run_dir / "report.csv")
    sink.archive.write_jsonl(run_dir / "archive.jsonl")
    records = sink.archive.records
    if records:
        proofs_dir = run_dir / "proofs"
        proofs_dir.mkdir(exist_ok=True)
        for i, record in enumerate(records, start=1):
            script = render_tactic_script(statement, record.tactics)
            (proofs_dir / f"{record.theorem_id}.{i:03d}.v").write_text(
                script, encoding="utf-8"
            )


def cmd_run(args: argparse.Namespace) -> int:
    options = _effective_options(args)
    backend_id = options["backend"]
    statements = _load_statements(options)
    base_path = options["tactic_base"] or default_base_path(backend_id)
    base = load_tactic_base(base_path)
    out_root = Path(options["out"])
    exit_code = 0
    for statement in statements:
        for seed in options["seed"]:
            config = EAConfig(
                pop_size=options["pop_size"],
                max_gen=options["max_gen"],
                mut_rat=options["mut_rate"],
                l_lower=options["len_min"],
                l_upper=options["len_max"],
                completion_base=options["completion_base"],
                seed=seed,
                backend_id=backend_id,
            )
            run_dir = out_root / statement.theorem_id / f"seed_{seed}"
            run_dir.mkdir(parents=True, exist_ok=True)
            backend = make_backend(
                backend_id,
                coq_path=options["coq"],
                step_timeout=options["step_timeout"],
                pool_size=options["workers"],
                transcript_path=(
                    str(run_dir / "transcript.log") if backend_id == "coq" else None
                ),
            )
            def progress(row) -> None:
                print(
                    f"  gen {row.generation:>3}  best {row.best_fitness:>4}  "
                    f"mean {row.mean_fitness:8.3f}  complete {row.complete_count:>4}  "
                    f"distinct {row.distinct_complete}"
                )

            sink = ReportSink(progress=progress if args.verbose else None)
            try:
                report = evolve(
                    config, base, statement, backend, sink, workers=options["workers"]
                )
            finally:
                backend.close()
            _write_run_outputs(run_dir, report, sink, statement)
            totals = report.totals
            status = "INCOMPLETE" if report.incomplete else "ok"
            print(
                f"run theorem={statement.theorem_id} seed={seed} backend={backend_id} "
                f"generations={len(report.generations)} "
                f"distinct_proofs={totals.distinct_complete} "
                f"first_proof_generation={totals.first_complete_generation} "
                f"status={status} out={run_dir}"
            )
            if report.incomplete:
                exit_code = 1
    return exit_code


def extract_script_tactics(script_text: str) -> list[str]:
    """Pull the tactic lines out of a rendered proof script.

    The script must contain exact ``Proof.`` and ``Qed.`` lines with at
    least one tactic line between them, each ending in a period.
    """
    lines = script_text.splitlines()
    try:
        start = lines.index("Proof.")
        end = lines.index("Qed.")
    except ValueError:
        raise EvoproofError("corrupted script: missing Proof. or Qed. line") from None
    if end <= start + 1:
        raise EvoproofError("corrupted script: no tactic lines between Proof. and Qed.")
    tactics = []
    for line in lines[start + 1 : end]:
        text = line.strip()
        if not text.endswith(".") or len(text) < 2:
            raise EvoproofError(f"corrupted script: bad tactic line {line!r}")
        tactics.append(text[:-1])
    return tactics


def cmd_verify(args: argparse.Namespace) -> int:
    statement = load_theorem(args.theorem)
    script_text = Path(args.script).read_text(encoding="utf-8")
    tactics = extract_script_tactics(script_text)
    backend = make_backend(
        args.backend,
        coq_path=args.coq,
        step_timeout=args.step_timeout,
    )
    try:
        result = backend.run_script(statement, tactics)
    finally:
        backend.close()
    if result.fault is not None:
        print(f"FAULT: {result.fault}")
        return 1
    verdicts = {step.position: step for step in result.steps}
    completed = False
    failed = False
    for position, text in enumerate(tactics):
        step = verdicts.get(position)
        if step is None:
            print(f"  step {position:>2}  {text+'.':<30} not reached")
            continue
        label = step.status.value
        message = f"  [{step.message}]" if step.message else ""
        print(f"  step {position:>2}  {text+'.':<30} {label}{message}")
        completed = completed or step.status is StepStatus.COMPLETION_SIGNAL
        failed = failed or step.status is StepStatus.FAILED
    if completed:
        print(f"VERIFIED: {statement.theorem_id} (completion signal)")
        return 0
    if not failed and result.qed_accepted:
        print(f"VERIFIED: {statement.theorem_id} (Qed accepted)")
        return 0
    reason = "tactic failure" if failed else "Qed rejected"
    print(f"REJECTED: {statement.theorem_id} ({reason})")
    return 1


def _collect_report_paths(inputs: list[str]) -> list[Path]:
    paths: list[Path] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.rglob("report.json")))
        elif p.is_file():
            paths.append(p)
        else:
            raise EvoproofError(f"no such report or directory: {item}")
    if not paths:
        raise EvoproofError("no report.json files found under the given paths")
    return paths


def cmd_stats(args: argparse.Namespace) -> int:
    paths = _collect_report_paths(args.paths)
    reports = [(p, RunReport.read_json(p)) for p in paths]
    hashes = {report.config_hash for _, report in reports}
    if len(hashes) > 1:
        print("cannot aggregate: runs carry different configuration hashes:", file=sys.stderr)
        for path, report in reports:
            print(f"  {report.config_hash[:12]}  {path}", file=sys.stderr)
        return 1

    by_theorem: dict[str, list[tuple[Path, RunReport]]] = {}
    for path, report in reports:
        by_theorem.setdefault(report.theorem_id, []).append((path, report))

    # distinct proofs are unioned across runs; a proof's generation is the
    # earliest generation any run found it in
    first_gen_by_key: dict[str, dict] = {}
    merged: dict[str, ProofArchive] = {}
    for theorem_id, group in by_theorem.items():
        merged[theorem_id] = ProofArchive()
        first_gen_by_key[theorem_id] = {}
        for path, _ in group:
            sibling = path.parent / "archive.jsonl"
            if not sibling.is_file():
                continue
            archive = ProofArchive.read_jsonl(sibling)
            merged[theorem_id] = merged[theorem_id].merge(archive)
            for record in archive.records:
                known = first_gen_by_key[theorem_id].get(record.key)
                if known is None or record.generation < known:
                    first_gen_by_key[theorem_id][record.key] = record.generation

    csv_rows: list[list] = []
    for theorem_id, group in by_theorem.items():
        group_reports = [report for _, report in group]
        runs = len(group_reports)
        found = [
            report
            for report in group_reports
            if report.totals and report.totals.first_complete_generation is not None
        ]
        distinct = len(merged[theorem_id])
        best = max(
            (row.best_fitness for report in group_reports for row in report.generations),
            default=0,
        )
        print(
            f"theorem {theorem_id}: runs={runs} runs_with_proof={len(found)} "
            f"distinct_proofs={distinct} best_fitness={best}"
        )
        if found:
            earliest = min(
                found,
                key=lambda r: (r.totals.first_complete_generation, r.config.seed),
            )
            gen = earliest.totals.first_complete_generation
            length = earliest.totals.first_complete_length
            pop = earliest.config.pop_size
            # the initial random population is generation 0; a find there
            # still consumed one population's worth of evaluations
            budget = pop * gen if gen > 0 else pop
            probability = random_search_probability(
                budget, earliest.base_size, length
            )
            print(
                f"  first proof: generation {gen}, length {length}, seed {earliest.config.seed}"
            )
            print(
                f"  random-search baseline: p = {probability.text} "
                f"(budget {budget} evaluations, base {earliest.base_size}, length {length})"
            )
        generation_count = max(len(r.generations) for r in group_reports)
        for g in range(generation_count):
            rows = [r.generations[g] for r in group_reports if len(r.generations) > g]
            union = sum(
                1 for gen_found in first_gen_by_key[theorem_id].values() if gen_found <= g
            )
            csv_rows.append(
                [
                    theorem_id,
                    g,
                    len(rows),
                    max(row.best_fitness for row in rows),
                    sum(row.mean_fitness for row in rows) / len(rows),
                    sum(row.complete_count for row in rows),
                    union,
                ]
            )
    if args.csv:
        import csv as _csv

        with open(args.csv, "w", newline="", encoding="utf-8") as handle:
            writer = _csv.writer(handle, lineterminator="\n")
            writer.writerow(
                [
                    "theorem",
                    "generation",
                    "runs",
                    "best_fitness",
                    "mean_fitness",
                    "complete_count",
                    "distinct_union",
                ]
            )
            writer.writerows(csv_rows)
        print(f"aggregate rows written to {args.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoproof",
        description="Evolutionary search for proof-assistant tactic scripts.",
    )
    parser.add_argument("--version", action="version", version=f"evoproof {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evolve proofs and write run reports")
    run.add_argument("--config", help="key=value options file; flags override it")
    run.add_argument(
        "--theorem",
        action="append",
        default=None,
        help="theorem file; repeatable (default: the bundled suite for the backend)",
    )
    run.add_argument("--tactic-base", dest="tactic_base", help="tactic base file")
    run.add_argument("--backend", choices=["toy", "coq"], default=None)
    run.add_argument("--coq", help="coqtop executable (overrides the environment)")
    run.add_argument("--pop-size", dest="pop_size", type=int)
    run.add_argument("--max-gen", dest="max_gen", type=int)
    run.add_argument("--mut-rate", dest="mut_rate", type=float)
    run.add_argument("--len-min", dest="len_min", type=int)
    run.add_argument("--len-max", dest="len_max", type=int)
    run.add_argument("--completion-base", dest="completion_base", type=int)
    run.add_argument(
        "--seed",
        action="append",
        type=_seed_values,
        default=None,
        metavar="SEED[,SEED...]",
        help="run seed; repeatable or comma-separated",
    )
    run.add_argument("--out", help="output directory (default: runs)")
    run.add_argument("--workers", type=int, help="parallel evaluation workers")
    run.add_argument("--step-timeout", dest="step_timeout", type=float)
    run.add_argument("--verbose", action="store_true", help="print per-generation rows")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="replay a proof script through a backend")
    verify.add_argument("script", help="proof script file")
    verify.add_argument("--theorem", required=True, help="theorem file the script proves")
    verify.add_argument("--backend", choices=["toy", "coq"], default="toy")
    verify.add_argument("--coq", help="coqtop executable")
    verify.add_argument("--step-timeout", dest="step_timeout", type=float, default=5.0)
    verify.set_defaults(func=cmd_verify)

    stats = sub.add_parser("stats", help="aggregate reports from replicate runs")
    stats.add_argument("paths", nargs="+", help="report.json files or run directories")
    stats.add_argument("--csv", help="write per-generation aggregate rows to this file")
    stats.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EvoproofError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
