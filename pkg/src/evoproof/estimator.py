"""Scikit-learn style front end for the proof-search engine.

``ProofSearch`` behaves like other stochastic search estimators: construct
it with hyperparameters, call ``fit`` with a theorem, then read the fitted
attributes (report, archive, best proof).  ``get_params``/``set_params``
and ``clone`` work as usual, so the estimator composes with standard
hyperparameter tooling.
"""

from __future__ import annotations

import os

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .archive import ReportSink, diversity_summary
from .backends import make_backend
from .genome import EAConfig, TacticBase, TheoremStatement, render_tactic_script
from .operators import evolve
from .validation import (
    check_fraction,
    check_int,
    check_seed,
    check_statement,
    check_tactic_base,
)


class ProofSearch(BaseEstimator):
    """Evolve tactic scripts for one theorem and archive every distinct
    complete proof encountered along the way.

    Parameters mirror the engine configuration; the defaults are the full
    production settings, so small experiments should lower ``pop_size`` and
    ``max_gen``.  ``fit`` accepts a theorem statement object, a theorem file
    path, or a bare declaration string.
    """

    def __init__(
        self,
        pop_size: int = 1000,
        max_gen: int = 100,
        mut_rate: float = 0.25,
        len_min: int = 4,
        len_max: int = 15,
        completion_base: int = 1000,
        backend: str = "toy",
        coq_path: str | None = None,
        step_timeout: float = 5.0,
        workers: int = 1,
        tactic_base: TacticBase | str | os.PathLike | None = None,
        random_state: int | None = None,
    ):
        self.pop_size = pop_size
        self.max_gen = max_gen
        self.mut_rate = mut_rate
        self.len_min = len_min
        self.len_max = len_max
        self.completion_base = completion_base
        self.backend = backend
        self.coq_path = coq_path
        self.step_timeout = step_timeout
        self.workers = workers
        self.tactic_base = tactic_base
        self.random_state = random_state

    def _build_config(self) -> EAConfig:
        return EAConfig(
            pop_size=check_int("pop_size", self.pop_size, 2),
            max_gen=check_int("max_gen", self.max_gen, 1),
            mut_rat=check_fraction("mut_rate", self.mut_rate),
            l_lower=check_int("len_min", self.len_min, 1),
            l_upper=check_int("len_max", self.len_max, 1),
            completion_base=check_int("completion_base", self.completion_base, 2),
            seed=check_seed(self.random_state),
            backend_id=self.backend,
        )

    def fit(self, statement, y=None) -> "ProofSearch":
        """Run the evolutionary search against one theorem.

        ``y`` is accepted for pipeline compatibility and ignored.
        """
        config = self._build_config()
        statement = check_statement(statement)
        base = check_tactic_base(self.tactic_base, self.backend)
        backend = make_backend(
            self.backend,
            coq_path=self.coq_path,
            step_timeout=self.step_timeout,
            pool_size=check_int("workers", self.workers, 1),
        )
        sink = ReportSink()
        try:
            report = evolve(config, base, statement, backend, sink, workers=self.workers)
        finally:
            backend.close()
        self.statement_ = statement
        self.tactic_base_ = base
        self.report_ = report
        self.archive_ = sink.archive
        self.n_distinct_proofs_ = len(sink.archive)
        self.best_fitness_ = max(row.best_fitness for row in report.generations)
        best = None
        for record in sink.archive.records:
            if best is None or record.length < best.length:
                best = record
        self.best_proof_ = list(best.tactics) if best is not None else None
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "report_"):
            raise NotFittedError("this ProofSearch instance is not fitted yet")

    def proof_scripts(self) -> list[str]:
        """Rendered scripts for every archived proof, in discovery order."""
        self._check_fitted()
        return [
            render_tactic_script(self.statement_, record.tactics)
            for record in self.archive_.records
        ]

    def diversity(self):
        """Distinct-proof summary for the fitted theorem."""
        self._check_fitted()
        return diversity_summary(self.archive_, self.statement_.theorem_id)
