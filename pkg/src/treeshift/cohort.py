"""Cohort simulation: how often do perturbed individuals reach the target class?"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .forest import BINARY, Forest
from .probability import PerturbationSpec, perturb_value


@dataclass
class SimulationResult:
    percent: float                 # mean % of (individual, replication) pairs reclassified
    per_individual: list[float]    # per-individual reclassification %, cohort order
    n_reps: int
    seed: int


@dataclass
class SimReport:
    """Raw and baseline-normalized reclassification percentages per (method, eta)."""

    raw: dict[tuple[str, int], float]
    baseline: float
    etas: list[int]
    methods: list[str]
    normalized: dict[tuple[str, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.baseline > 0:
            self.normalized = {
                key: value / self.baseline * 100.0 for key, value in self.raw.items()
            }
        else:
            warnings.warn("baseline is 0%; normalized table omitted")
            self.normalized = {}

    def _rows(self, table):
        etas = sorted(self.etas, reverse=True)  # paper orientation: eta = 4..1
        rows = []
        for method in self.methods:
            cells = [table.get((method, eta)) for eta in etas]
            best = [
                eta for eta in etas
                if table.get((method, eta)) is not None
                and table[(method, eta)] == max(
                    table.get((m, eta), float("-inf")) for m in self.methods
                )
            ]
            rows.append((method, etas, cells, best))
        return rows

    def _write(self, path, table):
        etas = sorted(self.etas, reverse=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method"] + [f"eta={e}" for e in etas] + ["best_for_eta"])
            for method, _, cells, best in self._rows(table):
                writer.writerow(
                    [method]
                    + [("" if c is None else f"{c:.2f}") for c in cells]
                    + [";".join(str(e) for e in best)]
                )

    def write_raw_csv(self, path) -> None:
        self._write(path, self.raw)

    def write_normalized_csv(self, path) -> None:
        if not self.normalized:
            raise ValueError("baseline is 0%; no normalized table")
        self._write(path, self.normalized)


def build_report(raw: dict[tuple[str, int], float], baseline: float) -> SimReport:
    methods = sorted({m for m, _ in raw})
    etas = sorted({e for _, e in raw})
    return SimReport(raw=dict(raw), baseline=baseline, etas=etas, methods=methods)


def _check_cohort(cohort) -> None:
    if len(cohort) == 0:
        raise ValueError("empty cohort")


def simulate_cohort(forest: Forest, cohort, target_class: int, effort_features,
                    spec: PerturbationSpec, n_reps: int = 100, seed: int = 0) -> SimulationResult:
    """Perturb every perturbable feature (effort on the given set), then re-predict.

    One RNG stream per (individual, replication). Returns the mean percentage
    of replications landing in the target class, averaged over individuals.
    """
    _check_cohort(cohort)
    effort_set = set(effort_features)
    immutable_with_effort = [
        j for j in effort_set if not spec.features[j].effort_perturbable
    ]
    if immutable_with_effort:
        raise ValueError(f"effort on non-effort-perturbable features {immutable_with_effort}")
    metas = forest.feature_metas
    per_individual = []
    for i, x0 in enumerate(cohort):
        hits = 0
        for rep in range(n_reps):
            rng = np.random.default_rng(np.random.SeedSequence([seed, i, rep]))
            x = [
                perturb_value(float(x0[j]), metas[j], spec, 1 if j in effort_set else 0, rng)
                for j in range(forest.num_features)
            ]
            if forest.predict(x)[0] == target_class:
                hits += 1
        per_individual.append(100.0 * hits / n_reps)
    return SimulationResult(float(np.mean(per_individual)), per_individual, n_reps, seed)


def feasible_baseline(forest: Forest, cohort, target_class: int,
                      spec: PerturbationSpec, n_reps: int = 100, seed: int = 0) -> SimulationResult:
    """Upper-bound run: maximal favorable shift on every feature.

    Continuous effort-perturbable features move deterministically by
     1.5 sigma (the full effort-draw support) in their beneficial direction;
    binary ones keep the stochastic effort flip; everything else gets its
    plain no-effort perturbation.
    """
    _check_cohort(cohort)
    metas = forest.feature_metas
    per_individual = []
    for i, x0 in enumerate(cohort):
        hits = 0
        for rep in range(n_reps):
            rng = np.random.default_rng(np.random.SeedSequence([seed, i, rep, 0xBA5E]))
            x = []
            for j in range(forest.num_features):
                meta, fp = metas[j], spec.features[j]
                value = float(x0[j])
                if fp.effort_perturbable and meta.kind != BINARY:
                    delta = spec.scale_for(1) * fp.sigma
                    shifted = value + (delta if meta.beneficial == "increase" else -delta)
                    x.append(min(max(shifted, meta.lo), meta.hi))
                elif fp.effort_perturbable:
                    x.append(perturb_value(value, meta, spec, 1, rng))
                else:
                    x.append(perturb_value(value, meta, spec, 0, rng))
            if forest.predict(x)[0] == target_class:
                hits += 1
        per_individual.append(100.0 * hits / n_reps)
    return SimulationResult(float(np.mean(per_individual)), per_individual, n_reps, seed)


def report_detail_json(path, results: dict[tuple[str, int], SimulationResult],
                       baseline: SimulationResult) -> None:
    doc = {
        "baseline": {"percent": baseline.percent, "per_individual": baseline.per_individual},
        "cells": [
            {
                "method": method,
                "eta": eta,
                "percent": r.percent,
                "per_individual": r.per_individual,
                "n_reps": r.n_reps,
                "seed": r.seed,
            }
            for (method, eta), r in sorted(results.items())
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
