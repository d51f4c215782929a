"""Stochastic change model and Monte-Carlo branch-probability estimation.

For each individual, the table stores the probability of taking the right
branch at every node, for every effort level 0..E. Estimation draws one
common sample vector per (feature, effort level) and reuses it across all
nodes splitting on that feature, which makes estimates monotone in the
threshold and cuts variance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .forest import BINARY, CONTINUOUS, FeatureMeta, Forest


class TableFormatError(ValueError):
    """A probability-table document failed validation."""


@dataclass
class FeaturePerturbation:
    """Per-feature parameters of the change model."""

    sigma: float | None = None        # continuous: no-effort draws are U[0, sigma]
    p_majority: float | None = None   # binary: majority-class frequency, in [0.5, 1]
    no_effort_perturbable: bool = True
    effort_perturbable: bool = True


@dataclass
class PerturbationSpec:
    features: list[FeaturePerturbation]
    feature_metas: list[FeatureMeta]
    num_samples: int = 1000
    effort_scale: float = 1.5     # effort draws are U[0, (1 + (scale-1)*e) * sigma]
    effort_floor: float = 0.2     # binary flip probability floor, scaled by e
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if len(self.features) != len(self.feature_metas):
            raise ValueError("one FeaturePerturbation per feature required")
        for fp, meta in zip(self.features, self.feature_metas):
            perturbable = fp.no_effort_perturbable or fp.effort_perturbable
            if meta.kind == CONTINUOUS and perturbable:
                if fp.sigma is None or fp.sigma <= 0:
                    raise ValueError(f"feature {meta.name}: sigma must be positive")
            if meta.kind == BINARY and perturbable:
                if fp.p_majority is None or not 0.5 <= fp.p_majority <= 1.0:
                    raise ValueError(f"feature {meta.name}: p_majority must be in [0.5, 1]")
            if fp.effort_perturbable and meta.beneficial == "none":
                raise ValueError(f"feature {meta.name}: effort needs a beneficial direction")

    def scale_for(self, effort: int) -> float:
        return 1.0 + (self.effort_scale - 1.0) * effort

    def flip_probability(self, feature: int, effort: int) -> float:
        p = self.features[feature].p_majority
        return max(1.0 - p, min(1.0, self.effort_floor * effort))

    @staticmethod
    def from_dataset(train_split: Dataset, num_samples: int = 1000, seed: int = 0,
                     effort_scale: float = 1.5, effort_floor: float = 0.2) -> "PerturbationSpec":
        """Build the change model from training-split statistics."""
        sigmas = train_split.feature_sigmas()
        feats = []
        for j, meta in enumerate(train_split.feature_metas):
            if meta.kind == BINARY:
                feats.append(FeaturePerturbation(
                    p_majority=train_split.binary_majority_freq(j),
                    effort_perturbable=meta.mutable,
                ))
            else:
                sigma = float(sigmas[j])
                feats.append(FeaturePerturbation(
                    sigma=sigma if sigma > 0 else None,
                    no_effort_perturbable=sigma > 0,
                    effort_perturbable=meta.mutable and sigma > 0,
                ))
        return PerturbationSpec(feats, train_split.feature_metas, num_samples=num_samples,
                                seed=seed, effort_scale=effort_scale, effort_floor=effort_floor)


def perturb_value(value: float, meta: FeatureMeta, spec: PerturbationSpec,
                  effort: int, rng: np.random.Generator) -> float:
    """Draw one perturbed future value for a single feature."""
    fp = spec.features[meta.index]
    if effort < 0:
        raise ValueError("effort must be nonnegative")
    if effort > 0 and not fp.effort_perturbable:
        raise ValueError(f"feature {meta.name} cannot take effort")
    if effort == 0 and not fp.no_effort_perturbable:
        return value
    if meta.kind == CONTINUOUS:
        if effort == 0:
            sign = 1.0 if rng.random() < 0.5 else -1.0
            delta = rng.uniform(0.0, fp.sigma)
        else:
            sign = 1.0 if meta.beneficial == "increase" else -1.0
            delta = rng.uniform(0.0, spec.scale_for(effort) * fp.sigma)
        return float(min(max(value + sign * delta, meta.lo), meta.hi))
    if effort == 0:
        return float(1.0 - value) if rng.random() < 1.0 - fp.p_majority else float(value)
    beneficial = meta.beneficial_value
    if value == beneficial:
        return float(value)
    return beneficial if rng.random() < spec.flip_probability(meta.index, effort) else float(value)


def _perturb_samples(value, meta, spec, effort, rng, n):
    """Vectorized draw of n perturbed values (same model as perturb_value)."""
    fp = spec.features[meta.index]
    if effort == 0 and not fp.no_effort_perturbable:
        return np.full(n, value)
    if meta.kind == CONTINUOUS:
        if effort == 0:
            signs = rng.integers(0, 2, size=n) * 2.0 - 1.0
            deltas = rng.uniform(0.0, fp.sigma, size=n)
        else:
            signs = 1.0 if meta.beneficial == "increase" else -1.0
            deltas = rng.uniform(0.0, spec.scale_for(effort) * fp.sigma, size=n)
        return np.clip(value + signs * deltas, meta.lo, meta.hi)
    if effort == 0:
        flips = rng.random(n) < 1.0 - fp.p_majority
        return np.where(flips, 1.0 - value, value)
    beneficial = meta.beneficial_value
    if value == beneficial:
        return np.full(n, value)
    flips = rng.random(n) < spec.flip_probability(meta.index, effort)
    return np.where(flips, beneficial, value)


@dataclass
class NodeProbabilityTable:
    """Right-branch probability per (tree, node) at every effort level 0..E."""

    individual: int
    E: int
    probs: dict[tuple[int, int], tuple[float, ...]] = field(default_factory=dict)

    def right_prob(self, tree_index: int, node_id: int, effort: int) -> float:
        return self.probs[(tree_index, node_id)][effort]

    def validate_against(self, forest: Forest) -> None:
        expected = {
            (t, node_id)
            for t, tree in enumerate(forest.trees)
            for node_id in tree.nodes
        }
        got = set(self.probs)
        if missing := expected - got:
            raise TableFormatError(f"table missing entries for nodes {sorted(missing)[:5]}")
        if extra := got - expected:
            raise TableFormatError(f"table has entries for unknown nodes {sorted(extra)[:5]}")
        for (t, node_id), row in self.probs.items():
            if len(row) != self.E + 1:
                raise TableFormatError(f"tree {t} node {node_id}: expected {self.E + 1} effort levels")
            if any(not 0.0 <= p <= 1.0 for p in row):
                raise TableFormatError(f"tree {t} node {node_id}: probability outside [0, 1]")
            feature = forest.trees[t].nodes[node_id].feature
            if not forest.feature_metas[feature].mutable and any(p != row[0] for p in row):
                raise TableFormatError(
                    f"tree {t} node {node_id}: effort changes an immutable feature's probabilities"
                )

    def to_dict(self) -> dict:
        return {
            "individual": self.individual,
            "E": self.E,
            "entries": [
                {"tree": t, "node": node_id, "right": list(row)}
                for (t, node_id), row in sorted(self.probs.items())
            ],
        }

    @staticmethod
    def from_dict(doc: dict, forest: Forest | None = None) -> "NodeProbabilityTable":
        try:
            table = NodeProbabilityTable(
                individual=doc["individual"],
                E=doc["E"],
                probs={
                    (e["tree"], e["node"]): tuple(float(p) for p in e["right"])
                    for e in doc["entries"]
                },
            )
        except (KeyError, TypeError) as exc:
            raise TableFormatError(f"malformed table document: {exc}") from exc
        if len(table.probs) != len(doc["entries"]):
            raise TableFormatError("duplicate (tree, node) entry")
        for (t, node_id), row in table.probs.items():
            if len(row) != table.E + 1 or any(not 0.0 <= p <= 1.0 for p in row):
                raise TableFormatError(f"tree {t} node {node_id}: bad probability row")
        if forest is not None:
            table.validate_against(forest)
        return table


def estimate_node_probabilities(forest: Forest, x0, spec: PerturbationSpec,
                                E: int, individual: int = 0) -> NodeProbabilityTable:
    """Monte-Carlo right-branch probabilities for one individual.

    One stream per (seed, individual, feature, effort level); the same n_s
    draws are shared by every node of that feature. Features whose effort
    perturbation is not allowed reuse their no-effort row, so effort never
    changes an immutable feature's probabilities.
    """
    if len(x0) != forest.num_features:
        raise ValueError("x0 has the wrong dimension")
    used = sorted({n.feature for tree in forest.trees for n in tree.nodes.values()})
    samples: dict[tuple[int, int], np.ndarray] = {}
    for j in used:
        meta = forest.feature_metas[j]
        fp = spec.features[j]
        for e in range(E + 1):
            if e > 0 and not fp.effort_perturbable:
                samples[(j, e)] = samples[(j, 0)]
                continue
            rng = np.random.default_rng(np.random.SeedSequence([spec.seed, individual, j, e]))
            samples[(j, e)] = _perturb_samples(float(x0[j]), meta, spec, e, rng, spec.num_samples)
    probs = {}
    for t, tree in enumerate(forest.trees):
        for node in tree.nodes.values():
            row = tuple(
                float(np.mean(samples[(node.feature, e)] >= node.threshold))
                for e in range(E + 1)
            )
            probs[(t, node.id)] = row
    return NodeProbabilityTable(individual=individual, E=E, probs=probs)


def save_table(table: NodeProbabilityTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_table(path, forest: Forest | None = None) -> NodeProbabilityTable:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TableFormatError(f"{path}: not valid JSON at line {exc.lineno}") from exc
    return NodeProbabilityTable.from_dict(doc, forest)
