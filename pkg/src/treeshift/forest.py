"""Binary-split tree ensembles: structure, prediction, leaf geometry, JSON round trip.

Routing semantics everywhere: an observation goes right at a node iff
``x[feature] >= threshold`` and left otherwise. Leaf regions therefore tile
the feature space; the epsilon-closed boxes returned by :func:`leaf_box`
realize the strict left-branch inequality as ``x <= threshold - epsilon``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

DEFAULT_EPSILON = 1e-6

CONTINUOUS = "continuous"
BINARY = "binary"
DIRECTIONS = ("increase", "decrease", "to_one", "to_zero", "none")


class ForestFormatError(ValueError):
    """A forest document or structure failed validation."""


class DegenerateBoxError(ValueError):
    """Epsilon shrank a leaf interval to emptiness."""


@dataclass(frozen=True)
class FeatureMeta:
    """Static description of one input feature."""

    index: int
    name: str
    kind: str = CONTINUOUS
    mutable: bool = True
    beneficial: str = "none"
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, BINARY):
            raise ValueError(f"feature {self.name}: unknown kind {self.kind!r}")
        if self.beneficial not in DIRECTIONS:
            raise ValueError(f"feature {self.name}: unknown direction {self.beneficial!r}")
        if self.kind == BINARY and (self.lo, self.hi) != (0.0, 1.0):
            raise ValueError(f"feature {self.name}: binary features use the [0, 1] domain")
        if self.lo >= self.hi:
            raise ValueError(f"feature {self.name}: empty domain [{self.lo}, {self.hi}]")
        if self.beneficial == "none" and self.mutable:
            raise ValueError(f"feature {self.name}: mutable features need a beneficial direction")
        if self.kind == BINARY and self.beneficial in ("increase", "decrease"):
            raise ValueError(f"feature {self.name}: binary features use to_one/to_zero")
        if self.kind == CONTINUOUS and self.beneficial in ("to_one", "to_zero"):
            raise ValueError(f"feature {self.name}: continuous features use increase/decrease")

    @property
    def domain(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def beneficial_value(self) -> float:
        # binary only
        return 1.0 if self.beneficial == "to_one" else 0.0


@dataclass(frozen=True)
class Node:
    id: int
    feature: int
    threshold: float
    left: int
    right: int


@dataclass(frozen=True)
class Leaf:
    id: int
    predicted_class: int

    def __post_init__(self):
        if self.predicted_class not in (0, 1):
            raise ForestFormatError(f"leaf {self.id}: class must be 0 or 1")


class Tree:
    """One proper binary tree. Immutable after construction.

    ``paths`` maps each leaf id to the root-to-leaf path as a tuple of
    ``(node_id, went_right)`` pairs (the left/right ancestor sets).
    """

    def __init__(self, root: int, nodes: list[Node], leaves: list[Leaf], weight: float = 1.0):
        if weight < 0:
            raise ForestFormatError("tree weight must be nonnegative")
        self.root = root
        self.nodes = {n.id: n for n in nodes}
        self.leaves = {l.id: l for l in leaves}
        self.weight = weight
        if len(self.nodes) != len(nodes) or len(self.leaves) != len(leaves):
            raise ForestFormatError("duplicate node or leaf id")
        if set(self.nodes) & set(self.leaves):
            raise ForestFormatError("node and leaf ids must be disjoint")
        self.paths = self._trace_paths()
        self.depth = max((len(p) for p in self.paths.values()), default=0)

    def _trace_paths(self) -> dict[int, tuple[tuple[int, bool], ...]]:
        if not self.leaves:
            raise ForestFormatError("tree has no leaves")
        if self.root not in self.nodes and self.root not in self.leaves:
            raise ForestFormatError(f"root id {self.root} undefined")
        paths: dict[int, tuple[tuple[int, bool], ...]] = {}
        seen: set[int] = set()
        stack: list[tuple[int, tuple[tuple[int, bool], ...]]] = [(self.root, ())]
        while stack:
            ident, path = stack.pop()
            if ident in seen:
                raise ForestFormatError(f"id {ident} reached twice (not a tree)")
            seen.add(ident)
            if ident in self.leaves:
                paths[ident] = path
                continue
            node = self.nodes.get(ident)
            if node is None:
                raise ForestFormatError(f"dangling child id {ident}")
            stack.append((node.left, path + ((node.id, False),)))
            stack.append((node.right, path + ((node.id, True),)))
        unreachable = (set(self.nodes) | set(self.leaves)) - seen
        if unreachable:
            raise ForestFormatError(f"unreachable ids {sorted(unreachable)}")
        return paths

    def leaf_ids(self) -> list[int]:
        return sorted(self.leaves)


class Forest:
    """An ordered list of trees over a shared feature space."""

    def __init__(self, trees: list[Tree], feature_metas: list[FeatureMeta]):
        if not trees:
            raise ForestFormatError("forest needs at least one tree")
        for j, meta in enumerate(feature_metas):
            if meta.index != j:
                raise ForestFormatError(f"feature meta {meta.name} out of order (index {meta.index} at {j})")
        self.trees = list(trees)
        self.feature_metas = list(feature_metas)
        self.num_features = len(feature_metas)
        counts = [0] * self.num_features
        for t, tree in enumerate(self.trees):
            for node in tree.nodes.values():
                if not 0 <= node.feature < self.num_features:
                    raise ForestFormatError(f"node {node.id} in tree {t}: feature {node.feature} out of range")
                meta = self.feature_metas[node.feature]
                if not meta.lo < node.threshold < meta.hi:
                    raise ForestFormatError(
                        f"node {node.id} in tree {t}: threshold {node.threshold} outside domain"
                    )
                counts[node.feature] += 1
        self.feature_occurrence_counts = counts

    @property
    def num_trees(self) -> int:
        return len(self.trees)

    @property
    def domains(self) -> list[tuple[float, float]]:
        return [m.domain for m in self.feature_metas]

    def equal_weights(self) -> bool:
        return len({t.weight for t in self.trees}) == 1

    def _check_point(self, x) -> None:
        if len(x) != self.num_features:
            raise ValueError(f"point has {len(x)} coordinates, forest expects {self.num_features}")

    def predict(self, x) -> tuple[int, list[int]]:
        """Weighted majority vote. Returns (class, per-tree votes); ties go to class 0."""
        self._check_point(x)
        votes = [tree.leaves[leaf_of(tree, x)].predicted_class for tree in self.trees]
        w1 = sum(t.weight for t, v in zip(self.trees, votes) if v == 1)
        w0 = sum(t.weight for t, v in zip(self.trees, votes) if v == 0)
        return (1 if w1 > w0 else 0), votes

    def leaf_box(self, tree_index: int, leaf_id: int, epsilon: float = DEFAULT_EPSILON):
        return leaf_box(self.trees[tree_index], leaf_id, self.domains, epsilon)


def leaf_of(tree: Tree, x) -> int:
    """Follow the splits from the root; returns the id of the leaf containing x."""
    ident = tree.root
    while ident in tree.nodes:
        node = tree.nodes[ident]
        ident = node.right if x[node.feature] >= node.threshold else node.left
    return ident


def leaf_box(tree: Tree, leaf_id: int, domains, epsilon: float = DEFAULT_EPSILON):
    """Axis-aligned closed box implied by a leaf's ancestor splits.

    Right ancestors impose ``x >= threshold``; left ancestors impose
    ``x <= threshold - epsilon``. Features absent from the path keep their
    full domain.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    box = [list(dom) for dom in domains]
    for node_id, went_right in tree.paths[leaf_id]:
        node = tree.nodes[node_id]
        lo, hi = box[node.feature]
        if went_right:
            lo = max(lo, node.threshold)
        else:
            hi = min(hi, node.threshold - epsilon)
        if lo > hi:
            raise DegenerateBoxError(
                f"leaf {leaf_id}: feature {node.feature} interval [{lo}, {hi}] is empty"
            )
        box[node.feature] = [lo, hi]
    return [(lo, hi) for lo, hi in box]


def boxes_intersect(boxes):
    """Coordinate-wise intersection of per-feature interval boxes; None if empty."""
    if not boxes:
        raise ValueError("no boxes given")
    d = len(boxes[0])
    out = []
    for j in range(d):
        lo = max(b[j][0] for b in boxes)
        hi = min(b[j][1] for b in boxes)
        if lo > hi:
            return None
        out.append((lo, hi))
    return out


# --- JSON document round trip -------------------------------------------------

def forest_to_dict(forest: Forest) -> dict:
    return {
        "num_features": forest.num_features,
        "features": [
            {
                "index": m.index,
                "name": m.name,
                "kind": m.kind,
                "mutable": m.mutable,
                "beneficial": m.beneficial,
                "lo": m.lo,
                "hi": m.hi,
            }
            for m in forest.feature_metas
        ],
        "trees": [
            {
                "weight": tree.weight,
                "root": tree.root,
                "nodes": [
                    {
                        "id": n.id,
                        "feature": n.feature,
                        "threshold": n.threshold,
                        "left": n.left,
                        "right": n.right,
                    }
                    for n in sorted(tree.nodes.values(), key=lambda n: n.id)
                ],
                "leaves": [
                    {"id": l.id, "class": l.predicted_class}
                    for l in sorted(tree.leaves.values(), key=lambda l: l.id)
                ],
            }
            for tree in forest.trees
        ],
    }


def forest_from_dict(doc: dict) -> Forest:
    try:
        metas = [
            FeatureMeta(
                index=f["index"],
                name=f["name"],
                kind=f.get("kind", CONTINUOUS),
                mutable=f.get("mutable", True),
                beneficial=f.get("beneficial", "none"),
                lo=f.get("lo", 0.0),
                hi=f.get("hi", 1.0),
            )
            for f in doc["features"]
        ]
        if doc["num_features"] != len(metas):
            raise ForestFormatError("num_features does not match the features list")
        trees = []
        for t, tdoc in enumerate(doc["trees"]):
            try:
                nodes = [
                    Node(n["id"], n["feature"], float(n["threshold"]), n["left"], n["right"])
                    for n in tdoc["nodes"]
                ]
                leaves = [Leaf(l["id"], l["class"]) for l in tdoc["leaves"]]
                trees.append(Tree(tdoc["root"], nodes, leaves, float(tdoc.get("weight", 1.0))))
            except ForestFormatError as exc:
                raise ForestFormatError(f"tree {t}: {exc}") from exc
        return Forest(trees, metas)
    except (KeyError, TypeError) as exc:
        raise ForestFormatError(f"malformed forest document: missing or bad field {exc}") from exc


def save_forest(forest: Forest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(forest_to_dict(forest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_forest(path) -> Forest:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ForestFormatError(f"{path}: not valid JSON at line {exc.lineno}") from exc
    return forest_from_dict(doc)
