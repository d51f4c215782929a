"""Built-in demo fixture: one tree over two exam scores, thresholds on [0, 1].

Root splits on the strength score S at 0.7; its left child splits on the
aerobic score A at 0.8 and its right child on A at 0.6. Each subtree has a
failing leaf on the left and a passing leaf on the right. The probability
table carries the right-branch probabilities without effort and with one
unit of effort on the node's feature.
"""
from __future__ import annotations

from .forest import FeatureMeta, Forest, Leaf, Node, Tree
from .probability import NodeProbabilityTable

S, A = 0, 1
LEAF_NO_LEFT, LEAF_YES_LEFT, LEAF_NO_RIGHT, LEAF_YES_RIGHT = 3, 4, 5, 6


def firefighter_forest() -> Forest:
    nodes = [
        Node(id=0, feature=S, threshold=0.7, left=1, right=2),
        Node(id=1, feature=A, threshold=0.8, left=LEAF_NO_LEFT, right=LEAF_YES_LEFT),
        Node(id=2, feature=A, threshold=0.6, left=LEAF_NO_RIGHT, right=LEAF_YES_RIGHT),
    ]
    leaves = [
        Leaf(LEAF_NO_LEFT, 0),
        Leaf(LEAF_YES_LEFT, 1),
        Leaf(LEAF_NO_RIGHT, 0),
        Leaf(LEAF_YES_RIGHT, 1),
    ]
    metas = [
        FeatureMeta(S, "S", mutable=True, beneficial="increase"),
        FeatureMeta(A, "A", mutable=True, beneficial="increase"),
    ]
    return Forest([Tree(root=0, nodes=nodes, leaves=leaves)], metas)


def firefighter_table() -> NodeProbabilityTable:
    return NodeProbabilityTable(
        individual=0,
        E=1,
        probs={
            (0, 0): (0.4, 0.5),   # S >= 0.7
            (0, 1): (0.3, 0.6),   # A >= 0.8
            (0, 2): (0.4, 0.8),   # A >= 0.6
        },
    )
