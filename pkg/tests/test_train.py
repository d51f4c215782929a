import numpy as np
import pytest

from treeshift import (Dataset, FeatureMeta, TrainConfig, TrainingError, accuracy,
                       forest_to_dict, impurity_importances, synth_generate, train)


def _toy_dataset():
    X = np.array([[0.1], [0.2], [0.8], [0.9]])
    y = np.array([0, 0, 1, 1])
    return Dataset(X, y, [FeatureMeta(0, "x0", mutable=True, beneficial="increase")])


def test_single_split_at_midpoint():
    forest = train(_toy_dataset(), TrainConfig(num_trees=1, max_depth=1, bootstrap=False))
    tree = forest.trees[0]
    assert len(tree.nodes) == 1
    node = next(iter(tree.nodes.values()))
    assert node.threshold == pytest.approx(0.5)
    left = tree.leaves[node.left].predicted_class
    right = tree.leaves[node.right].predicted_class
    assert (left, right) == (0, 1)


def test_single_class_dataset_rejected():
    ds = _toy_dataset()
    pure = Dataset(ds.X, np.zeros(4, dtype=int), ds.feature_metas)
    with pytest.raises(TrainingError):
        train(pure, TrainConfig(num_trees=1))


def test_same_seed_identical_forest():
    ds = synth_generate(120, 5, seed=0)
    cfg = TrainConfig(num_trees=5, max_depth=3, seed=11)
    assert forest_to_dict(train(ds, cfg)) == forest_to_dict(train(ds, cfg))


def test_different_seed_differs():
    ds = synth_generate(120, 5, seed=0)
    a = train(ds, TrainConfig(num_trees=5, max_depth=3, seed=1))
    b = train(ds, TrainConfig(num_trees=5, max_depth=3, seed=2))
    assert forest_to_dict(a) != forest_to_dict(b)


def test_thresholds_between_observed_values():
    ds = synth_generate(80, 4, seed=1)
    forest = train(ds, TrainConfig(num_trees=4, max_depth=3, seed=3))
    for tree in forest.trees:
        for node in tree.nodes.values():
            col = np.unique(ds.X[:, node.feature])
            assert not np.any(col == node.threshold)
            assert col.min() < node.threshold < col.max()


def test_synthetic_accuracy():
    ds = synth_generate(600, 8, seed=2, label_noise=0.0)
    forest = train(ds, TrainConfig(num_trees=9, max_depth=4, seed=0))
    assert accuracy(forest, ds) >= 0.9


def test_importances_single_feature():
    forest = train(_toy_dataset(), TrainConfig(num_trees=1, max_depth=1, bootstrap=False))
    imp = impurity_importances(forest, _toy_dataset())
    assert imp[0] == pytest.approx(1.0)


def test_importances_unused_feature_zero_and_sum_one():
    ds = synth_generate(150, 6, seed=3)
    forest = train(ds, TrainConfig(num_trees=5, max_depth=3, seed=5))
    imp = impurity_importances(forest, ds)
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(imp >= 0)
    used = {n.feature for t in forest.trees for n in t.nodes.values()}
    for j in range(ds.num_features):
        if j not in used:
            assert imp[j] == 0.0


def test_importances_permutation_equivariant():
    ds = synth_generate(100, 4, seed=4)
    forest = train(ds, TrainConfig(num_trees=3, max_depth=3, seed=7, bootstrap=False,
                                   features_per_split=4))
    imp = impurity_importances(forest, ds)

    perm = [2, 0, 3, 1]  # new position of each old feature
    X2 = ds.X[:, np.argsort(perm)]
    metas2 = []
    for new_j, old_j in enumerate(np.argsort(perm)):
        m = ds.feature_metas[old_j]
        metas2.append(FeatureMeta(new_j, m.name, m.kind, m.mutable, m.beneficial, m.lo, m.hi))
    ds2 = Dataset(X2, ds.y, metas2)
    forest2 = train(ds2, TrainConfig(num_trees=3, max_depth=3, seed=7, bootstrap=False,
                                     features_per_split=4))
    imp2 = impurity_importances(forest2, ds2)
    assert np.allclose(np.sort(imp), np.sort(imp2))
