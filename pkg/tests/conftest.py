import numpy as np
import pytest

from pvfaultsig.forest import Tree
from pvfaultsig.synth import SynthConfig, generate_all


def make_random_tree(rng: np.random.Generator, n_features: int = 6, max_depth: int = 4,
                     n_classes: int = 8, leaf_prob: float = 0.25) -> Tree:
    """Random tree with consistent covers and normalized leaf distributions.

    Features may repeat along a path, which exercises the explainer's
    unwind logic.
    """
    left, right, feature, threshold, value, cover = [], [], [], [], [], []

    def gen(depth: int) -> int:
        node = len(cover)
        left.append(-1)
        right.append(-1)
        feature.append(-1)
        threshold.append(0.0)
        value.append(None)
        cover.append(0.0)
        if depth >= max_depth or rng.random() < leaf_prob:
            dist = rng.random(n_classes)
            value[node] = dist / dist.sum()
            cover[node] = float(rng.integers(1, 20))
            return node
        feature[node] = int(rng.integers(0, n_features))
        threshold[node] = float(rng.random())
        l = gen(depth + 1)
        r = gen(depth + 1)
        left[node], right[node] = l, r
        cover[node] = cover[l] + cover[r]
        value[node] = (cover[l] * value[l] + cover[r] * value[r]) / cover[node]
        return node

    gen(0)
    return Tree(np.asarray(left), np.asarray(right), np.asarray(feature),
                np.asarray(threshold), np.asarray(value), np.asarray(cover))


@pytest.fixture(scope="session")
def small_synth_tables():
    """8 labeled tables, 30 cycles each; shared across tests for speed."""
    return generate_all(SynthConfig(n_cycles=30, seed=11))
