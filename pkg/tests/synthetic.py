"""Synthetic score-table builders shared by the test modules."""

import numpy as np

from serialfusion import SynthSpec, synth_generate


def spec(means, gen_std=None, n_genuine=1000, n_impostor=10000, corr=None,
         names=None, imp_mean=None, imp_std=None):
    m = len(means)
    names = names or tuple(f"m{i + 1}" for i in range(m))
    return SynthSpec(
        names,
        means,
        gen_std if gen_std is not None else [1.0] * m,
        imp_mean if imp_mean is not None else [0.0] * m,
        imp_std if imp_std is not None else [1.0] * m,
        correlation=corr,
        n_genuine=n_genuine,
        n_impostor=n_impostor,
    )


def equicorrelated(m, r):
    c = np.full((m, m), float(r))
    np.fill_diagonal(c, 1.0)
    return c


def table(means, seed, **kw):
    return synth_generate(spec(means, **kw), seed)


def separable(seed=0, n=200, m=2):
    """Genuine scores in [2, 3], impostor scores in [0, 1]: no overlap."""
    from serialfusion import MatchedScoreTable

    rng = np.random.default_rng(seed)
    gen = rng.uniform(2, 3, size=(n, m))
    imp = rng.uniform(0, 1, size=(n, m))
    names = tuple(f"m{i + 1}" for i in range(m))
    ids = [f"g{i}" for i in range(n)] + [f"i{i}" for i in range(n)]
    labels = np.r_[np.ones(n, bool), np.zeros(n, bool)]
    return MatchedScoreTable(names, ids, labels, np.vstack([gen, imp]))


# Matchers of increasing auc where the strongest one has the widest genuine
# spread (heavy lower tail), as a fingerprint matcher next to face matchers.
ORDERING_MEANS = (2.0, 3.5, 6.0)
ORDERING_GEN_STD = (0.5, 0.6, 1.5)


def ordering_table(seed, n_genuine=2000, n_impostor=20000):
    return table(ORDERING_MEANS, seed, gen_std=ORDERING_GEN_STD, names=("a", "b", "c"),
                 n_genuine=n_genuine, n_impostor=n_impostor)
