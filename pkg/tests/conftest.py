"""Shared naive oracles: independent, loop-based reference implementations.

These deliberately avoid the library's code paths (and mostly numpy) so that
agreement is meaningful.
"""

from __future__ import annotations

import math

import numpy as np
import pytest


def naive_expected_utilities(values, weights, exclude_self):
    """Reference expectation via plain Python loops.

    Sums are exactly rounded (fsum) so arithmetic ties land on the same float
    as any other exactly rounded implementation.
    """
    n = len(values)
    scores = []
    for h in range(n):
        num = []
        den = []
        for j in range(n):
            if exclude_self and j == h:
                continue
            num.append(float(values[h][j]) * float(weights[j]))
            den.append(float(weights[j]))
        scores.append(math.fsum(num) / math.fsum(den))
    return scores


def naive_argmax(scores):
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


def naive_token_f1(a, b):
    """Independent multiset-F1: dict counting instead of collections.Counter."""

    def counts(s):
        out = {}
        for tok in s.lower().split():
            out[tok] = out.get(tok, 0) + 1
        return out

    ca, cb = counts(a), counts(b)
    na, nb = sum(ca.values()), sum(cb.values())
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    overlap = 0
    for tok, c in ca.items():
        overlap += min(c, cb.get(tok, 0))
    return 2.0 * overlap / (na + nb)


def naive_ranks(values):
    """Fractional average ranks computed positionally (1-based)."""
    n = len(values)
    ranks = [0.0] * n
    for i, v in enumerate(values):
        less = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        ranks[i] = less + (equal + 1) / 2.0
    return ranks


def naive_spearman(a, b):
    """Rank-then-Pearson with explicit sums."""
    ra, rb = naive_ranks(list(a)), naive_ranks(list(b))
    n = len(ra)
    ma = sum(ra) / n
    mb = sum(rb) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    va = sum((x - ma) ** 2 for x in ra)
    vb = sum((y - mb) ** 2 for y in rb)
    if va == 0.0 or vb == 0.0:
        return float("nan")
    return cov / math.sqrt(va * vb)


def random_matrix(rng, n, lo=0.0, hi=1.0, symmetric=True, kind="external:test"):
    from mbrkit.utility import UtilityMatrix

    values = rng.uniform(lo, hi, size=(n, n))
    if symmetric:
        values = (values + values.T) / 2.0
        np.fill_diagonal(values, 1.0)
    return UtilityMatrix(n=n, values=values.astype(np.float32), kind=kind)


def blob_embeddings(rng, k, points_per_cluster, d=6, center_scale=50.0, spread=1.0):
    """Well-separated Gaussian blobs plus their true labels."""
    from mbrkit.utility import EmbeddingSet

    centers = rng.normal(0.0, center_scale, size=(k, d))
    vectors = []
    labels = []
    for c in range(k):
        pts = centers[c] + rng.normal(0.0, spread, size=(points_per_cluster, d))
        vectors.append(pts)
        labels.extend([c] * points_per_cluster)
    x = np.vstack(vectors).astype(np.float32)
    return EmbeddingSet(n=x.shape[0], d=d, vectors=x), labels


def _band_space(space_id, cross_pull, cross_other):
    """One 8-candidate space: cluster a of 5 (candidate 0 cross-pulled,
    candidate 1 conditionally optimal), cluster b of 3.

    Within-cluster utilities sit above 0.6 and cross-cluster pulls are
    ``cross_pull`` (candidate 0's row) and ``cross_other`` elsewhere, so a
    cut-off between the bands removes exactly the cross-cluster influence.
    """
    from mbrkit.corpus import Candidate, OutcomeSpace
    from mbrkit.utility import UtilityMatrix

    n = 8
    values = np.zeros((n, n), dtype=np.float64)
    within_a = {
        (0, 1): 0.65, (0, 2): 0.65, (0, 3): 0.65, (0, 4): 0.65,
        (1, 2): 0.70, (1, 3): 0.70, (1, 4): 0.70,
        (2, 3): 0.60, (2, 4): 0.60, (3, 4): 0.60,
    }
    within_b = {(5, 6): 0.68, (5, 7): 0.66, (6, 7): 0.64}
    for (i, j), u in {**within_a, **within_b}.items():
        values[i, j] = values[j, i] = u
    for j in (5, 6, 7):
        values[0, j] = values[j, 0] = cross_pull
        for i in (1, 2, 3, 4):
            values[i, j] = values[j, i] = cross_other
    np.fill_diagonal(values, 1.0)
    space = OutcomeSpace(
        id=space_id,
        context="band",
        candidates=tuple(
            Candidate(text=f"{space_id} cand {i}", label="a" if i < 5 else "b") for i in range(n)
        ),
    )
    matrix = UtilityMatrix(n=n, values=values.astype(np.float32), kind="external:band")
    return space, matrix


def make_separable_corpus(n_spaces):
    """Corpus where cross-cluster utilities < 0.4 < 0.6 < within-cluster.

    Standard exclude-self selection picks the cross-pulled candidate 0
    (a miss); any absolute cut-off in (0.399, 0.6] restores the conditional
    optimum (candidate 1) in every space.
    """
    from mbrkit.corpus import Corpus

    spaces, matrices = [], {}
    for k in range(n_spaces):
        space, matrix = _band_space(f"band{k}", cross_pull=0.399, cross_other=0.30)
        spaces.append(space)
        matrices[space.id] = matrix
    return Corpus(spaces=tuple(spaces), provenance="separable"), matrices


def make_cosine_band_corpus(n_spaces):
    """Corpus + embeddings where within-cluster rescaled cosine ~ 0.98 and
    cross-cluster rescaled cosine is exactly 0.5 (0.595 for candidate 0).

    Candidate 0 carries a strong raw utility toward cluster b (0.85), so
    unthresholded embedding weighting still mispicks it; zeroing cosines
    below any threshold in (0.595, 0.96) restores the conditional optimum.
    """
    from mbrkit.corpus import Corpus
    from mbrkit.utility import EmbeddingSet

    d = 10  # u_a, u_b, 5 private axes for a, 3 for b
    a_hub, b_hub = 0, 1
    a_coef, b_coef = 0.98, 0.98
    pull = 0.19 / b_coef  # candidate 0's component along b's hub
    a0 = np.sqrt(1.0 - pull * pull - 0.0059)
    spaces, matrices, embeddings = [], {}, {}
    for k in range(n_spaces):
        space, matrix = _band_space(f"cos{k}", cross_pull=0.85, cross_other=0.30)
        vectors = np.zeros((8, d), dtype=np.float64)
        for i in range(5):
            if i == 0:
                vectors[i, a_hub] = a0
                vectors[i, b_hub] = pull
                vectors[i, 2] = np.sqrt(0.0059)
            else:
                vectors[i, a_hub] = a_coef
                vectors[i, 2 + i] = np.sqrt(1.0 - a_coef * a_coef)
        for j in range(3):
            vectors[5 + j, b_hub] = b_coef
            vectors[5 + j, 7 + j] = np.sqrt(1.0 - b_coef * b_coef)
        spaces.append(space)
        matrices[space.id] = matrix
        embeddings[space.id] = EmbeddingSet(n=8, d=d, vectors=vectors.astype(np.float32))
    return Corpus(spaces=tuple(spaces), provenance="cosine-band"), matrices, embeddings


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
