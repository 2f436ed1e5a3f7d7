"""Array-level pair kernels for the quadratic estimators.

Split out of :mod:`robustshadows.shadows` so the hot path works on plain
(T, k) basis/outcome arrays instead of record objects; one evaluation may
touch a million pairs, and gathering whole record sets per call dominates
otherwise.  Everything here is internal.
"""

from __future__ import annotations

import numpy as np

from .errors import EstimationError


def naive_kernel(
    basis_a: np.ndarray, adj_a: np.ndarray,
    basis_b: np.ndarray, adj_b: np.ndarray,
    ii: np.ndarray, jj: np.ndarray, finv2: np.ndarray,
) -> np.ndarray:
    """prod_c [ finv2 (delta_bb' delta_gg' - delta_gg'/2) + 1/2 ] on pairs."""
    values = np.ones(len(ii))
    for c in range(basis_a.shape[1]):
        same_g = basis_a[ii, c] == basis_b[jj, c]
        same_b = (adj_a[ii, c] == adj_b[jj, c]) & same_g
        values *= finv2[c] * (same_b - 0.5 * same_g) + 0.5
    return values


def same_basis_kernel(
    adj_a: np.ndarray, adj_b: np.ndarray,
    ii: np.ndarray, jj: np.ndarray, finv2: np.ndarray,
) -> np.ndarray:
    """prod_c (1/2) [ finv2/3 * (-1)^(b + b') + 1 ] on matching-basis pairs."""
    values = np.ones(len(ii))
    for c in range(adj_a.shape[1]):
        sign = 1.0 - 2.0 * (adj_a[ii, c] ^ adj_b[jj, c])
        values *= 0.5 * (finv2[c] / 3.0 * sign + 1.0)
    return values


def basis_keys(basis: np.ndarray) -> np.ndarray:
    """Base-3 key of each row of a (T, k) basis array."""
    keys = np.zeros(basis.shape[0], dtype=np.int64)
    for c in range(basis.shape[1]):
        keys = keys * 3 + basis[:, c]
    return keys


def pair_indices_all(
    t_a: int, t_b: int | None, max_pairs: int, gen: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Distinct pairs within one set (t_b None) or cross pairs between two.

    Exhaustive when the pair count fits in ``max_pairs``; otherwise a
    uniform subsample (within one set, j is drawn as a nonzero shift so
    i = j never occurs).
    """
    if t_b is None:
        total = t_a * (t_a - 1) // 2
        if total <= max_pairs:
            ii, jj = np.triu_indices(t_a, k=1)
            return ii, jj, True
        ii = gen.integers(0, t_a, size=max_pairs)
        jj = (ii + 1 + gen.integers(0, t_a - 1, size=max_pairs)) % t_a
        return ii, jj, False
    total = t_a * t_b
    if total <= max_pairs:
        ii = np.repeat(np.arange(t_a), t_b)
        jj = np.tile(np.arange(t_b), t_a)
        return ii, jj, True
    return (
        gen.integers(0, t_a, size=max_pairs),
        gen.integers(0, t_b, size=max_pairs),
        False,
    )


def pair_indices_matching(
    keys_a: np.ndarray, keys_b: np.ndarray | None,
    max_pairs: int, gen: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Uniform pairs among those whose basis keys agree.

    ``keys_b`` None means distinct pairs within one set.  Exhaustive when
    the admissible count fits in ``max_pairs``; otherwise each draw picks a
    key group with probability proportional to its pair count and then a
    uniform pair inside it, which is a uniform sample over admissible pairs.
    """
    same_set = keys_b is None
    order_a = np.argsort(keys_a, kind="stable")
    sorted_a = keys_a[order_a]
    if same_set:
        order_b, sorted_b = order_a, sorted_a
    else:
        order_b = np.argsort(keys_b, kind="stable")
        sorted_b = keys_b[order_b]
    uniq = np.intersect1d(sorted_a, sorted_b)
    la = np.searchsorted(sorted_a, uniq, "left")
    ra = np.searchsorted(sorted_a, uniq, "right")
    lb = la if same_set else np.searchsorted(sorted_b, uniq, "left")
    rb = ra if same_set else np.searchsorted(sorted_b, uniq, "right")
    groups = []
    counts = []
    for g in range(len(uniq)):
        mem_a = order_a[la[g]:ra[g]]
        mem_b = mem_a if same_set else order_b[lb[g]:rb[g]]
        count = len(mem_a) * (len(mem_a) - 1) // 2 if same_set else len(mem_a) * len(mem_b)
        if count:
            groups.append((mem_a, mem_b))
            counts.append(count)
    total = sum(counts)
    if total == 0:
        raise EstimationError("no shot pairs with matching bases on the subset")
    if total <= max_pairs:
        parts_i, parts_j = [], []
        for mem_a, mem_b in groups:
            if same_set:
                ii, jj = np.triu_indices(len(mem_a), k=1)
                parts_i.append(mem_a[ii])
                parts_j.append(mem_a[jj])
            else:
                parts_i.append(np.repeat(mem_a, len(mem_b)))
                parts_j.append(np.tile(mem_b, len(mem_a)))
        return np.concatenate(parts_i), np.concatenate(parts_j), True
    weights = np.asarray(counts, dtype=np.float64)
    per_group = gen.multinomial(max_pairs, weights / weights.sum())
    parts_i, parts_j = [], []
    for (mem_a, mem_b), m in zip(groups, per_group):
        if m == 0:
            continue
        if same_set:
            n = len(mem_a)
            i = gen.integers(0, n, size=m)
            j = (i + 1 + gen.integers(0, n - 1, size=m)) % n
            parts_i.append(mem_a[i])
            parts_j.append(mem_a[j])
        else:
            parts_i.append(mem_a[gen.integers(0, len(mem_a), size=m)])
            parts_j.append(mem_b[gen.integers(0, len(mem_b), size=m)])
    return np.concatenate(parts_i), np.concatenate(parts_j), False
