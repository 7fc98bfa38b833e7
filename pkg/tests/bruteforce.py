"""Independent brute-force oracles used by the tests.

Everything here enumerates all d^n walks explicitly; nothing is shared with
the tree sweeps under test.
"""

import numpy as np
from scipy.special import logsumexp


def walk_of_leaf(leaf, d, n):
    w = []
    j = leaf
    for _ in range(n):
        w.append(j)
        j //= d
    return list(reversed(w))


def path_energies(energies_by_gen, d, n):
    """Total energy of every walk, ordered by leaf index."""
    tot = np.zeros(d**n)
    for leaf in range(d**n):
        w = walk_of_leaf(leaf, d, n)
        tot[leaf] = sum(energies_by_gen[i][w[i - 1]] for i in range(1, n + 1))
    return tot


def enumerate_log_partition(energies_by_gen, d, n, beta):
    return float(logsumexp(-beta * path_energies(energies_by_gen, d, n)))


def enumerate_internal_energy(energies_by_gen, d, n, beta):
    tot = path_energies(energies_by_gen, d, n)
    a = -beta * tot
    w = np.exp(a - logsumexp(a))
    return float((w * tot).sum())


def enumerate_ground_state(energies_by_gen, d, n):
    tot = path_energies(energies_by_gen, d, n)
    leaf = int(np.argmin(tot))  # first minimum == lexicographically smallest
    return np.array(walk_of_leaf(leaf, d, n)), float(tot[leaf])


def oracle_energies(oracle):
    """Materialize an oracle's branch energies for enumeration."""
    return {i: oracle.generation_energies(i) for i in range(1, oracle.shape.n + 1)}


def code_energies(code, x, rho):
    """Branch energies induced by a tree code on a fixed source tuple."""
    return {
        t: rho.values[x[t - 1]][code.generation_symbols(t)]
        for t in range(1, code.shape.n + 1)
    }
