"""Independent constructions used as oracles by several test modules."""

import itertools

import numpy as np


def closure_table(generators, atol=1e-9):
    """Generate a finite matrix group by closure and read off its table by matching products."""
    d = generators[0].shape[0]
    elems = [np.eye(d, dtype=complex)]
    frontier = list(elems)
    while frontier:
        new = []
        for a in frontier:
            for g in generators:
                p = a @ g
                if not any(np.allclose(p, e, atol=atol) for e in elems + new):
                    new.append(p)
        elems += new
        frontier = new
    table = np.array([[next(k for k, e in enumerate(elems) if np.allclose(a @ b, e, atol=atol))
                       for b in elems] for a in elems])
    return table, np.array(elems)


def dihedral3_qutrit():
    """D3 acting on C^3 by signed permutation matrices (sign character times permutation)."""
    shift = np.roll(np.eye(3), 1, axis=0).astype(complex)
    flip = -np.eye(3)[[0, 2, 1]].astype(complex)
    return closure_table([shift, flip])


def random_cyclic_spec(rng, d_choices=(2, 3, 4)):
    d = int(rng.choice(d_choices))
    order = int(rng.integers(2, 6))
    charges = [int(c) for c in rng.integers(0, order, size=d)]
    return d, order, charges


def all_tuples(order, n):
    return list(itertools.product(range(order), repeat=n))
