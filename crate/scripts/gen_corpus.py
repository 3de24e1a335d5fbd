#!/usr/bin/env python3
"""Regenerate the frozen test corpus in crates/core/tests/data/corpus.

Formulas have 4..10 variables and between 1 and 32 models. Larger n gets
fewer models so that the stock copies stay small.
"""
import itertools
import os
import random
import sys

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "data", "corpus")


def count(n, clauses):
    c = 0
    for bits in itertools.product([False, True], repeat=n):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in cl) for cl in clauses):
            c += 1
    return c


def max_count(n):
    return 32 if n <= 8 else 12


def random_3cnf(rng, n):
    target = rng.randint(1, max_count(n))
    while True:
        clauses = []
        while True:
            vs = rng.sample(range(1, n + 1), 3)
            clauses.append([v if rng.random() < 0.5 else -v for v in vs])
            c = count(n, clauses)
            if c == 0:
                break
            if c <= target and len(clauses) >= n:
                return clauses, c
        # unsat: restart


def exactly_one(vs):
    cls = [list(vs)]
    cls += [[-a, -b] for a, b in itertools.combinations(vs, 2)]
    return cls


def xor_chain(vs, parity):
    # x1 ^ ... ^ xk = parity, via direct CNF (k small)
    cls = []
    for signs in itertools.product([1, -1], repeat=len(vs)):
        negs = sum(1 for s in signs if s < 0)
        # clause forbids the assignment with xi = (s < 0)
        if negs % 2 != parity:
            cls.append([s * v for s, v in zip(signs, vs)])
    return cls


def structured(n, kind):
    if kind == "one_hot":
        return exactly_one(range(1, n + 1))
    if kind == "units_free":
        free = 5 if n <= 8 else 3
        return [[v] if v % 2 else [-v] for v in range(1, n - free + 1)]
    if kind == "implication_chain":
        return [[-v, v + 1] for v in range(1, n)]
    if kind == "parity":
        k = 4 if n <= 8 else 3
        cls = xor_chain(list(range(1, k + 1)), 1)
        cls += [[-v] for v in range(k + 1, n)]
        return cls
    if kind == "two_blocks_one_hot":
        h = n // 2
        return exactly_one(range(1, h + 1)) + exactly_one(range(h + 1, n + 1))
    if kind == "at_most_one_pairs":
        cls = [[-a, -b] for a, b in itertools.combinations(range(1, n + 1), 2)]
        return cls
    raise ValueError(kind)


def write(name, n, clauses, c, comment):
    path = os.path.join(OUT, name + ".cnf")
    with open(path, "w") as fh:
        fh.write(f"c {comment}\nc models {c}\n")
        fh.write(f"p cnf {n} {len(clauses)}\n")
        for cl in clauses:
            fh.write(" ".join(map(str, cl)) + " 0\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = random.Random(20240601)
    made = 0
    for i in range(28):
        n = 4 + i % 7
        clauses, c = random_3cnf(rng, n)
        write(f"r{i:02}_n{n}", n, clauses, c, "random 3-cnf")
        made += 1
    plan = [
        ("one_hot", 4), ("one_hot", 7), ("one_hot", 10),
        ("units_free", 6), ("units_free", 9),
        ("implication_chain", 5), ("implication_chain", 10),
        ("parity", 6), ("parity", 9),
        ("two_blocks_one_hot", 8), ("two_blocks_one_hot", 6),
        ("at_most_one_pairs", 8),
    ]
    for kind, n in plan:
        clauses = structured(n, kind)
        c = count(n, clauses)
        assert 1 <= c <= max_count(n), (kind, n, c)
        write(f"s_{kind}_n{n}", n, clauses, c, kind.replace("_", " "))
        made += 1
    print(made, "formulas", file=sys.stderr)


if __name__ == "__main__":
    main()
