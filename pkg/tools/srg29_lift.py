"""Lift character matrices printed by srg29_z3 to an srg(29,14,6,7).

usage: ./srg29_z3 | python3 srg29_lift.py > srg29_nonpaley.g6

Vertices 0..4 are the fixed points, inducing a 5-cycle; vertex 5 + 3*i + a
is element a of orbit i.  Each fixed point is joined to four whole orbits,
and any two fixed points share exactly two of them (both counts follow from
the parameters).  The first lift satisfying A^2 = 7I - A + 7J is printed in
graph6.  Graphs with an automorphism of order 3 cannot be Paley(29), whose
automorphism group has order 406.
"""

import itertools
import sys

import numpy as np

from wlcirc.formats import to_graph6
from wlcirc.graphs import Graph

R, F = 8, 5
C5 = [(u, (u + 1) % 5) for u in range(5)]


def families():
    quads = [frozenset(q) for q in itertools.combinations(range(R), 4)]
    out = []

    def ext(cur):
        if len(cur) == F:
            out.append(tuple(cur))
            return
        for q in quads:
            if all(len(q & p) == 2 for p in cur):
                ext(cur + [q])

    ext([])
    by_counts = {}
    for fam in out:
        cnt = tuple(sum(i in q for q in fam) for i in range(R))
        by_counts.setdefault(cnt, []).append(fam)
    return by_counts


def subset(c):
    k = c % 3
    return {k} if c < 3 else {0, 1, 2} - {k}


def build(S, fam):
    n = F + 3 * R
    A = np.zeros((n, n), dtype=np.int64)
    for u, v in C5:
        A[u, v] = A[v, u] = 1
    for u, q in enumerate(fam):
        for i in q:
            A[u, F + 3 * i : F + 3 * i + 3] = 1
            A[F + 3 * i : F + 3 * i + 3, u] = 1
    for i in range(R):
        for j in range(R):
            for a in range(3):
                for s in S[i][j]:
                    A[F + 3 * i + a, F + 3 * j + (a + s) % 3] = 1
    return A


def main():
    by_counts = families()
    for line in sys.stdin:
        v = list(map(int, line.split()))
        S = [
            [({1, 2} if v[i * R + j] else set()) if i == j else subset(v[i * R + j]) for j in range(R)]
            for i in range(R)
        ]
        need = tuple(14 - sum(len(S[i][j]) for j in range(R)) for i in range(R))
        for fam in by_counts.get(need, []):
            A = build(S, fam)
            if (A == A.T).all() and (A @ A == 7 * np.eye(29, dtype=np.int64) - A + 7).all():
                print(to_graph6(Graph.from_adjacency(A)))
                return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
