"""m-dimensional Weisfeiler-Leman refinement on tuples of vertices.

A coloring of ``Omega^m`` is stored as a flat integer array indexed row-major
(``x1*n**(m-1) + ... + xm``).  One refinement round replaces the color of a
tuple ``x`` by the pair

    (c(x), multiset over a of (c(x[1<-a]), ..., c(x[m<-a])))

and the procedure stops when the number of classes no longer grows.  For
``m = 1`` the round is ordinary degree refinement over out- and
in-neighbourhoods.

Several structures on the same number of points can be refined in lockstep:
signatures of all of them go through one dictionary per round, so color names
are comparable across structures.  This is what equivalence testing, point
extensions and the extension of algebraic isomorphisms rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .graphs import Graph

DEFAULT_TUPLE_CAP = 2**25
# bound on int64 entries materialized per chunk of signature rows
_CHUNK_ENTRIES = 1 << 22


class ResourceLimitError(RuntimeError):
    """The tuple space ``n**m`` exceeds the configured cap."""


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber so that colors are ordered by their least (first) position."""
    flat = np.asarray(labels).ravel()
    if flat.size == 0:
        return flat.astype(np.int64)
    _, first, inv = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inv.ravel()].reshape(np.shape(labels))


def _index_tuple(flat_index: int, n: int, m: int) -> tuple[int, ...]:
    out = []
    for _ in range(m):
        flat_index, r = divmod(flat_index, n)
        out.append(r)
    return tuple(reversed(out))


def _flat_index(x: Sequence[int], n: int) -> int:
    idx = 0
    for v in x:
        if not 0 <= v < n:
            raise ValueError(f"tuple component {v} outside [0, {n})")
        idx = idx * n + int(v)
    return idx


@dataclass(frozen=True, eq=False)
class TuplePartition:
    """A partition of ``Omega^m`` given by canonical class labels."""

    m: int
    n: int
    labels: np.ndarray

    def __post_init__(self):
        labels = canonical_labels(np.asarray(self.labels, dtype=np.int64).ravel())
        if labels.size != self.n**self.m:
            raise ValueError(f"expected {self.n**self.m} labels, got {labels.size}")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @cached_property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def label_of(self, x: Sequence[int]) -> int:
        return int(self.labels[_flat_index(x, self.n)])

    def classes(self) -> list[list[tuple[int, ...]]]:
        out: list[list[tuple[int, ...]]] = [[] for _ in range(self.num_classes)]
        for i, lab in enumerate(self.labels.tolist()):
            out[lab].append(_index_tuple(i, self.n, self.m))
        return out

    def grid(self) -> np.ndarray:
        return self.labels.reshape((self.n,) * self.m)

    def refines(self, other: TuplePartition) -> bool:
        """True iff every class of ``self`` lies inside a class of ``other``."""
        if (self.m, self.n) != (other.m, other.n):
            raise ValueError("partitions live on different tuple spaces")
        pairs = self.labels * other.num_classes + other.labels
        return np.unique(pairs).size == self.num_classes

    def __eq__(self, other) -> bool:
        if not isinstance(other, TuplePartition):
            return NotImplemented
        return (self.m, self.n) == (other.m, other.n) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.m, self.n, self.labels.tobytes()))

    def __repr__(self) -> str:
        return f"TuplePartition(m={self.m}, n={self.n}, classes={self.num_classes})"


@dataclass(frozen=True, eq=False)
class TupleColoring:
    """A coloring of ``Omega^m`` produced by the refinement.

    ``round`` is the index ``i`` of the coloring ``c_i``; ``stable`` is set
    once a further round is known not to split any class.
    """

    m: int
    n: int
    colors: np.ndarray
    round: int = 0
    stable: bool = False

    def __post_init__(self):
        colors = canonical_labels(np.asarray(self.colors, dtype=np.int64).ravel())
        if colors.size != self.n**self.m:
            raise ValueError(f"expected {self.n**self.m} colors, got {colors.size}")
        colors.flags.writeable = False
        object.__setattr__(self, "colors", colors)

    @cached_property
    def num_classes(self) -> int:
        return int(self.colors.max()) + 1 if self.colors.size else 0

    def color_of(self, x: Sequence[int]) -> int:
        return int(self.colors[_flat_index(x, self.n)])

    def grid(self) -> np.ndarray:
        return self.colors.reshape((self.n,) * self.m)

    def class_sizes(self) -> list[int]:
        return np.bincount(self.colors, minlength=self.num_classes).tolist()

    def size_histogram(self) -> dict[int, int]:
        """How many classes have each size."""
        sizes, counts = np.unique(np.asarray(self.class_sizes()), return_counts=True)
        return {int(s): int(c) for s, c in zip(sizes, counts)}

    def partition(self) -> TuplePartition:
        return TuplePartition(self.m, self.n, self.colors)

    def header(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "rounds": self.round,
            "classes": self.num_classes,
            "class_size_histogram": {str(k): v for k, v in self.size_histogram().items()},
        }

    def to_csv(self) -> str:
        lines = ["tuple,color"]
        for i, c in enumerate(self.colors.tolist()):
            lines.append(" ".join(map(str, _index_tuple(i, self.n, self.m))) + f",{c}")
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        return (
            f"TupleColoring(m={self.m}, n={self.n}, classes={self.num_classes}, "
            f"round={self.round}, stable={self.stable})"
        )


# ---------------------------------------------------------------- kernels


def _check_cap(n: int, m: int, cap: int | None) -> None:
    cap = DEFAULT_TUPLE_CAP if cap is None else cap
    if m < 1:
        raise ValueError(f"arity must be at least 1, got {m}")
    if n**m > cap:
        raise ResourceLimitError(f"n**m = {n}**{m} = {n**m} exceeds the tuple cap {cap}")


def _initial_keys(adj: np.ndarray, m: int) -> np.ndarray:
    """Bit-packed (equality pattern, arc pattern) signature of every tuple."""
    n = adj.shape[0]
    idx = np.indices((n,) * m).reshape(m, -1)
    key = np.zeros(idx.shape[1], dtype=np.int64)
    bit = 0
    for i in range(m):
        for j in range(m):
            key |= adj[idx[i], idx[j]].astype(np.int64) << bit
            bit += 1
            if i < j:
                key |= (idx[i] == idx[j]).astype(np.int64) << bit
                bit += 1
    return key


def _dense(values: np.ndarray) -> np.ndarray:
    _, inv = np.unique(values, return_inverse=True)
    return inv.reshape(values.shape).astype(np.int64)


def _substitution_codes(grid: np.ndarray, k: int, lo: int, hi: int) -> np.ndarray:
    """Sorted codes of ``(c(x[1<-a]), ..., c(x[m<-a]))`` over ``a`` for tuples
    whose first coordinate lies in ``[lo, hi)``; shape ``(rows, n)``."""
    m = grid.ndim
    n = grid.shape[0]
    shape = (hi - lo,) + (n,) * m
    code = None
    for i in range(m):
        moved = np.expand_dims(np.moveaxis(grid, i, -1), i)
        part = moved[lo:hi] if i != 0 else moved
        part = np.broadcast_to(part, shape)
        if code is None:
            code = part.astype(np.int64)
        else:
            if int(code.max(initial=0)) >= (2**62) // max(k, 1):
                code = _dense(code)
            code = code * k + part
    code = code.reshape(-1, n)
    code.sort(axis=1)
    return code


def _row_hash(rows: np.ndarray) -> np.ndarray:
    h = np.zeros(rows.shape[0], dtype=np.uint64)
    with np.errstate(over="ignore"):
        for j in range(rows.shape[1]):
            h = _mix(h ^ rows[:, j].astype(np.uint64))
    return h


def _unique_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct rows (in hash order) and the inverse index.

    Rows are grouped by a 64-bit hash and every row is then compared with
    the first row of its group, so the result is exact; a collision falls
    back to a lexicographic sort.
    """
    _, first, inv = np.unique(_row_hash(rows), return_index=True, return_inverse=True)
    inv = inv.ravel()
    uniq = rows[first]
    if not np.array_equal(rows, uniq[inv]):
        uniq, inv = np.unique(rows, axis=0, return_inverse=True)
        inv = inv.ravel()
    return uniq, inv


def _tuple_step(grids: list[np.ndarray]) -> list[np.ndarray]:
    """One joint refinement round for colorings of ``Omega^m``, ``m >= 2``."""
    k = max(int(g.max(initial=0)) for g in grids) + 1
    n = grids[0].shape[0]
    m = grids[0].ndim
    per_row = n ** (m - 1) * (n + 1)
    step = max(1, _CHUNK_ENTRIES // per_row)
    table: dict[bytes, int] = {}
    out = []
    for grid in grids:
        new = np.empty(grid.size, dtype=np.int64)
        pos = 0
        for lo in range(0, n, step):
            hi = min(n, lo + step)
            codes = _substitution_codes(grid, k, lo, hi)
            rows = np.concatenate([grid[lo:hi].reshape(-1, 1), codes], axis=1)
            uniq, inv = _unique_rows(rows)
            ids = np.array([table.setdefault(r.tobytes(), len(table)) for r in uniq], dtype=np.int64)
            new[pos : pos + rows.shape[0]] = ids[inv.ravel()]
            pos += rows.shape[0]
        out.append(new.reshape(grid.shape))
    return out


def _vertex_step(grids: list[np.ndarray], adjs: list[np.ndarray]) -> list[np.ndarray]:
    """Joint degree refinement for vertex colorings."""
    k = max(int(g.max(initial=0)) for g in grids) + 1
    table: dict[bytes, int] = {}
    out = []
    for c, a in zip(grids, adjs):
        onehot = np.zeros((c.size, k), dtype=np.int64)
        onehot[np.arange(c.size), c] = 1
        a = a.astype(np.int64)
        rows = np.concatenate([c.reshape(-1, 1), a @ onehot, a.T @ onehot], axis=1)
        uniq, inv = np.unique(rows, axis=0, return_inverse=True)
        ids = np.array([table.setdefault(r.tobytes(), len(table)) for r in uniq], dtype=np.int64)
        out.append(ids[inv.ravel()])
    return out


def _joint_initial(keys: list[np.ndarray]) -> list[np.ndarray]:
    allk = np.concatenate([k.ravel() for k in keys])
    dense = _dense(allk)
    out, pos = [], 0
    for k in keys:
        out.append(dense[pos : pos + k.size].reshape(k.shape))
        pos += k.size
    return out


@dataclass
class LockstepResult:
    grids: list[np.ndarray]
    rounds: int
    # (round, histograms) at the first round whose histograms disagree
    mismatch: tuple[int, list[dict[int, int]]] | None = None

    @property
    def agree(self) -> bool:
        return self.mismatch is None


def _histograms(grids: list[np.ndarray]) -> list[np.ndarray]:
    k = max(int(g.max(initial=0)) for g in grids) + 1
    return [np.bincount(g.ravel(), minlength=k) for g in grids]


def refine_lockstep(
    grids: list[np.ndarray],
    adjs: list[np.ndarray] | None = None,
    compare: bool = True,
    max_rounds: int | None = None,
) -> LockstepResult:
    """Refine jointly numbered colorings until the joint partition is stable.

    ``grids`` hold colorings of ``Omega^m`` (``m = grid.ndim``) with shared
    color names.  With ``compare`` set, refinement stops at the first round
    whose color histograms differ between structures.
    """
    grids = [np.asarray(g, dtype=np.int64) for g in grids]
    m = grids[0].ndim
    if m == 1 and adjs is None:
        raise ValueError("vertex refinement needs adjacency matrices")
    rounds = 0
    count = len(np.unique(np.concatenate([g.ravel() for g in grids])))
    while True:
        if compare and len(grids) > 1:
            hists = _histograms(grids)
            if any(not np.array_equal(hists[0], h) for h in hists[1:]):
                differ = np.zeros(hists[0].shape, dtype=bool)
                for h in hists[1:]:
                    differ |= hists[0] != h
                cols = np.nonzero(differ)[0].tolist()
                diff = [{c: int(h[c]) for c in cols} for h in hists]
                return LockstepResult(grids, rounds, (rounds, diff))
        if max_rounds is not None and rounds >= max_rounds:
            return LockstepResult(grids, rounds)
        new = _vertex_step(grids, adjs) if m == 1 else _tuple_step(grids)
        new_count = len(np.unique(np.concatenate([g.ravel() for g in new])))
        if new_count == count:
            return LockstepResult(grids, rounds)
        grids, count = new, new_count
        rounds += 1


# ---------------------------------------------------------------- public operations


def initial_coloring(g: Graph, m: int, cap: int | None = None) -> TupleColoring:
    """Tuples share a color iff they have the same arc and equality patterns."""
    _check_cap(g.n, m, cap)
    return TupleColoring(m, g.n, _initial_keys(g.adjacency, m))


def refine_round(g: Graph, c: TupleColoring) -> TupleColoring:
    if c.n != g.n:
        raise ValueError("coloring and graph have different vertex counts")
    grid = c.grid()
    if c.m == 1:
        (new,) = _vertex_step([grid], [g.adjacency])
    else:
        (new,) = _tuple_step([grid])
    out = TupleColoring(c.m, c.n, new, c.round + 1)
    if out.num_classes == c.num_classes:
        return TupleColoring(c.m, c.n, c.colors, c.round, stable=True)
    return out


def stable_coloring(g: Graph, m: int, cap: int | None = None) -> TupleColoring:
    c = initial_coloring(g, m, cap)
    res = refine_lockstep([c.grid()], [g.adjacency] if m == 1 else None, compare=False)
    return TupleColoring(m, g.n, res.grids[0], res.rounds, stable=True)


@dataclass(frozen=True)
class WLComparison:
    equivalent: bool
    m: int
    rounds: int
    # color -> (count in first, count in second) at the distinguishing round
    histogram_diff: dict[int, tuple[int, int]] | None = None
    reason: str = ""

    def distinguisher(self) -> dict | None:
        if self.equivalent:
            return None
        diff = self.histogram_diff or {}
        return {
            "m": self.m,
            "round": self.rounds,
            "reason": self.reason,
            "histogram_diff": {str(k): list(v) for k, v in sorted(diff.items())},
        }


def wl_compare(g: Graph, h: Graph, m: int, cap: int | None = None) -> WLComparison:
    """Lockstep refinement of both graphs with shared signature names."""
    if g.n != h.n:
        return WLComparison(False, m, 0, None, reason=f"vertex counts differ ({g.n} vs {h.n})")
    _check_cap(g.n, m, cap)
    keys = [_initial_keys(x.adjacency, m).reshape((x.n,) * m) for x in (g, h)]
    grids = _joint_initial(keys)
    res = refine_lockstep(grids, [g.adjacency, h.adjacency] if m == 1 else None)
    if res.agree:
        return WLComparison(True, m, res.rounds)
    rnd, (hg, hh) = res.mismatch
    diff = {c: (hg.get(c, 0), hh.get(c, 0)) for c in sorted(set(hg) | set(hh))}
    return WLComparison(False, m, rnd, diff, reason="color histograms differ")


def wl_equivalent(g: Graph, h: Graph, m: int, cap: int | None = None) -> bool:
    return wl_compare(g, h, m, cap).equivalent


def skeleton(c: TupleColoring, k: int) -> TuplePartition:
    """The partition of ``Omega^k`` into projections of the classes of ``c``.

    The projection of the class of ``x`` onto its first ``k`` coordinates is
    read off the padded tuple ``(x1..xk, xk, ..., xk)``; the routine checks
    that the projected classes really are equal or disjoint.
    """
    if not c.stable:
        raise ValueError("skeleton needs a stable coloring")
    if not 1 <= k <= c.m:
        raise ValueError(f"projection arity {k} outside [1, {c.m}]")
    n, m = c.n, c.m
    if k == m:
        return c.partition()
    grid = c.grid()
    prefix = np.indices((n,) * k).reshape(k, -1)
    pad = tuple(prefix[i] for i in range(k)) + (prefix[k - 1],) * (m - k)
    padded = grid[pad]  # skeleton color of each k-tuple
    # image class of each m-tuple's prefix must be a function of its color
    flat_prefix = np.ravel_multi_index(np.indices((n,) * m)[:k].reshape(k, -1), (n,) * k)
    image = padded[flat_prefix]
    pairs = np.unique(c.colors * (padded.max() + 1) + image)
    if pairs.size != c.num_classes:
        raise AssertionError("projections of classes overlap: input is not coherent")
    # every class projects onto the whole of its image class
    prefixes_per_class = np.bincount(np.unique(c.colors * n**k + flat_prefix) // n**k)
    image_of = np.empty(c.num_classes, dtype=np.int64)
    image_of[c.colors] = image
    image_sizes = np.bincount(padded)
    if not np.array_equal(prefixes_per_class, image_sizes[image_of]):
        raise AssertionError("a class projects onto part of a projected class")
    return TuplePartition(k, n, padded)


def residue(c: TupleColoring, y: Sequence[int]) -> TuplePartition:
    """Classes ``X_y = {x : (x, y) in X}`` over the classes meeting the fiber of ``y``."""
    if not c.stable:
        raise ValueError("residue needs a stable coloring")
    y = tuple(int(v) for v in y)
    k = c.m - len(y)
    if k < 1:
        raise ValueError(f"residue tuple of length {len(y)} leaves no free coordinates")
    for v in y:
        if not 0 <= v < c.n:
            raise ValueError(f"residue point {v} outside [0, {c.n})")
    grid = c.grid()
    return TuplePartition(k, c.n, grid[(Ellipsis,) + y])


# ---------------------------------------------------------------- batch equivalence

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _mix(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def wl_fingerprint(g: Graph, m: int, cap: int | None = None) -> tuple[int, int, bytes]:
    """A hash of the stable coloring that depends only on the colors themselves.

    WL-equivalent graphs get equal fingerprints; distinct fingerprints prove
    inequivalence.  Equal fingerprints are only a hint and must be confirmed
    with :func:`wl_equivalent`.
    """
    _check_cap(g.n, m, cap)
    n = g.n
    with np.errstate(over="ignore"):
        h = _mix(_initial_keys(g.adjacency, m).astype(np.uint64) + _GOLD).reshape((n,) * m)
        count = np.unique(h).size
        rounds = 0
        adj = g.adjacency.astype(np.uint64)
        while True:
            if m == 1:
                out_sum = adj @ _mix(h + np.uint64(1))
                in_sum = adj.T @ _mix(h + np.uint64(2))
                new = _mix(h * _GOLD + _mix(out_sum) + _mix(in_sum * _M1))
            else:
                code = None
                for i in range(m):
                    part = np.expand_dims(np.moveaxis(h, i, -1), i)
                    code = _mix(part + _GOLD) if code is None else _mix(code * _M1 + part)
                total = _mix(code + _M2).sum(axis=-1, dtype=np.uint64)
                new = _mix(h * _GOLD + total)
            new_count = np.unique(new).size
            if new_count == count:
                break
            h, count = new, new_count
            rounds += 1
    digest = np.sort(h.ravel()).tobytes()
    return rounds, count, digest


def wl_equivalence_classes(graphs: Sequence[Graph], m: int, cap: int | None = None) -> list[int]:
    """Class index of each graph under WL_m-equivalence, numbered by first appearance.

    Graphs are bucketed by :func:`wl_fingerprint`; inside a bucket each graph
    is compared with the representative of every class found so far using
    the exact lockstep test.
    """
    buckets: dict[tuple, list[int]] = {}
    for i, g in enumerate(graphs):
        buckets.setdefault((g.n,) + wl_fingerprint(g, m, cap), []).append(i)
    label = [-1] * len(graphs)
    reps: dict[tuple, list[int]] = {}
    for key, members in buckets.items():
        for i in members:
            for r in reps.get(key, []):
                if wl_equivalent(graphs[r], graphs[i], m, cap):
                    label[i] = label[r]
                    break
            else:
                reps.setdefault(key, []).append(i)
                label[i] = i
    remap: dict[int, int] = {}
    return [remap.setdefault(lab, len(remap)) for lab in label]
