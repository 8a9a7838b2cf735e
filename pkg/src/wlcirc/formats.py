"""Reading and writing graphs: ``circ:`` strings, edge lists, graph6 and digraph6.

Parsers return a :class:`ParseReport` next to the graph.  It records any
relabeling of external vertex names to the dense range ``[0, n)`` and the
warnings raised on the way (duplicate arcs, for instance).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .graphs import ConnectionSet, Graph, build_circulant, build_paley


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class ParseReport:
    source: str
    format: str
    relabeling: dict[str, int] | None = None
    warnings: list[str] = field(default_factory=list)
    connection_set: ConnectionSet | None = None

    def warn(self, msg: str) -> None:
        self.warnings.append(msg)
        warnings.warn(msg, stacklevel=3)


# ---------------------------------------------------------------- circ: strings


def parse_connection_set(text: str) -> ConnectionSet:
    """Parse ``circ:<n>:<s1>,<s2>,...``; an empty element list is allowed."""
    parts = text.strip().split(":")
    if len(parts) != 3 or parts[0] != "circ":
        raise ParseError(f"expected 'circ:<n>:<s1>,<s2>,...', got {text!r}")
    try:
        n = int(parts[1])
        elems = [int(tok) for tok in parts[2].split(",") if tok.strip()]
    except ValueError as exc:
        raise ParseError(f"non-decimal token in {text!r}") from exc
    if n < 2:
        raise ParseError(f"modulus must be at least 2 in {text!r}")
    reduced = {s % n for s in elems}
    if 0 in reduced:
        raise ParseError(f"connection set contains 0 (mod {n}) in {text!r}")
    return ConnectionSet(n, frozenset(reduced))


# ---------------------------------------------------------------- edge lists


def parse_edge_list(text: str, source: str = "<string>") -> tuple[Graph, ParseReport]:
    """One ``u v`` arc per line, ``#`` comments, optional ``n <count>`` header.

    Integer labels within ``[0, n)`` are kept when a header fixes ``n``;
    otherwise vertices are relabeled densely in sorted order (numeric when
    all labels are integers) and the mapping is reported.
    """
    report = ParseReport(source=source, format="edgelist")
    declared_n = None
    pairs: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "n":
            if len(toks) != 2 or declared_n is not None or pairs:
                raise ParseError("malformed or misplaced 'n <count>' header", lineno)
            try:
                declared_n = int(toks[1])
            except ValueError:
                raise ParseError(f"vertex count {toks[1]!r} is not an integer", lineno) from None
            if declared_n < 1:
                raise ParseError("vertex count must be positive", lineno)
            continue
        if len(toks) != 2:
            raise ParseError(f"expected 'u v', got {line!r}", lineno)
        pairs.append((toks[0], toks[1], lineno))

    labels = {t for u, v, _ in pairs for t in (u, v)}
    all_int = all(_is_int(t) for t in labels)
    if declared_n is not None and all_int and all(0 <= int(t) < declared_n for t in labels):
        n = declared_n
        index = {t: int(t) for t in labels}
    else:
        if declared_n is not None and all_int:
            bad = next(t for t in sorted(labels, key=int) if not 0 <= int(t) < declared_n)
            line = next(ln for u, v, ln in pairs if bad in (u, v))
            raise ParseError(f"vertex {bad} outside [0, {declared_n})", line)
        order = sorted(labels, key=int) if all_int else sorted(labels)
        index = {t: i for i, t in enumerate(order)}
        if declared_n is not None:
            if len(order) > declared_n:
                raise ParseError(f"{len(order)} distinct vertices exceed header n {declared_n}")
            n = declared_n
        else:
            n = len(order)
        if n == 0:
            raise ParseError("empty edge list without an 'n' header")
        if any(str(i) != t for t, i in index.items()):
            report.relabeling = dict(index)
    arcs = set()
    for u, v, lineno in pairs:
        arc = (index[u], index[v])
        if arc in arcs:
            report.warn(f"{source}:{lineno}: duplicate arc {u} {v} collapsed")
        arcs.add(arc)
    return Graph(n, frozenset(arcs)), report


def _is_int(tok: str) -> bool:
    try:
        int(tok)
    except ValueError:
        return False
    return True


def to_edge_list(g: Graph) -> str:
    lines = [f"n {g.n}"] + [f"{u} {v}" for u, v in g.sorted_arcs()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- graph6 / digraph6


def _encode_n(n: int) -> str:
    if n <= 62:
        return chr(n + 63)
    if n <= 258047:
        return "~" + "".join(chr(((n >> s) & 63) + 63) for s in (12, 6, 0))
    return "~~" + "".join(chr(((n >> s) & 63) + 63) for s in (30, 24, 18, 12, 6, 0))


def _decode_n(data: bytes) -> tuple[int, int]:
    if not data:
        raise ParseError("empty graph6 record")
    if data[0] != 126:
        return data[0] - 63, 1
    if len(data) > 1 and data[1] == 126:
        body, start = data[2:8], 8
    else:
        body, start = data[1:4], 4
    n = 0
    for b in body:
        n = (n << 6) | (b - 63)
    return n, start


def _bits_to_chars(bits: list[int]) -> str:
    bits = bits + [0] * (-len(bits) % 6)
    out = []
    for i in range(0, len(bits), 6):
        v = 0
        for b in bits[i : i + 6]:
            v = (v << 1) | b
        out.append(chr(v + 63))
    return "".join(out)


def _chars_to_bits(data: bytes, count: int) -> list[int]:
    bits = []
    for b in data:
        if not 63 <= b <= 126:
            raise ParseError(f"byte {b} outside the printable range of graph6")
        v = b - 63
        bits.extend((v >> s) & 1 for s in range(5, -1, -1))
    if len(bits) < count:
        raise ParseError(f"record too short: {len(bits)} bits for {count} required")
    return bits[:count]


def to_graph6(g: Graph) -> str:
    if not g.is_undirected or any(u == v for u, v in g.arcs):
        raise ValueError("graph6 encodes loopless undirected graphs; use digraph6")
    a = g.adjacency
    bits = [int(a[i, j]) for j in range(1, g.n) for i in range(j)]
    return _encode_n(g.n) + _bits_to_chars(bits)


def from_graph6(line: str) -> Graph:
    line = line.strip()
    if line.startswith(">>graph6<<"):
        line = line[len(">>graph6<<") :]
    data = line.encode("ascii")
    n, start = _decode_n(data)
    bits = _chars_to_bits(data[start:], n * (n - 1) // 2)
    edges = []
    k = 0
    for j in range(1, n):
        for i in range(j):
            if bits[k]:
                edges.append((i, j))
            k += 1
    return Graph.from_edges(n, edges)


def to_digraph6(g: Graph) -> str:
    a = g.adjacency
    bits = [int(a[i, j]) for i in range(g.n) for j in range(g.n)]
    return "&" + _encode_n(g.n) + _bits_to_chars(bits)


def from_digraph6(line: str) -> Graph:
    line = line.strip()
    if line.startswith(">>digraph6<<"):
        line = line[len(">>digraph6<<") :]
    if not line.startswith("&"):
        raise ParseError("digraph6 records start with '&'")
    data = line[1:].encode("ascii")
    n, start = _decode_n(data)
    bits = _chars_to_bits(data[start:], n * n)
    arcs = [(k // n, k % n) for k, b in enumerate(bits) if b]
    return Graph(n, frozenset(arcs))


# ---------------------------------------------------------------- dispatch


def _looks_like_graph6(text: str) -> bool:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 1:
        return False
    body = lines[0].strip()
    if body.startswith((">>graph6<<", ">>digraph6<<", "&")):
        return True
    return " " not in body and all(63 <= ord(ch) <= 126 for ch in body)


def parse_graph_text(text: str, source: str = "<string>") -> tuple[Graph, ParseReport]:
    body = text.strip()
    if _looks_like_graph6(body):
        if body.startswith(("&", ">>digraph6<<")):
            return from_digraph6(body), ParseReport(source=source, format="digraph6")
        try:
            return from_graph6(body), ParseReport(source=source, format="graph6")
        except ParseError:
            pass
    return parse_edge_list(text, source)


def load_graph(spec: str) -> tuple[Graph, ParseReport]:
    """Resolve a CLI input: ``circ:...``, ``paley:<q>``, or a file path."""
    if spec.startswith("circ:"):
        c = parse_connection_set(spec)
        return build_circulant(c), ParseReport(source=spec, format="circ", connection_set=c)
    if spec.startswith("paley:"):
        try:
            q = int(spec.split(":", 1)[1])
            g = build_paley(q)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
        return g, ParseReport(source=spec, format="paley")
    path = Path(spec)
    if not path.exists():
        raise ParseError(f"no such input file: {spec}")
    return parse_graph_text(path.read_text(encoding="ascii"), source=spec)
