"""Command-line frontend: ``wl``, ``scheme``, ``iso`` and ``batch``.

Every command builds a JSON report; ``--json`` prints it as one line with
sorted keys, otherwise a short human-readable rendering is printed.
Reports carry no timing unless ``--timing`` is given, so identical inputs
give byte-identical output.

Exit codes: 0 success (``iso``: isomorphic), 1 ``iso`` non-isomorphic,
2 undecided or resource cap hit, 3 input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from . import __version__
from ._search import DEFAULT_NODE_CAP, SearchLimitExceeded
from .circulant import (
    CirculantScheme,
    ClassificationError,
    classify,
    is_normal,
    iso_test,
    scheme_from_cayley,
    scheme_radical,
    subgroup,
    wedge_decompositions,
)
from .formats import ParseError, load_graph
from .graphs import Graph, prime_power
from .wl import DEFAULT_TUPLE_CAP, ResourceLimitError, stable_coloring, wl_compare

log = logging.getLogger("wlcirc")

EXIT_OK, EXIT_NONISO, EXIT_UNDECIDED, EXIT_INPUT = 0, 1, 2, 3
DEFAULT_CACHE = ".wlcache"


class InputError(ValueError):
    pass


def graph_digest(g: Graph) -> str:
    body = f"{g.n}\n" + "".join(f"{u} {v}\n" for u, v in g.sorted_arcs())
    return hashlib.sha256(body.encode()).hexdigest()


def _load(spec: str) -> tuple[Graph, dict, object]:
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            g, rep = load_graph(spec)
    except (ParseError, OSError, UnicodeDecodeError, ValueError) as exc:
        raise InputError(f"{spec}: {exc}") from exc
    info = {
        "source": spec,
        "format": rep.format,
        "n": g.n,
        "arcs": len(g.arcs),
        "digest": graph_digest(g),
    }
    msgs = list(rep.warnings) or [str(w.message) for w in caught]
    if msgs:
        info["warnings"] = msgs
    if rep.relabeling:
        info["relabeled"] = True
    return g, info, rep


def _base(command: str, inputs: list[dict], opts: dict) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "options": opts,
        "tool": {"name": "wlcirc", "version": __version__},
    }


def _histogram(sizes) -> dict[str, int]:
    out: dict[int, int] = {}
    for s in sizes:
        out[int(s)] = out.get(int(s), 0) + 1
    return {str(k): v for k, v in sorted(out.items())}


# ---------------------------------------------------------------- commands


def run_wl(inputs: Sequence[str], m: int = 2, cap_tuples: int | None = DEFAULT_TUPLE_CAP, seed: int = 0) -> tuple[dict, int]:
    if m not in (1, 2, 3):
        raise InputError("--m must be 1, 2 or 3")
    if not 1 <= len(inputs) <= 2:
        raise InputError("wl takes one or two inputs")
    loaded = [_load(s) for s in inputs]
    rep = _base("wl", [x[1] for x in loaded], {"m": m, "cap_tuples": cap_tuples, "seed": seed})
    try:
        results = []
        for g, _, _ in loaded:
            c = stable_coloring(g, m, cap_tuples)
            results.append({"classes": c.num_classes, "rounds": c.round, "class_size_histogram": _histogram(c.class_sizes())})
        rep["colorings"] = results
        if len(loaded) == 2:
            cmp = wl_compare(loaded[0][0], loaded[1][0], m, cap_tuples)
            rep["comparison"] = {
                "equivalent": cmp.equivalent,
                "rounds": cmp.rounds,
                "distinguisher": cmp.distinguisher(),
            }
    except ResourceLimitError as exc:
        rep["undecided"] = str(exc)
        return rep, EXIT_UNDECIDED
    return rep, EXIT_OK


def _scheme_of(spec: str) -> tuple[CirculantScheme, dict]:
    g, info, prep = _load(spec)
    c = prep.connection_set
    if c is None:
        if prep.format == "paley":
            from .graphs import paley_connection_set

            c = paley_connection_set(g.n)
        else:
            raise InputError(f"{spec}: scheme needs a circulant input (circ:<n>:<set> or paley:<q>)")
    info["connection_set"] = sorted(c.elements)
    return scheme_from_cayley(c), info


def run_scheme(spec: str, require_prime_power: bool = False, cap_nodes: int = DEFAULT_NODE_CAP, seed: int = 0) -> tuple[dict, int]:
    s, info = _scheme_of(spec)
    pp = prime_power(s.n)
    if require_prime_power and pp is None:
        raise InputError(f"{spec}: modulus {s.n} is not a prime power")
    rep = _base("scheme", [info], {"cap_nodes": cap_nodes, "require_prime_power": require_prime_power, "seed": seed})
    xs = list(s.xgroups)
    rad = scheme_radical(s)
    rep["scheme"] = {
        "n": s.n,
        "rank": s.rank,
        "prime_power": pp is not None,
        "basic_sets": [sorted(t) for t in s.basic_sets],
        "xgroups": [{"order": h, "elements": sorted(subgroup(s.n, h))} for h in xs],
        "xgroup_covers": [[a, b] for a in xs for b in xs if b > a and b % a == 0 and not any(a < c < b and c % a == 0 and b % c == 0 for c in xs)],
        "radical": {"order": rad, "elements": sorted(subgroup(s.n, rad))},
    }
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rep["scheme"]["normal"] = is_normal(s, cap_nodes)
            rep["wedges"] = [w.to_dict() for w in wedge_decompositions(s)]
            rep["tree"] = classify(s, cap_nodes).to_dict()
        if caught:
            rep["warnings"] = [str(w.message) for w in caught]
    except SearchLimitExceeded as exc:
        rep["undecided"] = str(exc)
        return rep, EXIT_UNDECIDED
    except ClassificationError as exc:
        log.error("classification failed for %s: %s", spec, exc)
        rep["error"] = str(exc)
        return rep, EXIT_UNDECIDED
    return rep, EXIT_OK


def run_iso(spec: str, other: str, cap_nodes: int = DEFAULT_NODE_CAP, cap_tuples: int | None = DEFAULT_TUPLE_CAP, seed: int = 0) -> tuple[dict, int]:
    _, info, prep = _load(spec)
    c = prep.connection_set
    if c is None:
        raise InputError(f"{spec}: first input must be circ:<n>:<set>")
    if prime_power(c.modulus) is None:
        raise InputError(f"{spec}: modulus {c.modulus} is not a prime power")
    info["connection_set"] = sorted(c.elements)
    h, hinfo, _ = _load(other)
    rep = _base("iso", [info, hinfo], {"cap_nodes": cap_nodes, "cap_tuples": cap_tuples, "seed": seed})
    cert = iso_test(c, h, cap_tuples=cap_tuples, cap_nodes=cap_nodes)
    rep["certificate"] = cert.to_dict()
    code = {"isomorphic": EXIT_OK, "non-isomorphic": EXIT_NONISO}.get(cert.verdict, EXIT_UNDECIDED)
    return rep, code


# ---------------------------------------------------------------- batch


def _job_key(job: dict) -> str:
    return hashlib.sha256(json.dumps(job, sort_keys=True).encode()).hexdigest()


def _canonical_job(raw: dict, base_dir: Path, defaults: dict) -> dict:
    if not isinstance(raw, dict):
        raise InputError("job is not a JSON object")
    cmd = raw.get("command")
    if cmd not in ("wl", "scheme", "iso"):
        raise InputError(f"unknown command {cmd!r}")
    inputs = raw.get("inputs")
    if not isinstance(inputs, list) or not inputs or not all(isinstance(x, str) for x in inputs):
        raise InputError("inputs must be a non-empty list of strings")
    resolved = []
    digests = []
    for spec in inputs:
        if not spec.startswith(("circ:", "paley:")) and not Path(spec).is_absolute():
            spec = str(base_dir / spec)
        resolved.append(spec)
        digests.append(_load(spec)[1]["digest"])
    job = {
        "command": cmd,
        "inputs": resolved,
        "digests": digests,
        "seed": int(raw.get("seed", defaults["seed"])),
        "cap_nodes": int(raw.get("cap_nodes", defaults["cap_nodes"])),
        "cap_tuples": int(raw.get("cap_tuples", defaults["cap_tuples"])),
        "version": __version__,
    }
    if cmd == "wl":
        job["m"] = int(raw.get("m", defaults["m"]))
    return job


def run_job(job: dict) -> tuple[dict, int]:
    cmd = job["command"]
    if cmd == "wl":
        return run_wl(job["inputs"], job["m"], job["cap_tuples"], job["seed"])
    if cmd == "scheme":
        if len(job["inputs"]) != 1:
            raise InputError("scheme takes one input")
        return run_scheme(job["inputs"][0], cap_nodes=job["cap_nodes"], seed=job["seed"])
    if len(job["inputs"]) != 2:
        raise InputError("iso takes two inputs")
    return run_iso(job["inputs"][0], job["inputs"][1], job["cap_nodes"], job["cap_tuples"], job["seed"])


def _safe_run(job: dict) -> tuple[dict | None, int, str | None]:
    try:
        rep, code = run_job(job)
        return rep, code, None
    except Exception as exc:  # isolate each job
        return None, EXIT_INPUT, f"{type(exc).__name__}: {exc}"


class Cache:
    """Reports stored as ``<dir>/<key[:2]>/<key>.json``, written by atomic rename."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> str | None:
        p = self._path(key)
        return p.read_text() if p.exists() else None

    def put(self, key: str, text: str) -> None:
        p = self._path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=".tmp-")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, p)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def run_batch(manifest: str, cache_dir: str, jobs: int = 1, defaults: dict | None = None) -> tuple[list[dict], dict]:
    """Run a JSON-lines manifest; returns per-job entries and the summary."""
    defaults = {"seed": 0, "cap_nodes": DEFAULT_NODE_CAP, "cap_tuples": DEFAULT_TUPLE_CAP, "m": 2} | (defaults or {})
    path = Path(manifest)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputError(f"{manifest}: {exc}") from exc
    cache = Cache(cache_dir)
    entries: list[dict] = []
    pending: list[tuple[int, str, dict]] = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        entry: dict = {"line": lineno}
        try:
            raw = json.loads(line)
            if isinstance(raw, dict) and "id" in raw:
                entry["id"] = raw["id"]
            job = _canonical_job(raw, path.parent, defaults)
        except (json.JSONDecodeError, InputError, TypeError, ValueError) as exc:
            entry.update(status="error", error=f"{type(exc).__name__}: {exc}")
            entries.append(entry)
            continue
        key = _job_key(job)
        entry["key"] = key
        hit = cache.get(key)
        if hit is not None:
            stored = json.loads(hit)
            entry.update(status="ok", cached=True, exit=stored["exit"], report=stored["report"])
        else:
            pending.append((len(entries), key, job))
        entries.append(entry)
    if pending:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_safe_run, [j for _, _, j in pending]))
        else:
            results = [_safe_run(j) for _, _, j in pending]
        for (idx, key, _), (rep, code, err) in zip(pending, results):
            if err is not None:
                entries[idx].update(status="error", error=err)
                continue
            cache.put(key, _dump({"exit": code, "report": rep}))
            entries[idx].update(status="ok", cached=False, exit=code, report=rep)
    summary = {
        "jobs": len(entries),
        "ok": sum(e["status"] == "ok" for e in entries),
        "errors": sum(e["status"] == "error" for e in entries),
        "cache_hits": sum(bool(e.get("cached")) for e in entries),
        "isomorphic": sum(e.get("report", {}).get("certificate", {}).get("verdict") == "isomorphic" for e in entries),
        "non_isomorphic": sum(e.get("report", {}).get("certificate", {}).get("verdict") == "non-isomorphic" for e in entries),
    }
    return entries, summary


# ---------------------------------------------------------------- rendering


def _render(rep: dict) -> str:
    lines = []
    cmd = rep["command"]
    for i, inp in enumerate(rep["inputs"]):
        lines.append(f"input {i}: {inp['source']} ({inp['format']}, n={inp['n']}, arcs={inp['arcs']})")
    if "undecided" in rep:
        lines.append(f"undecided: {rep['undecided']}")
    if cmd == "wl":
        m = rep["options"]["m"]
        for i, c in enumerate(rep.get("colorings", [])):
            lines.append(f"WL_{m} on input {i}: {c['classes']} classes after {c['rounds']} rounds")
        if "comparison" in rep:
            cmp = rep["comparison"]
            word = "equivalent" if cmp["equivalent"] else f"inequivalent (round {cmp['rounds']})"
            lines.append(f"WL_{m}: {word}")
    elif cmd == "scheme":
        s = rep["scheme"]
        lines.append(f"rank {s['rank']}, normal {s.get('normal')}, radical {{{', '.join(map(str, s['radical']['elements']))}}}")
        lines.append("X-groups: " + ", ".join(str(x["order"]) for x in s["xgroups"]))
        if "tree" in rep:
            lines.extend(_render_tree(rep["tree"], 0))
    elif cmd == "iso":
        cert = rep["certificate"]
        lines.append(f"verdict: {cert['verdict']}")
        if cert["witness"] is not None:
            lines.append("witness: " + " ".join(map(str, cert["witness"])))
        if cert["distinguisher"] is not None:
            d = cert["distinguisher"]
            lines.append(f"distinguished by WL_{d['m']} at round {d['round']}")
    return "\n".join(lines)


def _render_tree(node: dict, depth: int) -> list[str]:
    pad = "  " * depth
    extra = f" U={node['U']} L={node['L']}" if node["kind"] == "Wedge" else ""
    out = [f"{pad}{node['kind']} n={node['n']} rank={node['rank']}{extra}"]
    for ch in node.get("children", []):
        out.extend(_render_tree(ch, depth + 1))
    return out


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the JSON report")
    common.add_argument("--cap-nodes", type=int, default=DEFAULT_NODE_CAP, help="search node budget")
    common.add_argument("--cap-tuples", type=int, default=DEFAULT_TUPLE_CAP, help="largest tuple space refined")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cache-dir", default=None, help=f"batch cache (default $WLCIRC_CACHE or {DEFAULT_CACHE})")
    common.add_argument("--jobs", type=int, default=1, help="batch worker processes")
    common.add_argument("--timing", action="store_true", help="add wall-clock time to the report")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="wlcirc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"wlcirc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    w = sub.add_parser("wl", parents=[common], help="stable WL colorings and equivalence")
    w.add_argument("--m", type=int, choices=(1, 2, 3), default=2)
    w.add_argument("inputs", nargs="+")
    s = sub.add_parser("scheme", parents=[common], help="circulant scheme analysis")
    s.add_argument("--require-prime-power", action="store_true")
    s.add_argument("input")
    i = sub.add_parser("iso", parents=[common], help="isomorphism test against a circulant graph")
    i.add_argument("circulant")
    i.add_argument("other")
    b = sub.add_parser("batch", parents=[common], help="run a JSON-lines manifest")
    b.add_argument("--m", type=int, choices=(1, 2, 3), default=2)
    b.add_argument("manifest")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    start = time.perf_counter()
    try:
        if args.command == "batch":
            cache_dir = args.cache_dir or os.environ.get("WLCIRC_CACHE") or DEFAULT_CACHE
            defaults = {"seed": args.seed, "cap_nodes": args.cap_nodes, "cap_tuples": args.cap_tuples, "m": args.m}
            entries, summary = run_batch(args.manifest, cache_dir, args.jobs, defaults)
            for e in entries:
                print(_dump(e))
            if args.timing:
                summary["seconds"] = round(time.perf_counter() - start, 3)
            print(_dump({"summary": summary}))
            return EXIT_OK if summary["errors"] == 0 else EXIT_INPUT
        if args.command == "wl":
            rep, code = run_wl(args.inputs, args.m, args.cap_tuples, args.seed)
        elif args.command == "scheme":
            rep, code = run_scheme(args.input, args.require_prime_power, args.cap_nodes, args.seed)
        else:
            rep, code = run_iso(args.circulant, args.other, args.cap_nodes, args.cap_tuples, args.seed)
    except InputError as exc:
        print(f"wlcirc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.timing:
        rep["seconds"] = round(time.perf_counter() - start, 3)
    print(_dump(rep) if args.json else _render(rep))
    return code


if __name__ == "__main__":
    sys.exit(main())
