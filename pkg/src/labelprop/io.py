"""Text formats: edge lists, partition and cover TSVs, hierarchies, run reports.

Edge list
    One ``u v [w]`` record per line, whitespace separated. ``#`` starts a
    comment. A line with a single token declares a node without edges.
    Header directives precede the first record: ``%directed``, ``%signed``
    and ``%types <path>`` (a ``node<TAB>type`` side file, relative to the
    edge list). Ids that are all non-negative integers are used as is;
    otherwise ids are remapped to 0..n-1 in order of first appearance and
    kept in ``Graph.names``.

Partition TSV
    ``node<TAB>label`` per line.

Cover TSV
    ``node<TAB>label:weight[,label:weight...]`` per line.

Weights are written with 12 significant digits.
"""

from __future__ import annotations

import contextlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .cover import Cover
from .graph import Graph, GraphError, Partition, dense_labels, from_arrays

FLOAT_FMT = "%.12g"


class FormatError(GraphError):
    """Malformed input file."""

    def __init__(self, path, lineno, msg):
        where = f"{path}:{lineno}" if lineno else str(path)
        super().__init__(f"{where}: {msg}")
        self.lineno = lineno


def _fmt(x):
    return FLOAT_FMT % x


@contextlib.contextmanager
def _open_out(path):
    """Text output handle; ``-`` is stdout."""
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _records(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


class IdMap:
    """Token <-> dense id mapping."""

    def __init__(self, names=None):
        self.names = list(names) if names is not None else None
        self.index = {t: i for i, t in enumerate(self.names)} if self.names is not None else None

    @classmethod
    def for_graph(cls, g: Graph):
        return cls(g.names)

    def token(self, i):
        return self.names[i] if self.names is not None else str(i)

    def lookup(self, tok, n):
        if self.index is not None:
            return self.index.get(tok)
        try:
            i = int(tok)
        except ValueError:
            return None
        return i if 0 <= i < n and str(i) == tok else None


def _integer_ids(tokens):
    return all(t.isdigit() and (t == "0" or not t.startswith("0")) for t in tokens)


def read_edge_list(path) -> Graph:
    path = Path(path)
    directed = signed = False
    types_path = None
    rows = []
    for lineno, line in _records(path):
        if line.startswith("%"):
            if rows:
                raise FormatError(path, lineno, "directive after the first edge record")
            parts = line.split()
            if parts[0] == "%directed" and len(parts) == 1:
                directed = True
            elif parts[0] == "%signed" and len(parts) == 1:
                signed = True
            elif parts[0] == "%types" and len(parts) == 2:
                if types_path is not None:
                    raise FormatError(path, lineno, "repeated %types directive")
                types_path = path.parent / parts[1]
            else:
                raise FormatError(path, lineno, f"unknown directive {line!r}")
            continue
        parts = line.split()
        if len(parts) > 3:
            raise FormatError(path, lineno, "expected 'u v [w]'")
        w = 1.0
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise FormatError(path, lineno, f"bad weight {parts[2]!r}") from None
            if not math.isfinite(w):
                raise FormatError(path, lineno, "weight must be finite")
            if w < 0 and not signed:
                raise FormatError(path, lineno, "negative weight needs the %signed directive")
        rows.append((lineno, parts[:2], w))

    tokens = [t for _, ids, _ in rows for t in ids]
    if _integer_ids(tokens):
        names = None
        ids = [int(t) for t in tokens]
        n = max(ids) + 1 if ids else 0
    else:
        order = {}
        for t in tokens:
            order.setdefault(t, len(order))
        names = tuple(order)
        ids = [order[t] for t in tokens]
        n = len(names)
    u, v, w = [], [], []
    pos = 0
    for _, parts, wt in rows:
        if len(parts) == 2:
            u.append(ids[pos])
            v.append(ids[pos + 1])
            w.append(wt)
        pos += len(parts)

    node_types = None
    if types_path is not None:
        node_types = _read_types(types_path, IdMap(names), n)
    return from_arrays(n, u, v, w, directed=directed, signed=signed, node_types=node_types, names=names)


def _read_types(path, idmap, n):
    types = np.full(n, -1, np.int64)
    codes = {}
    for lineno, line in _records(path):
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(path, lineno, "expected 'node<TAB>type'")
        i = idmap.lookup(parts[0], n)
        if i is None:
            raise FormatError(path, lineno, f"unknown node {parts[0]!r}")
        types[i] = codes.setdefault(parts[1], len(codes))
    if (types < 0).any():
        raise FormatError(path, 0, f"missing type for node {idmap.token(int(np.argmax(types < 0)))!r}")
    return types


def write_edge_list(g: Graph, path):
    path = Path(path)
    ids = IdMap.for_graph(g)
    lines = []
    if g.directed:
        lines.append("%directed")
    if g.signed:
        lines.append("%signed")
    if g.node_type is not None:
        tpath = path.with_name(path.name + ".types")
        with open(tpath, "w", encoding="utf-8") as fh:
            fh.writelines(f"{ids.token(i)}\t{int(t)}\n" for i, t in enumerate(g.node_type))
        lines.append(f"%types {tpath.name}")
    u, v, w = g.edges()
    seen = np.zeros(g.n, bool)
    seen[u] = seen[v] = True
    for a, b, x in zip(u.tolist(), v.tolist(), w.tolist()):
        lines.append(f"{ids.token(a)} {ids.token(b)} {_fmt(x)}")
    lines.extend(ids.token(i) for i in np.flatnonzero(~seen).tolist())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


# -- partitions and covers --------------------------------------------------------


def write_partition(p, path, names=None):
    lab = dense_labels(p.labels if isinstance(p, Partition) else p)
    ids = IdMap(names)
    with _open_out(path) as fh:
        fh.writelines(f"{ids.token(i)}\t{int(x)}\n" for i, x in enumerate(lab))


def _read_node_table(path, names=None, n=None):
    """Rows ``(node_id, value_token)``; every node exactly once.

    Without ``names`` or ``n`` the node tokens define the node set: integer
    tokens must be exactly 0..n-1, other tokens are taken in file order.
    """
    rows = []
    for lineno, line in _records(path):
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise FormatError(path, lineno, "expected two tab-separated fields")
        rows.append((lineno, parts[0].strip(), parts[1].strip()))
    if names is None and n is None:
        toks = [t for _, t, _ in rows]
        if _integer_ids(toks):
            n = len(toks)
        else:
            names = toks
    ids = IdMap(names)
    size = len(names) if names is not None else n
    out = [None] * size
    for lineno, tok, val in rows:
        i = ids.lookup(tok, size)
        if i is None:
            raise FormatError(path, lineno, f"unknown node {tok!r}")
        if out[i] is not None:
            raise FormatError(path, lineno, f"node {tok!r} listed twice")
        out[i] = val
    missing = [ids.token(i) for i, x in enumerate(out) if x is None]
    if missing:
        raise FormatError(path, 0, f"no entry for node {missing[0]!r}")
    return out, names


def read_partition(path, names=None, n=None) -> Partition:
    vals, _ = _read_node_table(path, names, n)
    codes = {}
    return Partition(np.array([codes.setdefault(v, len(codes)) for v in vals], np.int64))


def read_partition_named(path):
    """``(partition, node_tokens)`` with tokens in file order."""
    rows = [(line.split("\t") if "\t" in line else line.split()) for _, line in _records(path)]
    names = [r[0].strip() for r in rows]
    return read_partition(path, names=names), names


def write_cover(c: Cover, path, names=None):
    ids = IdMap(names)
    with _open_out(path) as fh:
        for i, aff in enumerate(c.affiliations):
            items = ",".join(f"{g}:{_fmt(w)}" for g, w in sorted(aff.items()))
            fh.write(f"{ids.token(i)}\t{items}\n")


def read_cover(path, names=None, n=None) -> Cover:
    vals, _ = _read_node_table(path, names, n)
    aff = []
    for v in vals:
        d = {}
        for item in v.split(","):
            g, _, w = item.partition(":")
            try:
                d[int(g)] = float(w)
            except ValueError:
                raise FormatError(path, 0, f"bad affiliation {item!r}") from None
        aff.append(d)
    return Cover(aff)


# -- hierarchy and reports ----------------------------------------------------------


def write_hierarchy(h, prefix, names=None):
    """One partition TSV per level (lifted to original nodes) plus an index file.

    Returns the index path. Index lines are ``level<TAB>file<TAB>groups``.
    """
    prefix = Path(prefix)
    entries = []
    for t, p in enumerate(h.lifted_all()):
        f = prefix.with_name(f"{prefix.name}.level{t}.tsv")
        write_partition(p, f, names)
        entries.append(f"{t}\t{f.name}\t{p.n_groups}\n")
    index = prefix.with_name(f"{prefix.name}.index.tsv")
    with open(index, "w", encoding="utf-8") as fh:
        fh.writelines(entries)
    return index


def read_hierarchy(index, names=None, n=None):
    from .pipelines import Hierarchy

    index = Path(index)
    lifted = []
    for lineno, line in _records(index):
        parts = line.split("\t")
        if len(parts) != 3 or not parts[0].isdigit() or int(parts[0]) != len(lifted):
            raise FormatError(index, lineno, "expected 'level<TAB>file<TAB>groups' in level order")
        lifted.append(read_partition(index.parent / parts[1], names, n))
    return Hierarchy.from_lifted(lifted)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def write_report(report: dict, path):
    with _open_out(path) as fh:
        fh.write(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")


def read_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
