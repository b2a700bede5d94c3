"""Plain-text formats: adjacency files, key-value documents, result tables.

Key-value grammar (used for parameter documents and experiment configs)::

    document := { line }
    line     := blank | "#" comment | key "=" value
    key      := identifier
    value    := JSON literal | bare word

A value whose square brackets are unbalanced continues on the following
lines, so matrices can be written one row per line. Bare words such as
``svs`` are read as strings; ``none`` and ``null`` both mean "unset".
Text after ``#`` is ignored outside of quoted strings.
"""

from __future__ import annotations

import json
import math
import os
import re

import numpy as np

from .errors import InvalidAdjacency, ParseError, ShapeMismatch
from .model import AdjacencyMatrix, DcmmParams

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


# -- key-value documents ---------------------------------------------------------

def _strip_comment(line: str) -> str:
    in_str = False
    for i, ch in enumerate(line):
        if ch == '"' and (i == 0 or line[i - 1] != "\\"):
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:i]
    return line


def _depth(text: str) -> int:
    """Bracket balance, ignoring brackets inside quoted strings."""
    depth, in_str, prev = 0, False, ""
    for ch in text:
        if ch == '"' and prev != "\\":
            in_str = not in_str
        elif not in_str:
            depth += (ch == "[") - (ch == "]")
        prev = ch
    return depth


_RESERVED = {"none", "null", "true", "false", "nan", "infinity", "-infinity"}


def _parse_value(text: str, lineno: int):
    text = text.strip()
    if not text:
        raise ParseError(f"line {lineno}: missing value")
    if text.lower() in ("none", "null"):
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.\-]*", text):
        return text
    raise ParseError(f"line {lineno}: cannot parse value {text!r}")


def parse_kv(text: str) -> dict:
    """Parse a key-value document into a dict (insertion order kept)."""
    out: dict = {}
    pending = None            # (key, start line, accumulated text)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if pending is not None:
            key, start, acc = pending
            acc += " " + line.strip()
        else:
            if not line.strip():
                continue
            if "=" not in line:
                raise ParseError(f"line {lineno}: expected 'key = value'")
            key, _, acc = line.partition("=")
            key, start = key.strip(), lineno
            if not _KEY.match(key):
                raise ParseError(f"line {lineno}: invalid key {key!r}")
            if key in out:
                raise ParseError(f"line {lineno}: duplicate key {key!r}")
        depth = _depth(acc)
        if depth < 0:
            raise ParseError(f"line {lineno}: unbalanced ']'")
        if depth > 0:
            pending = (key, start, acc)
            continue
        pending = None
        out[key] = _parse_value(acc, start)
    if pending is not None:
        raise ParseError(f"line {pending[1]}: unterminated list for {pending[0]!r}")
    return out


def read_kv(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_kv(fh.read())


def _num(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {v} cannot be written")
    return repr(v)


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, str):
        bare = re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.\-]*", v) and v.lower() not in _RESERVED
        return v if bare else json.dumps(v)
    if isinstance(v, np.ndarray):
        v = v.tolist()
    if isinstance(v, (list, tuple)):
        if v and isinstance(v[0], (list, tuple, np.ndarray)):
            rows = ",\n".join("  " + format_value(list(r)) for r in v)
            return "[\n" + rows + "\n]"
        return "[" + ", ".join(_num(x) for x in v) + "]"
    return _num(v)


def format_kv(doc: dict, header: str | None = None) -> str:
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    for key, v in doc.items():
        lines.append(f"{key} = {format_value(v)}")
    return "\n".join(lines) + "\n"


# -- parameter documents ------------------------------------------------------------

def params_to_doc(params: DcmmParams) -> dict:
    return dict(n=params.n, K=params.k, theta=params.theta.tolist(),
                pi=params.pi.tolist(), p=params.p.tolist())


def params_from_doc(doc: dict) -> DcmmParams:
    missing = [k for k in ("theta", "pi", "p") if k not in doc]
    if missing:
        raise ParseError(f"params document lacks {', '.join(missing)}")
    try:
        theta = np.asarray(doc["theta"], dtype=float)
        pi = np.asarray(doc["pi"], dtype=float)
        p = np.asarray(doc["p"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"params document has ragged or non-numeric arrays: {exc}") from exc
    if "n" in doc and doc["n"] != theta.shape[0]:
        raise ShapeMismatch(f"n = {doc['n']} but theta has {theta.shape[0]} entries")
    if "K" in doc and (p.ndim != 2 or doc["K"] != p.shape[0]):
        raise ShapeMismatch(f"K = {doc['K']} but p has shape {p.shape}")
    return DcmmParams(theta=theta, pi=pi, p=p)


def write_params(params: DcmmParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_kv(params_to_doc(params), header="DCMM parameters"))


def read_params(path) -> DcmmParams:
    return params_from_doc(read_kv(path))


# -- adjacency ----------------------------------------------------------------------

def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _symmetrize(x, strict: bool, what: str):
    if not np.array_equal(x, x.T):
        if strict:
            bad = np.argwhere(x != x.T)[0]
            raise InvalidAdjacency(f"{what} is asymmetric at ({bad[0]}, {bad[1]})")
        x = np.maximum(x, x.T)
    return x


def parse_adjacency_csv(text: str, strict: bool = False) -> AdjacencyMatrix:
    """Dense 0/1 table, one comma-separated row per node."""
    rows = []
    for lineno, line in _content_lines(text):
        try:
            rows.append([int(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: non-integer entry") from exc
    if not rows:
        raise ParseError("adjacency file is empty")
    if any(len(r) != len(rows) for r in rows):
        raise InvalidAdjacency(f"adjacency table is not square ({len(rows)} rows)")
    x = np.asarray(rows, dtype=np.int64)
    if not np.isin(x, (0, 1)).all():
        raise InvalidAdjacency("adjacency entries must be 0 or 1")
    return AdjacencyMatrix(_symmetrize(x, strict, "adjacency table"))


def parse_edge_list(text: str, n: int | None = None, strict: bool = False) -> AdjacencyMatrix:
    """Whitespace-separated ``i j`` pairs, 0-indexed; ``i i`` is a self-loop.

    Each undirected edge is normally listed once and closed symmetrically;
    repeats are merged. With ``strict`` every off-diagonal edge must be listed
    in both directions and no line may repeat.
    """
    pairs = []
    for lineno, line in _content_lines(text):
        toks = line.split()
        if len(toks) != 2:
            raise ParseError(f"line {lineno}: expected two node indices")
        try:
            i, j = int(toks[0]), int(toks[1])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: node indices must be integers") from exc
        if i < 0 or j < 0:
            raise ParseError(f"line {lineno}: negative node index")
        pairs.append((i, j))
    size = max((max(p) for p in pairs), default=-1) + 1
    if n is None:
        n = size
    elif size > n:
        raise InvalidAdjacency(f"edge list mentions node {size - 1} but n = {n}")
    if n == 0:
        raise ParseError("edge list is empty and no node count was given")
    if strict and len(set(pairs)) != len(pairs):
        raise InvalidAdjacency("edge list repeats a pair")
    x = np.zeros((n, n), dtype=np.int64)
    for i, j in pairs:
        x[i, j] = 1
    return AdjacencyMatrix(_symmetrize(x, strict, "edge list"))


def sniff_format(text: str) -> str:
    for _, line in _content_lines(text):
        return "csv" if "," in line else "edges"
    raise ParseError("adjacency file is empty")


def read_adjacency(path, fmt: str = "auto", n: int | None = None,
                   strict: bool = False) -> AdjacencyMatrix:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "auto":
        fmt = sniff_format(text)
    if fmt == "csv":
        return parse_adjacency_csv(text, strict=strict)
    if fmt == "edges":
        return parse_edge_list(text, n=n, strict=strict)
    raise ParseError(f"unknown adjacency format {fmt!r}")


def write_adjacency_csv(adj, path) -> None:
    x = np.asarray(getattr(adj, "x", adj), dtype=np.int64)
    with open(path, "w", encoding="utf-8") as fh:
        for row in x:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def write_edge_list(adj, path) -> None:
    """Each undirected edge once, as ``i j`` with ``i <= j``, in row-major order."""
    x = np.asarray(getattr(adj, "x", adj))
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in zip(*np.nonzero(np.triu(x))):
            fh.write(f"{i} {j}\n")


# -- estimation results --------------------------------------------------------------

def _g(v) -> str:
    return repr(float(v))


def write_estimates(result, out_dir) -> list:
    """``p_hat.csv`` (row-major ``a,b,value``), ``theta_hat.csv`` and ``pi_hat.csv``."""
    p, theta, pi = result.p_hat, result.theta_hat, result.pi_hat
    k = p.shape[0]
    paths = [os.path.join(out_dir, f) for f in ("p_hat.csv", "theta_hat.csv", "pi_hat.csv")]
    with open(paths[0], "w", encoding="utf-8") as fh:
        fh.write("a,b,p\n")
        for a in range(k):
            for b in range(k):
                fh.write(f"{a},{b},{_g(p[a, b])}\n")
    with open(paths[1], "w", encoding="utf-8") as fh:
        fh.write("node,theta\n")
        for i, t in enumerate(theta):
            fh.write(f"{i},{_g(t)}\n")
    with open(paths[2], "w", encoding="utf-8") as fh:
        fh.write("node," + ",".join(f"pi_{c}" for c in range(k)) + "\n")
        for i, row in enumerate(pi):
            fh.write(f"{i}," + ",".join(_g(v) for v in row) + "\n")
    return paths
