"""Undirected graph container, loaders, and node colorings.

Graphs are simple and undirected: parallel edges, self-loops and both
orientations of the same pair collapse during normalization.  Node ids
are remapped to 0..n-1 in order of first appearance; adjacency is CSR
with each row sorted ascending.  A ColoredGraph is immutable once
built -- its arrays are marked read-only so concurrent readers need no
locking -- and coloring returns a new instance sharing the topology.
"""

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError

_GRAPH_MAGIC = b"GFG1"


@dataclass(frozen=True)
class ColoredGraph:
    n: int
    m: int
    indptr: np.ndarray
    indices: np.ndarray
    k: int | None = None
    colors: np.ndarray | None = None
    original_ids: np.ndarray | None = None
    lam: float | None = None  # color-0 weight when biased, else None

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if self.colors is not None:
            self.colors.setflags(write=False)

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    @property
    def max_degree(self) -> int:
        if self.n == 0:
            return 0
        return int(np.max(np.diff(self.indptr)))

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return i < len(row) and row[i] == v

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(struct.pack("<QQ", self.n, self.m))
        h.update(self.indptr.tobytes())
        h.update(self.indices.tobytes())
        return h.hexdigest()

    def with_colors(self, k: int, colors: np.ndarray, lam=None) -> "ColoredGraph":
        if len(colors) != self.n:
            raise ValueError("one color per node required")
        return ColoredGraph(
            self.n, self.m, self.indptr, self.indices,
            k=k, colors=colors, original_ids=self.original_ids, lam=lam,
        )


def from_edges(pairs, original_ids=None) -> ColoredGraph:
    """Normalize an iterable of (u, v) int pairs into a ColoredGraph.

    Self-loops still introduce their node; duplicates and reversed
    copies of an edge collapse to one.
    """
    pairs = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs,
                       dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        raise ParseError("empty graph")
    if original_ids is None:
        remap: dict[int, int] = {}
        flat = pairs.ravel()
        for x in flat.tolist():
            if x not in remap:
                remap[x] = len(remap)
        ids = np.fromiter((remap[x] for x in flat.tolist()), dtype=np.int64, count=len(flat))
        pairs = ids.reshape(-1, 2)
        original = np.fromiter(remap.keys(), dtype=np.int64, count=len(remap))
    else:
        original = np.asarray(original_ids, dtype=np.int64)
    n = int(pairs.max()) + 1
    u = np.minimum(pairs[:, 0], pairs[:, 1])
    v = np.maximum(pairs[:, 0], pairs[:, 1])
    keep = u != v  # self-loops dropped
    u, v = u[keep], v[keep]
    und = np.unique(u * np.int64(n) + v)
    u = (und // n).astype(np.int64)
    v = (und % n).astype(np.int64)
    m = len(u)
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return ColoredGraph(n, m, indptr, dst.astype(np.int32), original_ids=original)


def load_edge_list(path) -> ColoredGraph:
    """Parse a whitespace-separated edge list; '#'/'%' start comments."""
    pairs = []
    try:
        fh = open(path, "rt", encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot open {path}: {e}") from e
    with fh:
        for ln, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text[0] in "#%":
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ParseError(f"line {ln}: expected two node ids, got {len(parts)}")
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ParseError(f"line {ln}: malformed token in {text!r}") from None
    if not pairs:
        raise ParseError("empty graph")
    return from_edges(pairs)


def save_edge_list(g: ColoredGraph, path):
    """Write the normalized edge list (u < v, remapped ids)."""
    with open(path, "wt", encoding="utf-8") as fh:
        for u in range(g.n):
            row = g.neighbors(u)
            for v in row[row > u]:
                fh.write(f"{u} {v}\n")


def save_binary(g: ColoredGraph, path):
    """Binary cache: counts, CSR offsets, 32-bit neighbor ids, all LE."""
    with open(path, "wb") as fh:
        fh.write(_GRAPH_MAGIC)
        fh.write(struct.pack("<QQ", g.n, g.m))
        fh.write(g.indptr.astype("<i8").tobytes())
        fh.write(g.indices.astype("<i4").tobytes())
    if g.original_ids is not None:
        with open(str(path) + ".ids", "wb") as fh:
            fh.write(g.original_ids.astype("<i8").tobytes())


def load_binary(path) -> ColoredGraph:
    try:
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _GRAPH_MAGIC:
                raise ParseError(f"{path}: not a graph cache (bad magic)")
            n, m = struct.unpack("<QQ", fh.read(16))
            indptr = np.frombuffer(fh.read(8 * (n + 1)), dtype="<i8").astype(np.int64)
            indices = np.frombuffer(fh.read(4 * 2 * m), dtype="<i4").astype(np.int32)
            if len(indptr) != n + 1 or len(indices) != 2 * m:
                raise ParseError(f"{path}: truncated graph cache")
    except OSError as e:
        raise ParseError(f"cannot open {path}: {e}") from e
    except (struct.error, ValueError) as e:
        raise ParseError(f"{path}: truncated graph cache") from e
    original = None
    try:
        with open(str(path) + ".ids", "rb") as fh:
            original = np.frombuffer(fh.read(), dtype="<i8").astype(np.int64)
    except OSError:
        pass
    return ColoredGraph(int(n), int(m), indptr, indices, original_ids=original)


def load_graph(path) -> ColoredGraph:
    """Dispatch on magic bytes: binary cache or text edge list."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(4)
    except OSError as e:
        raise ParseError(f"cannot open {path}: {e}") from e
    if head == _GRAPH_MAGIC:
        return load_binary(path)
    return load_edge_list(path)


# ---------------------------------------------------------------------------
# colorings


def color_uniform(g: ColoredGraph, k: int, rng) -> ColoredGraph:
    """Independent uniform color in 0..k-1 per node."""
    if not 2 <= k <= 16:
        raise ValueError("k must be in 2..16")
    colors = rng.integers(0, k, size=g.n, dtype=np.int64).astype(np.int8)
    return g.with_colors(k, colors)


def color_biased(g: ColoredGraph, k: int, lam: float, rng) -> ColoredGraph:
    """Color 0 with probability 1-(k-1)*lam, every other color with lam.

    Useful when size-k structures are stored only at color-0 roots:
    shrinking lam thins the stored table while the correction factors
    in the estimator keep results unbiased.
    """
    if not 2 <= k <= 16:
        raise ValueError("k must be in 2..16")
    if not 0.0 < lam < 1.0 / (k - 1):
        raise ValueError("lambda must lie in (0, 1/(k-1))")
    u = rng.random(g.n)
    p0 = 1.0 - (k - 1) * lam
    band = np.floor((u - p0) / lam).astype(np.int64) + 1
    colors = np.where(u < p0, 0, np.minimum(band, k - 1)).astype(np.int8)
    return g.with_colors(k, colors, lam=lam)
