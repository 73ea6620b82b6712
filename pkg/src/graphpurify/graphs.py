"""Two-colorable interaction graphs and the label-flip algebra of Pauli operators.

Vertices are numbered 1..n in the external interface; internally vertex v
occupies bit v-1 of an integer label, so ``label_to_string`` prints vertex 1
leftmost.  Graphs are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

MAX_VERTICES = 26


class GraphFormatError(ValueError):
    """Raised for malformed edge-list files or graph spec strings."""


class DisconnectedGraphWarning(UserWarning):
    """The graph is accepted but has more than one connected component."""


def bit(vertex: int) -> int:
    """Bit value of a 1-based vertex inside an integer label."""
    return 1 << (vertex - 1)


def label_to_string(label: int, n: int) -> str:
    """Binary string of a label, vertex 1 leftmost."""
    return "".join("1" if label >> (v - 1) & 1 else "0" for v in range(1, n + 1))


def string_to_label(s: str) -> int:
    label = 0
    for i, ch in enumerate(s):
        if ch == "1":
            label |= 1 << i
        elif ch != "0":
            raise ValueError(f"label string must be binary, got {s!r}")
    return label


@dataclass(frozen=True)
class Coloring:
    """Result of a two-coloring attempt.

    ``ok`` is False when the graph contains an odd cycle, in which case
    ``odd_cycle`` holds a witness (vertex sequence of odd length whose
    consecutive pairs, including last-to-first, are edges).
    """

    ok: bool
    color_a: Optional[frozenset[int]] = None
    odd_cycle: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class FlipPattern:
    """Label XOR mask describing how a Pauli operator permutes basis labels."""

    mask: int

    def __xor__(self, other: "FlipPattern") -> "FlipPattern":
        return FlipPattern(self.mask ^ other.mask)

    def apply(self, label: int) -> int:
        return label ^ self.mask


def two_color(edges: Iterable[tuple[int, int]], n: int) -> Coloring:
    """Bipartition the vertices so no edge is monochromatic.

    Returns a failed :class:`Coloring` with an odd-cycle witness instead of
    raising when the graph is not two-colorable.
    """
    adj: list[list[int]] = [[] for _ in range(n + 1)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    color = [-1] * (n + 1)
    parent = [0] * (n + 1)
    for root in range(1, n + 1):
        if color[root] != -1:
            continue
        color[root] = 0
        parent[root] = 0
        queue = [root]
        while queue:
            u = queue.pop(0)
            for v in adj[u]:
                if color[v] == -1:
                    color[v] = 1 - color[u]
                    parent[v] = u
                    queue.append(v)
                elif color[v] == color[u]:
                    return Coloring(False, odd_cycle=_odd_cycle(u, v, parent))
    color_a = frozenset(v for v in range(1, n + 1) if color[v] == 0)
    return Coloring(True, color_a=color_a)


def _odd_cycle(u: int, v: int, parent: Sequence[int]) -> tuple[int, ...]:
    """Cycle through the conflict edge (u, v) and the BFS tree paths."""
    path_u, path_v = [u], [v]
    seen = {u: 0}
    x = u
    while parent[x]:
        x = parent[x]
        seen[x] = len(path_u)
        path_u.append(x)
    x = v
    while x not in seen:
        x = parent[x]
        path_v.append(x)
    # meet at x: u..x plus reversed v..x (x listed once)
    cycle = path_u[: seen[x] + 1] + path_v[-2::-1]
    return tuple(cycle)


@dataclass(frozen=True)
class TwoColorableGraph:
    """Interaction graph with a fixed two-coloring (colors A and B).

    ``neighbor_masks[v-1]`` has bit k-1 set iff {v, k} is an edge; these masks
    drive the label-flip algebra of single-qubit Pauli operators.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    color_a: frozenset[int]
    neighbor_masks: tuple[int, ...] = field(repr=False)
    spec: str = ""

    @classmethod
    def build(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        color_a: Optional[Iterable[int]] = None,
        spec: str = "",
    ) -> "TwoColorableGraph":
        if not 1 <= n <= MAX_VERTICES:
            raise ValueError(f"vertex count must be in [1, {MAX_VERTICES}], got {n}")
        norm: set[tuple[int, int]] = set()
        for a, b in edges:
            if not (1 <= a <= n and 1 <= b <= n):
                raise ValueError(f"edge ({a}, {b}) out of range 1..{n}")
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            norm.add((min(a, b), max(a, b)))
        edge_tuple = tuple(sorted(norm))
        if color_a is None:
            result = two_color(edge_tuple, n)
            if not result.ok:
                raise ValueError(
                    f"graph is not two-colorable, odd cycle {result.odd_cycle}"
                )
            col_a = result.color_a
        else:
            col_a = frozenset(color_a)
            if not col_a <= set(range(1, n + 1)):
                raise ValueError("color A contains out-of-range vertices")
            for a, b in edge_tuple:
                if (a in col_a) == (b in col_a):
                    raise ValueError(f"edge ({a}, {b}) is monochromatic for the given coloring")
        masks = [0] * n
        for a, b in edge_tuple:
            masks[a - 1] |= bit(b)
            masks[b - 1] |= bit(a)
        graph = cls(n, edge_tuple, col_a, tuple(masks), spec)
        if not graph.is_connected():
            warnings.warn(
                f"graph {spec or edge_tuple} has more than one connected component",
                DisconnectedGraphWarning,
                stacklevel=2,
            )
        return graph

    # -- derived views -----------------------------------------------------

    @property
    def color_b(self) -> frozenset[int]:
        return frozenset(range(1, self.n + 1)) - self.color_a

    @property
    def mask_a(self) -> int:
        m = 0
        for v in self.color_a:
            m |= bit(v)
        return m

    @property
    def mask_b(self) -> int:
        return ((1 << self.n) - 1) ^ self.mask_a

    @property
    def n_a(self) -> int:
        return len(self.color_a)

    @property
    def n_b(self) -> int:
        return self.n - self.n_a

    def degree(self, vertex: int) -> int:
        return self.neighbor_masks[vertex - 1].bit_count()

    def neighbors(self, vertex: int) -> tuple[int, ...]:
        mask = self.neighbor_masks[vertex - 1]
        return tuple(v for v in range(1, self.n + 1) if mask >> (v - 1) & 1)

    def is_connected(self) -> bool:
        seen = {1}
        stack = [1]
        while stack:
            v = stack.pop()
            for w in self.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


def flip_pattern(graph: TwoColorableGraph, qubit: int, axis: str) -> FlipPattern:
    """Label mask a single-qubit Pauli induces on the graph basis.

    A phase flip on qubit j toggles label bit j; a bit flip toggles the
    labels of all neighbors of j; the y axis composes both.  Phases are
    discarded since only diagonal states are tracked.
    """
    if not 1 <= qubit <= graph.n:
        raise ValueError(f"qubit {qubit} out of range 1..{graph.n}")
    nbr = graph.neighbor_masks[qubit - 1]
    if axis == "z":
        return FlipPattern(bit(qubit))
    if axis == "x":
        return FlipPattern(nbr)
    if axis == "y":
        return FlipPattern(bit(qubit) ^ nbr)
    raise ValueError(f"axis must be one of x, y, z, got {axis!r}")


# -- named families ---------------------------------------------------------


def ghz_graph(n: int) -> TwoColorableGraph:
    """Star graph: vertex 1 connected to 2..n, color A = {1}."""
    if n < 1:
        raise ValueError("ghz needs n >= 1")
    edges = [(1, k) for k in range(2, n + 1)]
    return TwoColorableGraph.build(n, edges, color_a={1}, spec=f"ghz:{n}")


def chain_graph(n: int, closed: bool = False) -> TwoColorableGraph:
    """Linear cluster chain 1-2-...-n; odd vertices are color A."""
    if n < 1:
        raise ValueError("chain needs n >= 1")
    edges = [(k, k + 1) for k in range(1, n)]
    spec = f"chain:{n}"
    if closed:
        if n % 2:
            raise ValueError("closed chain with odd vertex count is not two-colorable")
        if n < 3:
            raise ValueError("closed chain needs n >= 4")
        edges.append((1, n))
        spec += ":closed"
    color_a = {v for v in range(1, n + 1) if v % 2 == 1}
    return TwoColorableGraph.build(n, edges, color_a=color_a, spec=spec)


def grid_graph(
    cols: int, rows: int, wrap_x: bool = False, wrap_y: bool = False
) -> TwoColorableGraph:
    """2D cluster on a cols x rows lattice, checkerboard coloring.

    x runs along columns; wrapping an axis requires even length there, else
    the checkerboard breaks (odd cycle).  Vertex id = (r-1)*cols + c.
    """
    if cols < 2 or rows < 2:
        raise ValueError("grid needs cols, rows >= 2")
    if wrap_x and cols % 2:
        raise ValueError("x-wrapped grid needs an even number of columns")
    if wrap_y and rows % 2:
        raise ValueError("y-wrapped grid needs an even number of rows")
    vid = lambda r, c: (r - 1) * cols + c
    edges = []
    for r in range(1, rows + 1):
        for c in range(1, cols + 1):
            if c < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            elif wrap_x:
                edges.append((vid(r, c), vid(r, 1)))
            if r < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
            elif wrap_y:
                edges.append((vid(r, c), vid(1, c)))
    color_a = {
        vid(r, c)
        for r in range(1, rows + 1)
        for c in range(1, cols + 1)
        if (r + c) % 2 == 0
    }
    spec = f"grid:{cols}x{rows}" + (":wrapx" if wrap_x else "") + (":wrapy" if wrap_y else "")
    return TwoColorableGraph.build(cols * rows, edges, color_a=color_a, spec=spec)


def gnk_graph(n: int, k: int) -> TwoColorableGraph:
    """Translation-invariant bipartite family on 2n vertices with degree k.

    Odd vertices form color A; each odd vertex j connects to the even
    vertices j+1, j+3, ..., j+2k-1, wrapping modulo 2n (which stays on the
    even sublattice).
    """
    if n < 1:
        raise ValueError("gnk needs n >= 1")
    if not 1 <= k <= n:
        raise ValueError(f"gnk needs 1 <= k <= n, got k={k}")
    nv = 2 * n
    edges = []
    for j in range(1, nv, 2):
        for step in range(k):
            t = j + 1 + 2 * step
            if t > nv:
                t -= nv
            edges.append((j, t))
    color_a = set(range(1, nv, 2))
    return TwoColorableGraph.build(nv, edges, color_a=color_a, spec=f"gnk:{n},{k}")


def steane7_graph() -> TwoColorableGraph:
    """Seven vertices of a cube (one corner removed), colored by corner parity."""
    corners = [0b000, 0b001, 0b010, 0b011, 0b100, 0b101, 0b110]
    index = {c: i + 1 for i, c in enumerate(corners)}
    edges = []
    for c in corners:
        for axis in (1, 2, 4):
            d = c ^ axis
            if d in index and c < d:
                edges.append((index[c], index[d]))
    color_a = {index[c] for c in corners if c.bit_count() % 2 == 0}
    return TwoColorableGraph.build(7, edges, color_a=color_a, spec="steane7")


def build_graph(spec: str) -> TwoColorableGraph:
    """Build a graph from the flat spec mini-language.

    Supported: ``ghz:N``, ``chain:N[:closed]``, ``grid:CxR[:wrapx][:wrapy]``,
    ``gnk:N,k``, ``steane7``, ``file:PATH``.
    """
    parts = spec.strip().split(":")
    family = parts[0]
    try:
        if family == "ghz":
            return ghz_graph(int(parts[1]))
        if family == "chain":
            closed = len(parts) > 2 and parts[2] == "closed"
            return chain_graph(int(parts[1]), closed=closed)
        if family == "grid":
            cols, rows = (int(t) for t in parts[1].split("x"))
            flags = set(parts[2:])
            unknown = flags - {"wrapx", "wrapy"}
            if unknown:
                raise GraphFormatError(f"unknown grid flags {sorted(unknown)}")
            return grid_graph(cols, rows, wrap_x="wrapx" in flags, wrap_y="wrapy" in flags)
        if family == "gnk":
            n, k = (int(t) for t in parts[1].split(","))
            return gnk_graph(n, k)
        if family == "steane7":
            return steane7_graph()
        if family == "file":
            return read_edge_list(spec[len("file:") :])
    except (IndexError, ValueError) as exc:
        if isinstance(exc, GraphFormatError):
            raise
        raise GraphFormatError(f"malformed graph spec {spec!r}: {exc}") from exc
    raise GraphFormatError(f"unknown graph family {family!r}")


# -- edge-list text format ----------------------------------------------------


def parse_edge_list(text: str, spec: str = "file") -> TwoColorableGraph:
    """Parse the edge-list text format.

    First non-blank line is ``n <count>``, then one ``a b`` pair per line,
    optionally followed by ``colorA: i j k ...``.  Errors carry line numbers.
    """
    n = None
    edges: list[tuple[int, int]] = []
    color_a: Optional[set[int]] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            fields = line.split()
            if len(fields) != 2 or fields[0] != "n":
                raise GraphFormatError(f"line {lineno}: expected 'n <count>', got {raw!r}")
            try:
                n = int(fields[1])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: vertex count is not an integer") from None
            continue
        if line.startswith("colorA:"):
            try:
                color_a = {int(t) for t in line[len("colorA:") :].split()}
            except ValueError:
                raise GraphFormatError(f"line {lineno}: malformed colorA line") from None
            continue
        fields = line.split()
        if len(fields) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'a b' edge, got {raw!r}")
        try:
            a, b = int(fields[0]), int(fields[1])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: edge endpoints are not integers") from None
        edges.append((a, b))
    if n is None:
        raise GraphFormatError("empty edge-list input")
    try:
        return TwoColorableGraph.build(n, edges, color_a=color_a, spec=spec)
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from exc


def read_edge_list(path: str) -> TwoColorableGraph:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_edge_list(handle.read(), spec=f"file:{path}")


def write_edge_list(graph: TwoColorableGraph) -> str:
    lines = [f"n {graph.n}"]
    lines += [f"{a} {b}" for a, b in graph.edges]
    lines.append("colorA: " + " ".join(str(v) for v in sorted(graph.color_a)))
    return "\n".join(lines) + "\n"
