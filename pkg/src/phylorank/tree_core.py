"""Rooted phylogenetic trees: data model, Newick I/O and structural queries.

Vertices are dense integer ids ``0..n_vertices-1``.  The edge above a
vertex carries that vertex's length, so lengths are indexed by the child
end of every edge.  Trees are immutable after construction.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "ALPHA",
    "BETA",
    "NewickError",
    "TreeError",
    "UnknownVertexError",
    "StatesError",
    "PhyloTree",
    "RankFunction",
    "VertexStats",
    "parse_newick",
    "parse_newick_many",
    "read_newick_file",
    "write_newick",
    "topology_key",
    "isomorphic",
    "lambda_values",
    "mrca",
    "path_to_root",
    "subtree_at",
    "prune_to_leafset",
    "collapse_clade",
    "is_rank_function",
    "read_states",
    "resolve_vertex",
]

ALPHA = "alpha"
BETA = "beta"

# interior vertex id -> rank in 1..|interior|
RankFunction = dict[int, int]


class TreeError(ValueError):
    """Structural problem with a tree (cycle, unary vertex, duplicate label...)."""


class NewickError(TreeError):
    """Malformed Newick text.

    Attributes
    ----------
    offset : int
        Byte offset (UTF-8) of the offending character.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownVertexError(KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else "unknown vertex"


class StatesError(ValueError):
    """Missing or malformed leaf states."""


class PhyloTree:
    """Immutable rooted tree with labelled leaves.

    Parameters
    ----------
    children : sequence of sequences of int
        ``children[v]`` lists the child ids of vertex ``v``.
    root : int
        Id of the root vertex.
    labels : sequence of str or None
        One entry per vertex.  Leaves must be labelled; interior labels
        are optional.
    lengths : sequence of float or None, optional
        Length of the edge above each vertex.  The root entry is ignored.
    """

    def __init__(
        self,
        children: Sequence[Sequence[int]],
        root: int,
        labels: Sequence[str | None],
        lengths: Sequence[float | None] | None = None,
    ):
        nv = len(children)
        if len(labels) != nv:
            raise TreeError("labels must have one entry per vertex")
        if not 0 <= root < nv:
            raise TreeError(f"root id {root} out of range")
        parent = [-2] * nv
        parent[root] = -1
        for v, kids in enumerate(children):
            if len(kids) == 1:
                raise TreeError(f"vertex {v} has out-degree 1")
            for c in kids:
                if not 0 <= c < nv:
                    raise TreeError(f"child id {c} out of range")
                if c == root or parent[c] != -2:
                    raise TreeError(f"vertex {c} has more than one parent")
                parent[c] = v
        if any(p == -2 for p in parent):
            raise TreeError("tree is not connected")

        # reachability from the root also rules out cycles
        seen = 0
        stack = [root]
        while stack:
            v = stack.pop()
            seen += 1
            stack.extend(children[v])
        if seen != nv:
            raise TreeError("tree contains a cycle or unreachable vertices")

        leaf_labels = set()
        for v in range(nv):
            if not children[v]:
                lab = labels[v]
                if not lab:
                    raise TreeError(f"leaf {v} has no label")
                if lab in leaf_labels:
                    raise TreeError(f"duplicate leaf label {lab!r}")
                leaf_labels.add(lab)

        if lengths is not None:
            if len(lengths) != nv:
                raise TreeError("lengths must have one entry per vertex")
            clean: list[float | None] = []
            for v, x in enumerate(lengths):
                if x is None:
                    clean.append(None)
                    continue
                x = float(x)
                if not math.isfinite(x) or x < 0:
                    raise TreeError(f"edge length above vertex {v} must be finite and >= 0, got {x}")
                clean.append(x)
            self._lengths: tuple[float | None, ...] | None = tuple(clean)
        else:
            self._lengths = None

        self._children = tuple(tuple(k) for k in children)
        self._parent = tuple(parent)
        self._root = root
        self._labels = tuple(labels)

    # basic accessors -------------------------------------------------
    @property
    def root(self) -> int:
        return self._root

    @property
    def n_vertices(self) -> int:
        return len(self._children)

    def children(self, v: int) -> tuple[int, ...]:
        return self._children[v]

    def parent(self, v: int) -> int:
        """Parent id, or -1 for the root."""
        return self._parent[v]

    def label(self, v: int) -> str | None:
        return self._labels[v]

    def length(self, v: int) -> float | None:
        """Length of the edge above ``v`` (``None`` when absent)."""
        if self._lengths is None or v == self._root:
            return None
        return self._lengths[v]

    def is_leaf(self, v: int) -> bool:
        return not self._children[v]

    @cached_property
    def has_lengths(self) -> bool:
        """True when every non-root vertex carries an edge length."""
        if self._lengths is None:
            return False
        return all(self._lengths[v] is not None for v in range(self.n_vertices) if v != self._root)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in self.preorder() if not self._children[v])

    @cached_property
    def interior(self) -> tuple[int, ...]:
        return tuple(v for v in self.preorder() if self._children[v])

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @cached_property
    def is_binary(self) -> bool:
        return all(len(self._children[v]) == 2 for v in self.interior)

    @cached_property
    def leaf_labels(self) -> tuple[str, ...]:
        return tuple(self._labels[v] for v in self.leaves)  # type: ignore[misc]

    @cached_property
    def _leaf_index(self) -> dict[str, int]:
        return {self._labels[v]: v for v in self.leaves}  # type: ignore[misc]

    def leaf_id(self, label: str) -> int:
        try:
            return self._leaf_index[label]
        except KeyError:
            raise UnknownVertexError(f"no leaf labelled {label!r}") from None

    # traversals --------------------------------------------------------
    def preorder(self, start: int | None = None) -> Iterator[int]:
        stack = [self._root if start is None else start]
        ch = self._children
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(ch[v]))

    def postorder(self, start: int | None = None) -> list[int]:
        order = list(self.preorder(start))
        order.reverse()
        return order

    @cached_property
    def depths(self) -> tuple[int, ...]:
        """Number of edges between each vertex and the root."""
        d = [0] * self.n_vertices
        for v in self.preorder():
            p = self._parent[v]
            if p >= 0:
                d[v] = d[p] + 1
        return tuple(d)

    @cached_property
    def interior_counts(self) -> tuple[int, ...]:
        """Interior vertices in each clade, the clade root included (0 for leaves)."""
        cnt = [0] * self.n_vertices
        for v in self.postorder():
            kids = self._children[v]
            if kids:
                cnt[v] = 1 + sum(cnt[c] for c in kids)
        return tuple(cnt)

    @cached_property
    def leaf_counts(self) -> tuple[int, ...]:
        cnt = [0] * self.n_vertices
        for v in self.postorder():
            kids = self._children[v]
            cnt[v] = sum(cnt[c] for c in kids) if kids else 1
        return tuple(cnt)

    @cached_property
    def _min_label(self) -> tuple[str, ...]:
        out: list[str] = [""] * self.n_vertices
        for v in self.postorder():
            kids = self._children[v]
            out[v] = min(out[c] for c in kids) if kids else self._labels[v]  # type: ignore[assignment]
        return tuple(out)

    def clade_leaves(self, v: int) -> frozenset[str]:
        return frozenset(self._labels[w] for w in self.preorder(v) if not self._children[w])  # type: ignore[misc]

    def clade_key(self, v: int) -> str:
        """Canonical clade string: sorted leaf labels joined by commas."""
        return ",".join(sorted(self.clade_leaves(v)))

    @cached_property
    def _clade_index(self) -> dict[str, int]:
        return {self.clade_key(v): v for v in range(self.n_vertices)}

    def find_clade(self, key: str) -> int:
        labels = sorted(s.strip() for s in key.split(","))
        try:
            return self._clade_index[",".join(labels)]
        except KeyError:
            raise UnknownVertexError(f"no clade with leaf set {{{', '.join(labels)}}}") from None

    def find_interior_label(self, label: str) -> int:
        for v in self.interior:
            if self._labels[v] == label:
                return v
        raise UnknownVertexError(f"no interior vertex labelled {label!r}")

    def sorted_children(self, v: int) -> tuple[int, ...]:
        """Children ordered by the smallest leaf label in their clades."""
        ml = self._min_label
        return tuple(sorted(self._children[v], key=lambda c: ml[c]))

    def edges(self) -> list[tuple[int, int]]:
        """All (parent, child) pairs in preorder of the child."""
        return [(self._parent[v], v) for v in self.preorder() if v != self._root]

    def interior_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v in self.edges() if self._children[v]]

    def __repr__(self) -> str:
        return f"PhyloTree({write_newick(self)!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PhyloTree):
            return NotImplemented
        return write_newick(self) == write_newick(other)

    def __hash__(self) -> int:
        return hash(write_newick(self))


@dataclass(frozen=True)
class VertexStats:
    """Per-interior-vertex ``lambda`` values (interior descendants, self included)."""

    lam: Mapping[int, int]

    @property
    def product(self) -> int:
        return math.prod(self.lam.values())


# --------------------------------------------------------------------------
# Newick


_SPECIAL = set("()[]':;,")


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _NewickReader:
    def __init__(self, text: str, pos: int = 0):
        self.text = text
        self.pos = pos
        self.children: list[list[int]] = []
        self.labels: list[str | None] = []
        self.lengths: list[float | None] = []
        self.saw_length = False

    def fail(self, message: str, pos: int | None = None) -> None:
        raise NewickError(message, _byte_offset(self.text, self.pos if pos is None else pos))

    def skip(self) -> None:
        text, n = self.text, len(self.text)
        i = self.pos
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
            elif c == "[":
                j = text.find("]", i + 1)
                if j < 0:
                    self.fail("unterminated comment", i)
                i = j + 1
            else:
                break
        self.pos = i

    def read_label(self) -> str | None:
        self.skip()
        text, n = self.text, len(self.text)
        i = self.pos
        if i < n and text[i] == "'":
            out = []
            i += 1
            while True:
                if i >= n:
                    self.fail("unterminated quoted label", self.pos)
                if text[i] == "'":
                    if i + 1 < n and text[i + 1] == "'":
                        out.append("'")
                        i += 2
                        continue
                    i += 1
                    break
                out.append(text[i])
                i += 1
            self.pos = i
            return "".join(out)
        j = i
        while j < n and text[j] not in _SPECIAL and not text[j].isspace():
            j += 1
        self.pos = j
        return text[i:j] or None

    def read_length(self) -> float | None:
        self.skip()
        if self.pos < len(self.text) and self.text[self.pos] == ":":
            self.pos += 1
            self.skip()
            start = self.pos
            raw = self.read_label()
            if raw is None:
                self.fail("missing branch length after ':'", start)
            try:
                x = float(raw)
            except ValueError:
                self.fail(f"invalid branch length {raw!r}", start)
            if not math.isfinite(x) or x < 0:
                self.fail(f"branch length must be finite and non-negative, got {raw!r}", start)
            self.saw_length = True
            return x
        return None

    def new_vertex(self, parent: int | None) -> int:
        v = len(self.children)
        self.children.append([])
        self.labels.append(None)
        self.lengths.append(None)
        if parent is not None:
            self.children[parent].append(v)
        return v

    def read_tree(self) -> PhyloTree:
        text, n = self.text, len(self.text)
        stack: list[int] = []
        expect_subtree = True
        root: int | None = None
        while True:
            self.skip()
            i = self.pos
            if expect_subtree:
                if i >= n:
                    self.fail("unexpected end of input")
                if text[i] == "(":
                    v = self.new_vertex(stack[-1] if stack else None)
                    stack.append(v)
                    self.pos += 1
                    continue
                label = self.read_label()
                if label is None:
                    self.fail("expected a leaf label or '('", i)
                v = self.new_vertex(stack[-1] if stack else None)
                self.labels[v] = label
                self.lengths[v] = self.read_length()
                expect_subtree = False
                if not stack:
                    root = v
                continue
            c = text[i] if i < n else ""
            if c == ",":
                if not stack:
                    self.fail("',' outside parentheses")
                self.pos += 1
                expect_subtree = True
            elif c == ")":
                if not stack:
                    self.fail("unbalanced ')'")
                v = stack.pop()
                self.pos += 1
                self.labels[v] = self.read_label()
                self.lengths[v] = self.read_length()
                if not stack:
                    root = v
            elif c == ";":
                if stack:
                    self.fail("unbalanced parentheses: missing ')'")
                self.pos += 1
                break
            elif not c:
                self.fail("missing ')'" if stack else "missing terminating ';'")
            else:
                self.fail(f"unexpected character {c!r}")
        assert root is not None
        for v, kids in enumerate(self.children):
            if len(kids) == 1:
                self.fail(f"vertex with a single child (label {self.labels[v]!r})")
        try:
            return PhyloTree(
                self.children,
                root,
                self.labels,
                self.lengths if self.saw_length else None,
            )
        except NewickError:
            raise
        except TreeError as exc:
            raise NewickError(str(exc), _byte_offset(self.text, self.pos)) from None


def parse_newick(text: str) -> PhyloTree:
    """Parse a single semicolon-terminated Newick tree.

    Branch lengths (``:<float>``), interior labels, single-quoted labels
    and ``[...]`` comments are accepted.

    Raises
    ------
    NewickError
        On malformed input, duplicate leaf labels or unary vertices.

    Examples
    --------
    >>> parse_newick("(A,B);").n_interior
    1
    """
    reader = _NewickReader(text)
    tree = reader.read_tree()
    reader.skip()
    if reader.pos != len(text):
        reader.fail("trailing characters after ';'")
    return tree


def parse_newick_many(text: str) -> list[PhyloTree]:
    """Parse every tree in a multi-tree Newick string."""
    out = []
    reader = _NewickReader(text)
    reader.skip()
    while reader.pos < len(text):
        sub = _NewickReader(text, reader.pos)
        out.append(sub.read_tree())
        reader.pos = sub.pos
        reader.skip()
    if not out:
        raise NewickError("no tree found", 0)
    return out


def read_newick_file(path: str | os.PathLike[str]) -> list[PhyloTree]:
    with open(path, encoding="utf-8") as fh:
        return parse_newick_many(fh.read())


def _quote(label: str) -> str:
    if any(c in _SPECIAL or c.isspace() for c in label):
        return "'" + label.replace("'", "''") + "'"
    return label


def _fmt_length(x: float) -> str:
    return format(x, ".12g")


def write_newick(t: PhyloTree, *, lengths: bool = True, interior_labels: bool = True) -> str:
    """Serialize with children ordered by their smallest leaf label.

    Lengths are written to 12 significant digits.  The output is a
    canonical form: isomorphic trees give identical strings.
    """
    parts: list[str] = []
    # explicit stack: ("open", v) expands a vertex, other entries are literal text
    stack: list[tuple[str, object]] = [("v", t.root)]
    while stack:
        kind, item = stack.pop()
        if kind == "s":
            parts.append(item)  # type: ignore[arg-type]
            continue
        v = item  # type: ignore[assignment]
        tail = ""
        lab = t.label(v)
        if lab and (t.is_leaf(v) or interior_labels):
            tail += _quote(lab)
        ln = t.length(v)
        if lengths and ln is not None:
            tail += ":" + _fmt_length(ln)
        if t.is_leaf(v):
            parts.append(tail)
            continue
        kids = t.sorted_children(v)
        stack.append(("s", ")" + tail))
        for k, c in enumerate(reversed(kids)):
            stack.append(("v", c))
            if k < len(kids) - 1:
                stack.append(("s", ","))
        stack.append(("s", "("))
    return "".join(parts) + ";"


def topology_key(t: PhyloTree) -> str:
    """Leaf-labelled topology as a canonical string (no lengths or interior labels)."""
    return write_newick(t, lengths=False, interior_labels=False)


def isomorphic(a: PhyloTree, b: PhyloTree, *, lengths: bool = False) -> bool:
    """Label-preserving isomorphism; with ``lengths`` also compares 12-digit lengths."""
    return write_newick(a, lengths=lengths, interior_labels=False) == write_newick(
        b, lengths=lengths, interior_labels=False
    )


# --------------------------------------------------------------------------
# structural queries


def lambda_values(t: PhyloTree) -> VertexStats:
    """``lambda_v`` for every interior vertex: interior descendants plus ``v`` itself."""
    cnt = t.interior_counts
    return VertexStats({v: cnt[v] for v in t.interior})


def _check_vertex(t: PhyloTree, v: int) -> None:
    if not isinstance(v, int) or not 0 <= v < t.n_vertices:
        raise UnknownVertexError(f"vertex id {v!r} not in tree")


def path_to_root(t: PhyloTree, v: int) -> list[int]:
    """Vertices from ``v`` up to and including the root."""
    _check_vertex(t, v)
    out = [v]
    while t.parent(out[-1]) >= 0:
        out.append(t.parent(out[-1]))
    return out


def mrca(t: PhyloTree, u: int, v: int) -> int:
    """Most recent common ancestor of ``u`` and ``v`` (a vertex is its own ancestor)."""
    _check_vertex(t, u)
    _check_vertex(t, v)
    d = t.depths
    while d[u] > d[v]:
        u = t.parent(u)
    while d[v] > d[u]:
        v = t.parent(v)
    while u != v:
        u, v = t.parent(u), t.parent(v)
    return u


def _restrict(
    t: PhyloTree, keep: set[int], replace: Mapping[int, str] | None = None
) -> tuple[PhyloTree, dict[int, int]]:
    """Induced subtree on the leaves in ``keep`` with unary vertices suppressed.

    ``replace`` maps vertices to labels; such a vertex becomes a leaf and
    its clade is dropped.  Returns the tree and a map old id -> new id for
    every vertex that survives.
    """
    replace = replace or {}
    children: list[list[int]] = []
    labels: list[str | None] = []
    lens: list[float | None] = []
    has_len = t._lengths is not None
    # rep[v] = (new id, accumulated length above it) for the restricted clade of v
    rep: dict[int, tuple[int, float | None]] = {}
    idmap: dict[int, int] = {}

    def add(label: str | None, kids: list[int]) -> int:
        children.append(kids)
        labels.append(label)
        lens.append(None)
        return len(children) - 1

    def plus(a: float | None, b: float | None) -> float | None:
        if a is None or b is None:
            return None
        return a + b

    order: list[int] = []
    stack = [t.root]
    while stack:
        v = stack.pop()
        order.append(v)
        if v not in replace:
            stack.extend(t.children(v))
    for v in reversed(order):
        own = t.length(v) if has_len else None
        if v in replace:
            nid = add(replace[v], [])
            rep[v] = (nid, own)
            idmap[v] = nid
            continue
        if t.is_leaf(v):
            if v in keep:
                nid = add(t.label(v), [])
                rep[v] = (nid, own)
                idmap[v] = nid
            continue
        kept = [rep[c] for c in t.children(v) if c in rep]
        if not kept:
            continue
        if len(kept) == 1:
            nid, acc = kept[0]
            rep[v] = (nid, plus(acc, own) if v != t.root else acc)
            continue
        ids = []
        for nid, acc in kept:
            lens[nid] = acc
            ids.append(nid)
        nid = add(t.label(v), ids)
        rep[v] = (nid, own)
        idmap[v] = nid
    if t.root not in rep:
        raise UnknownVertexError("no leaves selected")
    new_root = rep[t.root][0]
    lens[new_root] = None
    return PhyloTree(children, new_root, labels, lens if has_len else None), idmap


def subtree_at(t: PhyloTree, v: int, *, with_map: bool = False):
    """The clade rooted at ``v`` as a standalone tree.

    With ``with_map=True`` also return the old-id -> new-id mapping.
    """
    _check_vertex(t, v)
    keep = {w for w in t.preorder(v) if t.is_leaf(w)}
    sub, idmap = _restrict(t, keep)
    return (sub, idmap) if with_map else sub


def prune_to_leafset(t: PhyloTree, labels: Iterable[str], *, with_map: bool = False):
    """Restrict to a set of leaf labels, suppressing vertices left with one child.

    Lengths of merged edges are added.  The root of the result is the
    most recent common ancestor of the kept leaves.
    """
    keep = {t.leaf_id(lab) for lab in labels}
    if not keep:
        raise UnknownVertexError("no leaves selected")
    sub, idmap = _restrict(t, keep)
    return (sub, idmap) if with_map else sub


def collapse_clade(t: PhyloTree, v: int, label: str | None = None, *, with_map: bool = False):
    """Replace the clade below ``v`` by a single leaf.

    The new leaf keeps the edge length above ``v``.  Its label defaults to
    a string not used by any other leaf.
    """
    _check_vertex(t, v)
    if v == t.root:
        raise TreeError("cannot collapse the root clade")
    if label is None:
        used = set(t.leaf_labels)
        label = "_collapsed"
        while label in used:
            label += "_"
    keep = set(t.leaves)
    sub, idmap = _restrict(t, keep, {v: label})
    return (sub, idmap) if with_map else sub


def is_rank_function(t: PhyloTree, r: Mapping[int, int]) -> bool:
    """True when ``r`` is a bijection onto ``1..|interior|`` increasing away from the root."""
    interior = t.interior
    if set(r) != set(interior) or sorted(r.values()) != list(range(1, len(interior) + 1)):
        return False
    return all(r[t.parent(v)] < r[v] for v in interior if v != t.root)


def resolve_vertex(t: PhyloTree, spec: str) -> int:
    """Find a vertex by interior label, leaf label, or comma-joined clade leaf set."""
    spec = spec.strip()
    for v in t.interior:
        if t.label(v) == spec:
            return v
    if "," not in spec and spec in t._leaf_index:
        return t._leaf_index[spec]
    return t.find_clade(spec)


def read_states(source: str | os.PathLike[str], *, is_text: bool = False) -> dict[str, str]:
    """Read a two-column ``label<TAB>alpha|beta`` file.

    Blank lines and lines starting with ``#`` are skipped.
    """
    if is_text:
        text = str(source)
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise StatesError(f"line {lineno}: expected '<label>\\t<alpha|beta>'")
        label, state = parts[0].strip(), parts[1].strip().lower()
        if state not in (ALPHA, BETA):
            raise StatesError(f"line {lineno}: state must be 'alpha' or 'beta', got {parts[1]!r}")
        if label in out:
            raise StatesError(f"line {lineno}: duplicate label {label!r}")
        out[label] = state
    return out
