"""Bracketed constituency trees: parsing, validation, and node spans.

Trees arrive as balanced-parenthesis text, ``(TAG child child ...)``, where
a child is either another bracketed node or a bare leaf token. Node spans
are enumerated breadth-first, siblings left to right, so shallow phrases
come before their parts.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import ceil
from typing import Iterable

from .errors import LeafMismatchError, TreeFormatError
from .vectors import TokenSequence, strip_edge_punctuation


@dataclass(frozen=True)
class Node:
    """Internal node (tag + children) or leaf (bare token); never both."""

    tag: str = ""
    children: tuple["Node", ...] = ()
    leaf_token: str | None = None

    def __post_init__(self):
        has_children = bool(self.children)
        has_leaf = self.leaf_token is not None
        if has_children == has_leaf:
            raise TreeFormatError("a node has children or a leaf token, never both")
        if has_leaf and not self.leaf_token:
            raise TreeFormatError("leaf token must be non-empty")

    @property
    def is_leaf(self) -> bool:
        return self.leaf_token is not None


@dataclass(frozen=True)
class SyntaxTree:
    root: Node

    def leaves(self) -> list[str]:
        """Leaf tokens in left-to-right order, as written."""
        out: list[str] = []

        def walk(node: Node):
            if node.is_leaf:
                out.append(node.leaf_token)
            else:
                for child in node.children:
                    walk(child)

        walk(self.root)
        return out


@dataclass(frozen=True)
class NodeSpan:
    """One node's contiguous leaf tokens with its breadth-first ordinal."""

    node_index: int
    tag: str
    tokens: tuple[str, ...]
    depth: int

    def text(self) -> str:
        return " ".join(self.tokens)


def parse_tree(s: str) -> SyntaxTree:
    """Parse bracketed tree text into a :class:`SyntaxTree`."""
    tokens = s.replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise TreeFormatError("empty tree text")
    pos = 0

    def parse_node() -> Node:
        nonlocal pos
        if tokens[pos] != "(":
            raise TreeFormatError("expected '(' at item %d" % pos)
        pos += 1
        if pos >= len(tokens) or tokens[pos] in ("(", ")"):
            raise TreeFormatError("node is missing its tag")
        tag = tokens[pos]
        pos += 1
        children: list[Node] = []
        while pos < len(tokens) and tokens[pos] != ")":
            if tokens[pos] == "(":
                children.append(parse_node())
            else:
                children.append(Node(leaf_token=tokens[pos]))
                pos += 1
        if pos >= len(tokens):
            raise TreeFormatError("unbalanced parentheses: missing ')'")
        pos += 1
        if not children:
            raise TreeFormatError("node %r has no children" % tag)
        return Node(tag=tag, children=tuple(children))

    root = parse_node()
    if pos != len(tokens):
        raise TreeFormatError("unbalanced parentheses: trailing content")
    return SyntaxTree(root=root)


def serialize(tree: SyntaxTree) -> str:
    def render(node: Node) -> str:
        if node.is_leaf:
            return node.leaf_token
        return "(%s %s)" % (node.tag, " ".join(render(c) for c in node.children))

    return render(tree.root)


def _normalized_leaves(node: Node) -> list[str]:
    # Lowercased leaves with punctuation-only leaves dropped, mirroring tokenize.
    out = []

    def walk(n: Node):
        if n.is_leaf:
            tok = n.leaf_token.lower()
            if strip_edge_punctuation(tok):
                out.append(tok)
        else:
            for child in n.children:
                walk(child)

    walk(node)
    return out


def validate_against(tree: SyntaxTree, tokens: TokenSequence | Iterable[str]) -> None:
    """Check that the tree's leaves equal the tokenization, in order.

    Leaves are lowercased and punctuation-only leaves ignored before the
    comparison. Raises :class:`LeafMismatchError` naming the first
    divergent position.
    """
    leaves = _normalized_leaves(tree.root)
    toks = list(tokens)
    for i, (leaf, tok) in enumerate(zip(leaves, toks)):
        if leaf != tok:
            raise LeafMismatchError(
                "leaf %r != token %r at position %d" % (leaf, tok, i)
            )
    if len(leaves) != len(toks):
        raise LeafMismatchError(
            "tree has %d leaves but text has %d tokens (diverge at position %d)"
            % (len(leaves), len(toks), min(len(leaves), len(toks)))
        )


def bfs_spans(tree: SyntaxTree) -> list[NodeSpan]:
    """Spans of all nodes in breadth-first, left-to-right order.

    The root span comes first and equals the whole text; leaves appear as
    single-token spans. Nodes whose leaves are punctuation-only are skipped.
    """
    spans: list[NodeSpan] = []
    queue: deque[tuple[Node, int]] = deque([(tree.root, 0)])
    index = 0
    while queue:
        node, depth = queue.popleft()
        toks = _normalized_leaves(node)
        if toks:
            spans.append(
                NodeSpan(
                    node_index=index,
                    tag="" if node.is_leaf else node.tag,
                    tokens=tuple(toks),
                    depth=depth,
                )
            )
            index += 1
        for child in node.children:
            queue.append((child, depth + 1))
    return spans


def fallback_tree(tokens: TokenSequence | Iterable[str]) -> SyntaxTree:
    """Balanced binary tree over the tokens for rows without a parse.

    Splits at ceil(n/2) recursively; internal nodes carry the tag "X".
    """
    toks = list(tokens)
    if not toks:
        raise TreeFormatError("cannot build a tree over zero tokens")

    def build(chunk: list[str]) -> Node:
        if len(chunk) == 1:
            return Node(leaf_token=chunk[0])
        mid = ceil(len(chunk) / 2)
        return Node(tag="X", children=(build(chunk[:mid]), build(chunk[mid:])))

    return SyntaxTree(root=build(toks))
