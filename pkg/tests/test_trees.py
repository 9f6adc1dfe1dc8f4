import pytest
from hypothesis import given, strategies as st

from zsx.errors import LeafMismatchError, TreeFormatError
from zsx.trees import (
    Node,
    bfs_spans,
    fallback_tree,
    parse_tree,
    serialize,
    validate_against,
)
from zsx.vectors import tokenize

token = st.text(alphabet="abcdefgh", min_size=1, max_size=5)
token_lists = st.lists(token, min_size=1, max_size=12)


class TestParse:
    def test_two_phrase_sentence(self):
        tree = parse_tree("(S (NP no one) (VP understands me))")
        assert tree.root.tag == "S"
        assert len(tree.root.children) == 2
        assert tree.leaves() == ["no", "one", "understands", "me"]

    def test_unbalanced_errors(self):
        with pytest.raises(TreeFormatError, match="paren"):
            parse_tree("(S (NP no one")

    def test_trailing_content_errors(self):
        with pytest.raises(TreeFormatError):
            parse_tree("(S a) (S b)")

    def test_single_leaf(self):
        tree = parse_tree("(S w1)")
        assert tree.leaves() == ["w1"]
        assert not tree.root.is_leaf

    def test_empty_node_errors(self):
        with pytest.raises(TreeFormatError):
            parse_tree("(S (NP) x)")

    def test_missing_tag_errors(self):
        with pytest.raises(TreeFormatError):
            parse_tree("(S ( x))")

    def test_round_trip(self):
        text = "(S (NP no one) (VP understands (NP me)))"
        assert serialize(parse_tree(serialize(parse_tree(text)))) == serialize(parse_tree(text))
        assert serialize(parse_tree(text)) == text

    def test_node_invariant(self):
        with pytest.raises(TreeFormatError):
            Node(tag="S", children=(), leaf_token=None)


class TestValidate:
    def test_exact_match_ok(self):
        tree = parse_tree("(S (NP no one))")
        validate_against(tree, tokenize("No one"))

    def test_mismatch_reports_position(self):
        tree = parse_tree("(S no one)")
        with pytest.raises(LeafMismatchError, match="position 1"):
            validate_against(tree, ["no", "ones"])

    def test_count_mismatch(self):
        tree = parse_tree("(S no one)")
        with pytest.raises(LeafMismatchError):
            validate_against(tree, ["no"])

    def test_punctuation_leaves_ignored(self):
        tree = parse_tree("(S (NP no one) (. .))")
        validate_against(tree, tokenize("No one."))

    def test_case_insensitive(self):
        tree = parse_tree("(S No One)")
        validate_against(tree, ["no", "one"])


class TestBfsSpans:
    def test_textbook_order(self):
        spans = bfs_spans(parse_tree("(S (A w1 w2) (B w3))"))
        assert [s.text() for s in spans] == ["w1 w2 w3", "w1 w2", "w3", "w1", "w2", "w3"]
        assert [s.tag for s in spans] == ["S", "A", "B", "", "", ""]
        assert [s.node_index for s in spans] == [0, 1, 2, 3, 4, 5]

    def test_single_leaf_tree(self):
        spans = bfs_spans(parse_tree("(S w1)"))
        assert [s.text() for s in spans] == ["w1", "w1"]

    def test_left_deep_trace(self):
        spans = bfs_spans(parse_tree("(S (A (B w1) w2) w3)"))
        assert [s.text() for s in spans] == ["w1 w2 w3", "w1 w2", "w3", "w1", "w2", "w1"]
        assert [s.depth for s in spans] == [0, 1, 1, 2, 2, 3]

    def test_depth_never_decreases(self):
        spans = bfs_spans(parse_tree("(S (A (B w1) w2) (C w3 (D w4)))"))
        depths = [s.depth for s in spans]
        assert depths == sorted(depths)

    @given(token_lists)
    def test_children_concatenate_to_parent(self, tokens):
        tree = fallback_tree(tokens)

        def check(node):
            if node.is_leaf:
                return [node.leaf_token]
            parts = []
            for child in node.children:
                parts.extend(check(child))
            return parts

        assert check(tree.root) == [t.lower() for t in tokens]

    @given(st.lists(token, min_size=2, max_size=16))
    def test_binary_tree_span_count(self, tokens):
        # a strictly binary tree over n leaves has 2n - 1 nodes
        spans = bfs_spans(fallback_tree(tokens))
        assert len(spans) == 2 * len(tokens) - 1


class TestFallback:
    def test_single_token_single_node(self):
        tree = fallback_tree(["w1"])
        assert tree.root.is_leaf
        assert bfs_spans(tree)[0].text() == "w1"

    def test_even_split(self):
        tree = fallback_tree(["w1", "w2", "w3", "w4"])
        left, right = tree.root.children
        assert bfs_spans(fallback_tree(["w1", "w2", "w3", "w4"]))[1].tokens == ("w1", "w2")
        assert [l.leaf_token for l in left.children] == ["w1", "w2"]
        assert [l.leaf_token for l in right.children] == ["w3", "w4"]

    def test_ceiling_split(self):
        tree = fallback_tree(["w1", "w2", "w3"])
        left, right = tree.root.children
        assert [n.leaf_token for n in left.children] == ["w1", "w2"]
        assert right.leaf_token == "w3"

    def test_internal_tag(self):
        assert fallback_tree(["a", "b"]).root.tag == "X"

    def test_empty_errors(self):
        with pytest.raises(TreeFormatError):
            fallback_tree([])
