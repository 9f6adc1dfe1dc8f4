import numpy as np
import pytest
from hypothesis import given, strategies as st

from zsx.catalog import Descriptor, Label, LabelCatalog
from zsx.errors import (
    ConfigError,
    EmptyInputError,
    MissingScoreError,
    RemoteProviderError,
    ScoreRangeError,
)
from zsx.scoring import (
    EmbeddingCosineProvider,
    MembershipRanking,
    NliFileProvider,
    NliRemoteProvider,
    RankedItem,
    centroid_ranking,
    nli_scores,
    predict_labels,
    rank_text,
    sorted_descriptors,
    topk_centroid_ranking,
)
from zsx.vectors import VectorTable


def catalog_of(*rows):
    label_ids = []
    for _, label_id in rows:
        if label_id not in label_ids:
            label_ids.append(label_id)
    return LabelCatalog(
        labels=tuple(Label(l, l) for l in label_ids),
        descriptors=tuple(Descriptor(text, label_id, "DH") for text, label_id in rows),
    )


@pytest.fixture
def axis_table():
    return VectorTable(
        dim=2,
        entries={
            "sad": np.array([1.0, 0.0]),
            "sleep": np.array([0.0, 1.0]),
            "anti": np.array([-1.0, 0.0]),
        },
    )


class TestSortedDescriptors:
    def test_toy_cosine_order(self, axis_table):
        cat = catalog_of(("sad", "l_mood"), ("sleep", "l_sleep"))
        provider = EmbeddingCosineProvider(axis_table)
        ranking = sorted_descriptors("sad", cat, provider)
        assert [(i.descriptor, i.label_id) for i in ranking.items] == [
            ("sad", "l_mood"),
            ("sleep", "l_sleep"),
        ]
        assert ranking.items[0].score == pytest.approx(1.0)
        assert ranking.items[1].score == pytest.approx(0.0)

    def test_single_descriptor(self, axis_table):
        cat = catalog_of(("sleep", "l_sleep"),)
        ranking = sorted_descriptors("sad", cat, EmbeddingCosineProvider(axis_table))
        assert len(ranking) == 1

    def test_file_scores_sorted(self, tmp_path):
        f = tmp_path / "scores.tsv"
        f.write_text("t1\td1\t0.2\nt1\td2\t0.9\n")
        cat = catalog_of(("d1", "a"), ("d2", "b"))
        ranking = sorted_descriptors("whatever", cat, NliFileProvider(f), text_id="t1")
        assert [i.descriptor for i in ranking.items] == ["d2", "d1"]

    def test_tie_breaks_lexicographic(self, axis_table):
        cat = catalog_of(("sad", "l_b"), ("sad", "l_a"))
        ranking = sorted_descriptors("sad", cat, EmbeddingCosineProvider(axis_table))
        assert [i.label_id for i in ranking.items] == ["l_a", "l_b"]

    def test_deterministic(self, axis_table):
        cat = catalog_of(("sad", "x"), ("sleep", "y"), ("anti", "z"))
        provider = EmbeddingCosineProvider(axis_table)
        a = sorted_descriptors("sad sleep", cat, provider)
        b = sorted_descriptors("sad sleep", cat, provider)
        assert a == b


class TestPredictLabels:
    def ranking(self, *triples):
        return MembershipRanking(
            items=tuple(RankedItem(d, l, s) for d, l, s in triples),
            text_ref="t",
            score_kind="probability",
        )

    def test_duplicate_labels_collapse(self):
        r = self.ranking(("d1", "l_a", 0.9), ("d2", "l_a", 0.8), ("d3", "l_b", 0.7))
        assert predict_labels(r, 2).label_ids == ("l_a",)

    def test_k3_reaches_second_label(self):
        r = self.ranking(("d1", "l_a", 0.9), ("d2", "l_a", 0.8), ("d3", "l_b", 0.7))
        pred = predict_labels(r, 3)
        assert pred.label_ids == ("l_a", "l_b")
        assert pred.per_label_best_score == {"l_a": 0.9, "l_b": 0.7}

    def test_k1_top_label(self):
        r = self.ranking(("d1", "l_a", 0.9), ("d3", "l_b", 0.7))
        assert predict_labels(r, 1).label_ids == ("l_a",)

    def test_k_beyond_length(self):
        r = self.ranking(("d1", "l_a", 0.9), ("d3", "l_b", 0.7))
        assert predict_labels(r, 99).label_ids == ("l_a", "l_b")

    def test_empty_ranking_errors(self):
        r = MembershipRanking(items=(), text_ref="t", score_kind="cosine")
        with pytest.raises(EmptyInputError):
            predict_labels(r, 1)

    def test_k_zero_rejected(self):
        r = self.ranking(("d1", "l_a", 0.9))
        with pytest.raises(ConfigError):
            predict_labels(r, 0)

    @given(
        st.lists(
            st.tuples(st.sampled_from("abcde"), st.floats(0, 1)),
            min_size=1,
            max_size=20,
        )
    )
    def test_monotone_label_accumulation(self, pairs):
        items = sorted(
            (RankedItem("d%d" % i, "l_%s" % lab, round(s, 6)) for i, (lab, s) in enumerate(pairs)),
            key=lambda it: (-it.score, it.label_id, it.descriptor),
        )
        ranking = MembershipRanking(tuple(items), "t", "probability")
        previous: set = set()
        for k in range(1, len(items) + 2):
            current = set(predict_labels(ranking, k).label_ids)
            assert previous <= current
            previous = current


class TestCentroid:
    def test_single_descriptor_equals_direct(self, axis_table):
        cat = catalog_of(("sad", "l_mood"), ("sleep", "l_sleep"))
        provider = EmbeddingCosineProvider(axis_table)
        direct = sorted_descriptors("sad", cat, provider)
        cent = centroid_ranking("sad", cat, axis_table)
        assert [i.label_id for i in cent.items] == [i.label_id for i in direct.items]
        for d, c in zip(direct.items, cent.items):
            assert c.score == pytest.approx(d.score)

    def test_two_descriptor_mean(self, axis_table):
        cat = catalog_of(("sad", "l"), ("sleep", "l"))
        ranking = centroid_ranking("sad", cat, axis_table)
        assert ranking.items[0].score == pytest.approx(0.7071, abs=1e-4)

    def test_tie_breaks_by_label_id(self, axis_table):
        cat = catalog_of(("sad", "l_b"), ("sad", "l_a"))
        ranking = centroid_ranking("sad", cat, axis_table)
        assert [i.label_id for i in ranking.items] == ["l_a", "l_b"]

    def test_unrepresentable_label_dropped(self, axis_table):
        cat = catalog_of(("sad", "l_mood"), ("zzz", "l_ghost"))
        ranking = centroid_ranking("sad", cat, axis_table)
        assert [i.label_id for i in ranking.items] == ["l_mood"]


class TestTopkCentroid:
    def test_k_at_least_size_equals_centroid(self, axis_table):
        cat = catalog_of(("sad", "l"), ("sleep", "l"))
        full = centroid_ranking("sad", cat, axis_table)
        topk = topk_centroid_ranking("sad", cat, axis_table, k_desc=5)
        assert topk.items[0].score == pytest.approx(full.items[0].score)

    def test_k1_takes_nearest(self, axis_table):
        cat = catalog_of(("sad", "l"), ("sleep", "l"))
        topk = topk_centroid_ranking("sad", cat, axis_table, k_desc=1)
        assert topk.items[0].score == pytest.approx(1.0)

    def test_three_descriptor_example(self, axis_table):
        cat = catalog_of(("sad", "l"), ("sleep", "l"), ("anti", "l"))
        topk = topk_centroid_ranking("sad", cat, axis_table, k_desc=2)
        assert topk.items[0].score == pytest.approx(0.7071, abs=1e-4)

    def test_k_desc_validated(self, axis_table):
        cat = catalog_of(("sad", "l"),)
        with pytest.raises(ConfigError):
            topk_centroid_ranking("sad", cat, axis_table, k_desc=0)


class TestFullCut:
    def test_k_all_descriptors_reaches_every_label(self, axis_table):
        cat = catalog_of(("sad", "l_mood"), ("sleep", "l_sleep"), ("anti", "l_anti"))
        provider = EmbeddingCosineProvider(axis_table)
        ranking = sorted_descriptors("sad sleep", cat, provider)
        pred = predict_labels(ranking, len(ranking))
        assert set(pred.label_ids) == {"l_mood", "l_sleep", "l_anti"}


class TestScaleInvariance:
    def test_order_stable_under_positive_scaling(self):
        rng = np.random.default_rng(11)
        vecs = {"t%d" % i: rng.normal(size=3) for i in range(8)}
        cat = catalog_of(*[("t%d" % i, "l%d" % (i % 3)) for i in range(8)])
        base = VectorTable(dim=3, entries=vecs)
        scaled = VectorTable(dim=3, entries={k: 7.5 * v for k, v in vecs.items()})
        r1 = sorted_descriptors("t0 t3", cat, EmbeddingCosineProvider(base))
        r2 = sorted_descriptors("t0 t3", cat, EmbeddingCosineProvider(scaled))
        assert [i.descriptor for i in r1.items] == [i.descriptor for i in r2.items]


class TestSingleDescriptorStrategiesAgree:
    def test_all_strategies_same_order(self, axis_table):
        cat = catalog_of(("sad", "l_mood"), ("sleep", "l_sleep"))
        provider = EmbeddingCosineProvider(axis_table)
        orders = []
        for strategy, k_desc in (("direct", None), ("centroid", None), ("centroid-topk", 2)):
            ranking = rank_text("sad sleep sad", cat, provider, strategy, k_desc=k_desc)
            orders.append([i.label_id for i in ranking.items])
        assert orders[0] == orders[1] == orders[2]


class TestNliFileProvider:
    def test_echoes_file(self, tmp_path):
        f = tmp_path / "s.tsv"
        f.write_text("t1\tInsomnia\t0.83\n")
        provider = NliFileProvider(f)
        assert nli_scores("some text", ["Insomnia"], provider, text_id="t1") == {
            "Insomnia": 0.83
        }

    def test_missing_pair_named(self, tmp_path):
        f = tmp_path / "s.tsv"
        f.write_text("t1\tInsomnia\t0.83\n")
        with pytest.raises(MissingScoreError, match="t9.*Gloom"):
            NliFileProvider(f).scores("x", ["Gloom"], text_id="t9")

    def test_out_of_range_rejected(self, tmp_path):
        f = tmp_path / "s.tsv"
        f.write_text("t1\tInsomnia\t1.2\n")
        with pytest.raises(ScoreRangeError):
            NliFileProvider(f)

    def test_duplicate_pair_rejected(self, tmp_path):
        f = tmp_path / "s.tsv"
        f.write_text("t1\td\t0.5\nt1\td\t0.6\n")
        with pytest.raises(MissingScoreError):
            NliFileProvider(f)

    def test_keys_by_raw_text_without_id(self, tmp_path):
        f = tmp_path / "s.tsv"
        f.write_text("no one\tGloom\t0.4\n")
        assert NliFileProvider(f).scores("no one", ["Gloom"]) == [0.4]


class FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload

    def json(self):
        if self._payload is None:
            raise ValueError("no body")
        return self._payload


class FakeSession:
    def __init__(self, response):
        self.response = response
        self.requests = []

    def post(self, url, json=None, timeout=None):
        self.requests.append((url, json, timeout))
        return self.response


class TestNliRemoteProvider:
    def test_scores_aligned(self):
        session = FakeSession(FakeResponse(payload={"scores": [0.9, 0.1]}))
        provider = NliRemoteProvider("http://svc:1234", session=session)
        assert provider.scores("text", ["a", "b"]) == [0.9, 0.1]
        url, body, timeout = session.requests[0]
        assert url == "http://svc:1234/score"
        assert body == {"premise": "text", "hypotheses": ["a", "b"]}
        assert timeout == 30.0

    def test_non_200_errors(self):
        provider = NliRemoteProvider("http://svc", session=FakeSession(FakeResponse(500)))
        with pytest.raises(RemoteProviderError):
            provider.scores("t", ["a"])

    def test_out_of_range_rejected(self):
        session = FakeSession(FakeResponse(payload={"scores": [1.2]}))
        provider = NliRemoteProvider("http://svc", session=session)
        with pytest.raises(ScoreRangeError):
            provider.scores("t", ["a"])

    def test_malformed_body_errors(self):
        session = FakeSession(FakeResponse(payload={"nope": True}))
        provider = NliRemoteProvider("http://svc", session=session)
        with pytest.raises(RemoteProviderError):
            provider.scores("t", ["a"])

    def test_length_mismatch_errors(self):
        session = FakeSession(FakeResponse(payload={"scores": [0.5]}))
        provider = NliRemoteProvider("http://svc", session=session)
        with pytest.raises(RemoteProviderError):
            provider.scores("t", ["a", "b"])

    def test_url_from_env(self, monkeypatch):
        monkeypatch.setenv("ZSX_NLI_URL", "http://envhost:9")
        provider = NliRemoteProvider(session=FakeSession(FakeResponse(payload={"scores": []})))
        assert provider.base_url == "http://envhost:9"

    def test_missing_url_rejected(self, monkeypatch):
        monkeypatch.delenv("ZSX_NLI_URL", raising=False)
        with pytest.raises(ConfigError):
            NliRemoteProvider()
