import math
import random

import pytest

from natrank.masking import MaskSite
from natrank.metrics import (
    TokenScore,
    acc_score,
    conf_score,
    cos_score,
    score_record,
    token_scores,
)
from natrank.oracle import PredictionRecord


def rec(props, ref=("A.java", 1, 0), emb_orig=None, emb_pred=None):
    return PredictionRecord(
        variant_ref=ref,
        propositions=tuple(props),
        emb_orig=tuple(emb_orig) if emb_orig is not None else None,
        emb_pred=tuple(emb_pred) if emb_pred is not None else None,
    )


def site(original, ref=("A.java", 1, 0), kind="identifier"):
    return MaskSite(
        file=ref[0], line_no=ref[1], token_index=ref[2],
        original_text=original, kind=kind,
    )


class TestConfScore:
    def test_rank_one(self):
        assert conf_score(rec([("x", 0.9)]), k=1) == 0.9

    def test_mean_of_top_k(self):
        assert conf_score(rec([("x", 0.8), ("y", 0.2)]), k=2) == pytest.approx(0.5)

    def test_k_exceeds_propositions(self):
        with pytest.raises(ValueError, match="exceeds"):
            conf_score(rec([("x", 0.8), ("y", 0.2)]), k=3)

    def test_monotone_in_confidences(self):
        rng = random.Random(5)
        for _ in range(300):
            n = rng.randrange(1, 6)
            confs = sorted((rng.uniform(0.01, 1.0) for _ in range(n)), reverse=True)
            k = rng.randrange(1, n + 1)
            base = conf_score(rec([("t%d" % i, c) for i, c in enumerate(confs)]), k)
            # raise one of the top-k entries without breaking the ordering
            j = rng.randrange(0, k)
            ceiling = confs[j - 1] if j > 0 else 1.0
            bumped = list(confs)
            bumped[j] = min(ceiling, confs[j] + rng.uniform(0, 0.5))
            higher = conf_score(rec([("t%d" % i, c) for i, c in enumerate(bumped)]), k)
            assert higher >= base - 1e-12


class TestCosScore:
    def test_identical_vectors(self):
        r = rec([("x", 0.5)], emb_orig=[1, 2, 3], emb_pred=[1, 2, 3])
        assert cos_score(r) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        r = rec([("x", 0.5)], emb_orig=[1, 0], emb_pred=[0, 1])
        assert cos_score(r) == pytest.approx(0.0, abs=1e-12)

    def test_half_rotation(self):
        r = rec([("x", 0.5)], emb_orig=[1, 0], emb_pred=[1, 1])
        assert cos_score(r) == pytest.approx(1 / math.sqrt(2), abs=1e-9)

    def test_missing_embeddings(self):
        with pytest.raises(ValueError, match="embeddings not requested"):
            cos_score(rec([("x", 0.5)]))

    def test_zero_vector(self):
        r = rec([("x", 0.5)], emb_orig=[0, 0], emb_pred=[1, 1])
        with pytest.raises(ValueError, match="zero vector"):
            cos_score(r)

    def test_symmetric_and_scale_invariant(self):
        rng = random.Random(9)
        for _ in range(200):
            d = rng.randrange(2, 8)
            u = [rng.uniform(-1, 1) for _ in range(d)]
            v = [rng.uniform(-1, 1) for _ in range(d)]
            if all(abs(x) < 1e-9 for x in u) or all(abs(x) < 1e-9 for x in v):
                continue
            a = cos_score(rec([("x", 0.5)], emb_orig=u, emb_pred=v))
            b = cos_score(rec([("x", 0.5)], emb_orig=v, emb_pred=u))
            assert a == pytest.approx(b, abs=1e-12)
            s = rng.uniform(0.1, 10.0)
            c = cos_score(rec([("x", 0.5)], emb_orig=[s * x for x in u], emb_pred=v))
            assert a == pytest.approx(c, abs=1e-9)
            assert -1.0 - 1e-12 <= a <= 1.0 + 1e-12


class TestAccScore:
    def test_exact_match(self):
        assert acc_score(rec([("count", 0.9)]), site("count"), k=1) == 1

    def test_mismatch(self):
        assert acc_score(rec([("size", 0.9)]), site("count"), k=1) == 0

    def test_fraction_of_top_k(self):
        r = rec([("j", 0.5), ("i", 0.3), ("k", 0.2)])
        assert acc_score(r, site("i"), k=3) == pytest.approx(1 / 3)

    def test_whitespace_trimmed(self):
        assert acc_score(rec([(" count ", 0.9)]), site("count"), k=1) == 1

    def test_case_sensitive(self):
        assert acc_score(rec([("Count", 0.9)]), site("count"), k=1) == 0

    def test_k1_binary(self):
        rng = random.Random(2)
        for _ in range(100):
            tok = rng.choice(["a", "b"])
            s = acc_score(rec([(tok, 0.9)]), site("a"), k=1)
            assert s in (0.0, 1.0)

    def test_nondecreasing_in_k_when_original_present(self):
        props = [("x", 0.5), ("orig", 0.3), ("y", 0.15), ("orig", 0.05)]
        r = rec(props)
        s = site("orig")
        vals = [acc_score(r, s, k) for k in range(2, 5)]
        # once the original is inside the top-k, deepening k that adds
        # another copy cannot lower the count of hits
        assert acc_score(r, s, 2) > 0
        assert vals[2] >= 1 / 4  # both copies inside k=4

    def test_k_beyond_available_uses_what_exists(self):
        r = rec([("a", 0.6), ("b", 0.4)])
        assert acc_score(r, site("a"), k=5) == pytest.approx(1 / 2)


class TestTokenScores:
    def refs(self, n):
        return [("A.java", 1 + i // 3, i) for i in range(n)]

    def test_join_and_fields(self):
        refs = self.refs(3)
        records = [rec([("t", 0.5)], ref=r, emb_orig=[1, 0], emb_pred=[1, 1]) for r in refs]
        sites = [site("t", ref=r) for r in refs]
        out = token_scores(records, sites, k=1)
        assert len(out) == 3
        for ts in out:
            assert ts.conf == 0.5
            assert ts.acc == 1.0
            assert ts.cos == pytest.approx(1 / math.sqrt(2))
            assert ts.k_used == 1

    def test_no_embeddings_cos_absent(self):
        refs = self.refs(2)
        records = [rec([("t", 0.5)], ref=r) for r in refs]
        sites = [site("t", ref=r) for r in refs]
        out = token_scores(records, sites, k=1)
        assert all(ts.cos is None for ts in out)

    def test_unmatched_record(self):
        records = [rec([("t", 0.5)], ref=("B.java", 9, 9))]
        sites = [site("t", ref=("A.java", 1, 0))]
        with pytest.raises(ValueError, match="without matching site"):
            token_scores(records, sites)

    def test_site_without_record(self):
        refs = self.refs(2)
        records = [rec([("t", 0.5)], ref=refs[0])]
        sites = [site("t", ref=r) for r in refs]
        with pytest.raises(ValueError, match="without records"):
            token_scores(records, sites)

    def test_k_used_propagates(self):
        refs = self.refs(2)
        records = [rec([("t", 0.6), ("u", 0.4)], ref=r) for r in refs]
        sites = [site("t", ref=r) for r in refs]
        out = token_scores(records, sites, k=2)
        assert all(ts.k_used == 2 for ts in out)
        assert all(ts.conf == pytest.approx(0.5) for ts in out)

    def test_score_record_shape(self):
        ts = TokenScore(("A.java", 3, 7), conf=0.5, cos=None, acc=1.0, k_used=1)
        assert score_record(ts) == {
            "file": "A.java", "line": 3, "token_index": 7,
            "conf": 0.5, "cos": None, "acc": 1.0, "k": 1,
        }
