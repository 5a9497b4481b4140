import math
import random

import pytest

from natrank.aggregate import (
    AGGREGATORS,
    aggregate_line,
    line_score_row,
    line_scores,
)
from natrank.metrics import TokenScore


def ts(file, line, idx, conf=0.5, cos=0.8, acc=1.0):
    return TokenScore((file, line, idx), conf=conf, cos=cos, acc=acc, k_used=1)


class TestAggregateLine:
    def test_entropy_of_ones_is_zero(self):
        assert aggregate_line([1.0, 1.0, 1.0], "entropy") == 0.0

    def test_entropy_of_halves_is_ln2(self):
        assert aggregate_line([0.5, 0.5], "entropy") == pytest.approx(0.69314718, abs=1e-9)

    def test_median_odd(self):
        assert aggregate_line([0.2, 0.9, 0.4], "median") == 0.4

    def test_median_even_lower_middle(self):
        assert aggregate_line([0.1, 0.4, 0.3, 0.9], "median") == 0.3
        assert aggregate_line([1.0, 0.0], "median") == 0.0  # stays two-valued

    def test_min_max_mean(self):
        vals = [0.25, 0.5, 0.75]
        assert aggregate_line(vals, "min") == 0.25
        assert aggregate_line(vals, "max") == 0.75
        assert aggregate_line(vals, "mean") == 0.5

    def test_entropy_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="nonpositive"):
            aggregate_line([0.5, 0.0], "entropy")
        with pytest.raises(ValueError, match="nonpositive"):
            aggregate_line([-0.1], "entropy")

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            aggregate_line([], "mean")

    def test_unknown_aggregator(self):
        with pytest.raises(ValueError, match="unknown aggregator"):
            aggregate_line([0.5], "mode")

    def test_constant_entropy_identity(self):
        rng = random.Random(21)
        for _ in range(100):
            c = rng.uniform(1e-6, 1.0)
            n = rng.randrange(1, 9)
            assert aggregate_line([c] * n, "entropy") == pytest.approx(-math.log(c), abs=1e-12)

    def test_order_statistics_laws_random(self):
        rng = random.Random(33)
        for _ in range(10_000):
            n = rng.randrange(1, 12)
            vals = [rng.uniform(0.001, 1.0) for _ in range(n)]
            lo = aggregate_line(vals, "min")
            hi = aggregate_line(vals, "max")
            med = aggregate_line(vals, "median")
            mean = aggregate_line(vals, "mean")
            assert lo <= med <= hi
            assert lo <= mean <= hi + 1e-12
            if n == 1:
                assert lo == hi == med == mean == vals[0]

    def test_permutation_invariant(self):
        rng = random.Random(44)
        for _ in range(200):
            n = rng.randrange(1, 10)
            vals = [rng.uniform(0.01, 1.0) for _ in range(n)]
            shuffled = vals[:]
            rng.shuffle(shuffled)
            for how in AGGREGATORS:
                assert aggregate_line(vals, how) == pytest.approx(
                    aggregate_line(shuffled, how), abs=1e-12
                )


class TestLineScores:
    def test_min_over_line(self):
        scores = [ts("A", 1, 0, conf=0.9), ts("A", 1, 1, conf=0.1)]
        out = line_scores(scores, "conf", "min")
        assert len(out) == 1
        assert out[0].value == 0.1
        assert out[0].n_tokens == 2

    def test_singleton_transparent(self):
        scores = [ts("A", 2, 0, conf=0.42)]
        for how in ("min", "max", "mean", "median"):
            out = line_scores(scores, "conf", how)
            assert out[0].value == 0.42

    def test_acc_mean(self):
        scores = [ts("A", 1, i, acc=a) for i, a in enumerate([1, 0, 1])]
        out = line_scores(scores, "acc", "mean")
        assert out[0].value == pytest.approx(2 / 3)

    def test_missing_cos_rejected(self):
        scores = [ts("A", 1, 0, cos=None)]
        with pytest.raises(ValueError, match="cos score absent"):
            line_scores(scores, "cos", "mean")

    def test_grouping_and_order(self):
        scores = [
            ts("B", 2, 5, conf=0.3),
            ts("A", 9, 1, conf=0.6),
            ts("B", 2, 6, conf=0.5),
            ts("A", 1, 0, conf=0.9),
        ]
        out = line_scores(scores, "conf", "mean")
        assert [(s.file, s.line_no) for s in out] == [("A", 1), ("A", 9), ("B", 2)]
        assert out[2].value == pytest.approx(0.4)

    def test_lines_without_tokens_absent(self):
        scores = [ts("A", 5, 0)]
        out = line_scores(scores, "conf", "mean")
        assert [s.line_no for s in out] == [5]

    def test_csv_row_shape(self):
        out = line_scores([ts("A", 1, 0, conf=0.25)], "conf", "mean")
        row = line_score_row(out[0])
        assert row == ["A", 1, "conf", "mean", "0.25", 1]
