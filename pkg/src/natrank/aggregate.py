"""Token-to-line score aggregation.

A line's tokens each carry a score; the line's score is the min, max,
mean, median, or entropy of them. Median is the lower-middle order
statistic so that two-valued inputs (like exact-match scores) aggregate
to one of their own values.
"""

import math
from dataclasses import dataclass

AGGREGATORS = ("min", "max", "mean", "median", "entropy")
METRICS = ("conf", "cos", "acc")

LINE_SCORES_HEADER = ["file", "line", "metric", "aggregator", "value", "n_tokens"]


@dataclass(frozen=True)
class LineScore:
    file: str
    line_no: int
    metric: str
    aggregator: str
    value: float
    n_tokens: int


def aggregate_line(scores, how: str) -> float:
    """Collapse a nonempty list of reals with the named aggregator.

    entropy = −(Σ ln s_i)/n, which requires every score > 0; exact-match
    scores (0/1-valued) therefore never combine with entropy.
    """
    vals = list(scores)
    if not vals:
        raise ValueError("cannot aggregate an empty score list")
    if how == "min":
        return min(vals)
    if how == "max":
        return max(vals)
    if how == "mean":
        return sum(vals) / len(vals)
    if how == "median":
        return sorted(vals)[(len(vals) - 1) // 2]
    if how == "entropy":
        if any(s <= 0 for s in vals):
            raise ValueError("entropy undefined for nonpositive score")
        return -sum(math.log(s) for s in vals) / len(vals)
    raise ValueError(f"unknown aggregator {how!r}")


def line_scores(scores, metric: str, how: str) -> list[LineScore]:
    """One LineScore per line that has at least one token score.

    ``scores`` is any iterable of TokenScore. Lines whose tokens were
    never maskable simply do not appear; the ranking layer pools them.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if how not in AGGREGATORS:
        raise ValueError(f"unknown aggregator {how!r}")

    grouped: dict[tuple, list[float]] = {}
    for ts in scores:
        file, line_no, _ = ts.variant_ref
        if metric == "conf":
            v = ts.conf
        elif metric == "acc":
            v = ts.acc
        else:
            if ts.cos is None:
                raise ValueError(
                    f"cos score absent for {ts.variant_ref}; "
                    "query the oracle with embeddings enabled"
                )
            v = ts.cos
        grouped.setdefault((file, line_no), []).append(v)

    out = []
    for (file, line_no), vals in sorted(grouped.items()):
        out.append(LineScore(
            file=file,
            line_no=line_no,
            metric=metric,
            aggregator=how,
            value=aggregate_line(vals, how),
            n_tokens=len(vals),
        ))
    return out


def line_score_row(ls: LineScore) -> list:
    """CSV row for ``line_scores.csv``."""
    return [ls.file, ls.line_no, ls.metric, ls.aggregator, repr(ls.value), ls.n_tokens]
