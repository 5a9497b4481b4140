"""Line ranking with expectation-based tie handling, per-bug outcomes,
and the two reference baselines.

Ties are never broken by sampling: a block of equally scored lines is
assigned the expected ranks a uniform random shuffle of the block would
produce (block center for each member, an analytic first-hit for the
earliest buggy block). Outcomes are therefore deterministic and
variance-free while meaning the same thing as averaged random
tie-breaking.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class RankedLine:
    line_ref: object
    value: float | None
    rank: float  # expected rank; fractional inside tie blocks
    norm_rank: float


@dataclass(frozen=True)
class BugOutcome:
    bundle_id: str
    method_id: str
    first_hit: float | None
    mean_rank: float | None
    total_lines: int
    buggy_lines: int
    evaluable: bool


OUTCOMES_HEADER = [
    "bundle_id", "method_id", "first_hit", "mean_rank",
    "total_lines", "buggy_lines", "evaluable",
]


def expected_ranks(block_start: int, block_size: int, buggy_in_block: int):
    """Expected (first_hit, mean) rank of the buggy lines inside one tie
    block starting at rank ``block_start``, under a uniform shuffle of
    the block. Closed forms: E[min of B uniform draws from 1..T] =
    (T+1)/(B+1); E[mean position] = (T+1)/2."""
    if buggy_in_block <= 0:
        raise ValueError("block without buggy lines contributes nothing")
    if buggy_in_block > block_size:
        raise ValueError(
            f"buggy_in_block {buggy_in_block} exceeds block_size {block_size}"
        )
    offset = block_start - 1
    first = offset + (block_size + 1) / (buggy_in_block + 1)
    mean = offset + (block_size + 1) / 2
    return first, mean


def rank_lines(values: dict, order: str = "asc") -> list[RankedLine]:
    """Rank line refs by value. Equal values share a tie block and each
    member carries the block's expected rank (its center). Lines whose
    value is absent (None) trail everything in one final tie block: the
    worst-rank policy for unscored lines.
    """
    if order not in ("asc", "desc"):
        raise ValueError(f"order must be asc or desc, got {order!r}")
    if not values:
        raise ValueError("cannot rank zero lines")

    valued = [(ref, v) for ref, v in values.items() if v is not None]
    absent = sorted(ref for ref, v in values.items() if v is None)
    sign = 1 if order == "asc" else -1
    valued.sort(key=lambda rv: (sign * rv[1], str(rv[0])))

    total = len(values)
    out: list[RankedLine] = []

    def emit_block(members, start):
        t_b = len(members)
        center = (start - 1) + (t_b + 1) / 2
        for ref, v in members:
            out.append(RankedLine(
                line_ref=ref, value=v, rank=center, norm_rank=center / total,
            ))

    i = 0
    position = 1
    while i < len(valued):
        j = i
        while j < len(valued) and valued[j][1] == valued[i][1]:
            j += 1
        emit_block(valued[i:j], position)
        position += j - i
        i = j
    if absent:
        emit_block([(ref, None) for ref in absent], position)
    return out


def _blocks(ranked: list[RankedLine]):
    """Recover tie blocks by grouping equal expected ranks. Yields
    (start_rank, members) with start_rank the 1-based position of the
    block's first line."""
    groups: dict[float, list[RankedLine]] = {}
    for rl in ranked:
        groups.setdefault(rl.rank, []).append(rl)
    position = 1
    for rank in sorted(groups):
        members = groups[rank]
        yield position, members
        position += len(members)


def bug_outcome(ranked: list[RankedLine], buggy_refs, bundle_id: str = "",
                method_id: str = "") -> BugOutcome:
    """Fold a ranking and the buggy-line labels into one outcome.

    first_hit is the expected rank of the earliest buggy line (analytic
    within its tie block); mean_rank averages the expected ranks of all
    buggy lines. Both are normalized by the total line count. A ranking
    with no buggy lines is returned as not evaluable.
    """
    buggy = set(buggy_refs)
    total = len(ranked)
    n_buggy = sum(1 for rl in ranked if rl.line_ref in buggy)
    if n_buggy == 0:
        return BugOutcome(
            bundle_id=bundle_id, method_id=method_id,
            first_hit=None, mean_rank=None,
            total_lines=total, buggy_lines=0, evaluable=False,
        )

    first_hit = None
    mean_sum = 0.0
    for start, members in _blocks(ranked):
        b = sum(1 for rl in members if rl.line_ref in buggy)
        if b == 0:
            continue
        block_first, block_mean = expected_ranks(start, len(members), b)
        if first_hit is None:
            first_hit = block_first  # blocks come in rank order
        mean_sum += b * block_mean
    return BugOutcome(
        bundle_id=bundle_id, method_id=method_id,
        first_hit=first_hit / total,
        mean_rank=mean_sum / n_buggy / total,
        total_lines=total, buggy_lines=n_buggy, evaluable=True,
    )


def random_baseline(total_lines: int, buggy_lines: int, bundle_id: str = "",
                    method_id: str = "random") -> BugOutcome:
    """Outcome of ranking by a coin: one tie block over all lines."""
    if buggy_lines <= 0:
        return BugOutcome(
            bundle_id=bundle_id, method_id=method_id,
            first_hit=None, mean_rank=None,
            total_lines=total_lines, buggy_lines=0, evaluable=False,
        )
    if buggy_lines > total_lines:
        raise ValueError("more buggy lines than lines")
    first, mean = expected_ranks(1, total_lines, buggy_lines)
    return BugOutcome(
        bundle_id=bundle_id, method_id=method_id,
        first_hit=first / total_lines,
        mean_rank=mean / total_lines,
        total_lines=total_lines, buggy_lines=buggy_lines, evaluable=True,
    )


def complexity_baseline(records) -> tuple[dict, str]:
    """Ranking input for the complexity baseline: value = grammar token
    count, most complex first. Returns (values, order) ready for
    rank_lines."""
    values = {(r.file, r.line_no): float(r.token_count) for r in records}
    return values, "desc"


def outcome_row(o: BugOutcome) -> list:
    """CSV row for ``outcomes.csv``."""
    return [
        o.bundle_id, o.method_id,
        "" if o.first_hit is None else repr(o.first_hit),
        "" if o.mean_rank is None else repr(o.mean_rank),
        o.total_lines, o.buggy_lines, int(o.evaluable),
    ]
