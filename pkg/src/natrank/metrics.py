"""Per-token naturalness scores derived from oracle predictions.

Three views of how well the oracle recovered a masked token: the
confidence it assigned (conf), how close the predicted window embeds
to the original (cos), and whether the prediction literally matches
(acc).
"""

import math
from dataclasses import dataclass

from .masking import MaskSite
from .oracle import PredictionRecord


@dataclass(frozen=True)
class TokenScore:
    """The three scores for one masked site. ``cos`` is None when the
    oracle was queried without embeddings."""

    variant_ref: tuple
    conf: float
    cos: float | None
    acc: float
    k_used: int


def conf_score(record: PredictionRecord, k: int = 1) -> float:
    """Mean confidence of the top-k propositions (k=1: the rank-1
    confidence itself)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    props = record.propositions
    if k > len(props):
        raise ValueError(
            f"k={k} exceeds available propositions ({len(props)})"
        )
    return sum(c for _, c in props[:k]) / k


def cos_score(record: PredictionRecord) -> float:
    """Cosine between the original-window and predicted-window
    embeddings."""
    if record.emb_orig is None or record.emb_pred is None:
        raise ValueError("embeddings not requested for this record")
    u, v = record.emb_orig, record.emb_pred
    if len(u) != len(v):
        raise ValueError(f"embedding dimensions differ: {len(u)} vs {len(v)}")
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero vector")
    return sum(a * b for a, b in zip(u, v)) / (nu * nv)


def acc_score(record: PredictionRecord, site: MaskSite, k: int = 1) -> float:
    """Fraction of the top-k propositions whose text equals the
    original token after trimming surrounding whitespace. Identifier
    case is significant. If fewer than k propositions exist, the
    fraction is over what exists."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    original = site.original_text.strip()
    props = record.propositions[:k]
    if not props:
        return 0.0
    hits = sum(1 for tok, _ in props if tok.strip() == original)
    return hits / len(props)


def token_scores(records, sites, k: int = 1) -> list[TokenScore]:
    """Join prediction records with their sites and score each token.

    Records and sites must match 1:1 on (file, line, token_index);
    anything unmatched on either side is an error. cos is computed only
    when the record carries embeddings.
    """
    by_ref = {}
    for site in sites:
        ref = (site.file, site.line_no, site.token_index)
        if ref in by_ref:
            raise ValueError(f"duplicate site {ref}")
        by_ref[ref] = site

    out: list[TokenScore] = []
    seen = set()
    for record in records:
        site = by_ref.get(record.variant_ref)
        if site is None:
            raise ValueError(f"record without matching site: {record.variant_ref}")
        if record.variant_ref in seen:
            raise ValueError(f"duplicate record for site {record.variant_ref}")
        seen.add(record.variant_ref)
        has_emb = record.emb_orig is not None and record.emb_pred is not None
        out.append(TokenScore(
            variant_ref=record.variant_ref,
            conf=conf_score(record, k),
            cos=cos_score(record) if has_emb else None,
            acc=acc_score(record, site, k),
            k_used=k,
        ))
    if len(seen) != len(by_ref):
        missing = sorted(set(by_ref) - seen)
        raise ValueError(f"sites without records: {missing[:3]}...")
    return out


def score_record(ts: TokenScore) -> dict:
    """The JSON-lines record shape used by ``scores.jsonl``."""
    file, line, token_index = ts.variant_ref
    return {
        "file": file,
        "line": line,
        "token_index": token_index,
        "conf": ts.conf,
        "cos": ts.cos,
        "acc": ts.acc,
        "k": ts.k_used,
    }
