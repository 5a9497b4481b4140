"""Line-level n-gram language model with interpolated Kneser-Ney
smoothing: the classic naturalness baseline.

Each line is modeled as an independent token sequence padded with n−1
begin markers and closed by one end marker. Rare tokens become
``<UNK>`` at training time so unseen tokens at scoring time inherit
honest, nonzero probability. Counts at orders 2..n are raw; the
unigram base of the interpolation uses continuation counts, as
Kneser-Ney prescribes.
"""

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass

from .lexing import lex_grammar

BEGIN = "<s>"
END = "</s>"
UNK = "<UNK>"


@dataclass(frozen=True)
class NGramConfig:
    order: int = 4
    unk_threshold: int = 1
    unk_token: str = UNK
    tokenizer_id: str = "jp"  # jp | utf8
    discount_mode: str = "count_of_counts"  # or "fixed:<d>"
    # False: replace tokens with count <= threshold (gives <UNK> mass
    # even at threshold 1); True: strictly < threshold
    unk_strict: bool = False


def tokenize_line(text: str, tokenizer_id: str) -> list[str]:
    """Tokenize one source line for language modeling.

    jp: grammar tokens minus comments and whitespace; a line whose
    first significant token is ``*`` is treated as the interior of a
    javadoc block and dropped entirely. utf8: Unicode whitespace split,
    comments and all.
    """
    if tokenizer_id == "utf8":
        return text.split()
    if tokenizer_id == "jp":
        seq = lex_grammar(text, strict=False)
        toks = [t.text for t in seq.tokens if t.kind not in ("whitespace", "comment")]
        if toks and toks[0] == "*":
            return []
        return toks
    raise ValueError(f"unknown tokenizer {tokenizer_id!r}")


def _parse_discount_mode(mode: str):
    if mode == "count_of_counts":
        return None
    if mode.startswith("fixed:"):
        d = float(mode.split(":", 1)[1])
        if not 0.0 <= d < 1.0:
            raise ValueError(f"fixed discount must be in [0,1), got {d}")
        return d
    raise ValueError(f"unknown discount_mode {mode!r}")


class NGramModel:
    """Trained model; immutable and safe for concurrent scoring."""

    def __init__(self, config: NGramConfig, vocab: set, counts: dict):
        # counts[j][context_tuple][target] = raw count, j = 1..order
        self.config = config
        self.vocab = vocab
        self.counts = counts
        self._finish()

    def _finish(self):
        """Derive totals, discounts, and the continuation unigram."""
        n = self.config.order
        self.totals = {
            j: {ctx: sum(t.values()) for ctx, t in self.counts[j].items()}
            for j in range(1, n + 1)
        }

        fixed = _parse_discount_mode(self.config.discount_mode)
        self.discounts = {}
        for j in range(2, n + 1):
            if fixed is not None:
                self.discounts[j] = fixed
                continue
            n1 = n2 = 0
            for targets in self.counts[j].values():
                for c in targets.values():
                    if c == 1:
                        n1 += 1
                    elif c == 2:
                        n2 += 1
            denom = n1 + 2 * n2
            d = n1 / denom if denom else 0.5
            # keep strictly below 1 so the seen-gram term never zeroes
            # out entirely; normalization holds for any d in [0,1]
            self.discounts[j] = min(d, 1.0 - 1e-9)

        unk = self.config.unk_token
        if n >= 2:
            cont = Counter()
            for targets in self.counts[2].values():
                for t in targets:
                    cont[t] += 1
            if cont.get(unk, 0) == 0:
                # pseudo-continuation so unseen tokens keep prob > 0
                cont[unk] = 1
            total = sum(cont.values())
            self._p1_table = {t: c / total for t, c in cont.items()}
        else:
            uni = dict(self.counts[1].get((), {}))
            if uni.get(unk, 0) == 0:
                uni[unk] = 1
            total = sum(uni.values())
            self._p1_table = {t: c / total for t, c in uni.items()}

    def _p1(self, t: str) -> float:
        return self._p1_table.get(t, 0.0)

    def _p(self, j: int, ctx: tuple, t: str) -> float:
        if j == 1:
            return self._p1(t)
        table = self.counts[j].get(ctx)
        if not table:
            return self._p(j - 1, ctx[1:], t)
        total = self.totals[j][ctx]
        d = self.discounts[j]
        c = table.get(t, 0)
        backoff = d * len(table) / total * self._p(j - 1, ctx[1:], t)
        return max(c - d, 0.0) / total + backoff

    def prob(self, context, t: str) -> float:
        """P(t | context) under interpolated Kneser-Ney. Context longer
        than order−1 is trimmed to its suffix; unknown tokens (in the
        context or as the target) are mapped to the UNK token first."""
        n = self.config.order
        unk = self.config.unk_token
        ctx = tuple(context)[max(0, len(context) - (n - 1)):] if n > 1 else ()
        ctx = tuple(tok if (tok in self.vocab or tok == BEGIN) else unk for tok in ctx)
        if t not in self.vocab:
            t = unk
        return self._p(len(ctx) + 1, ctx, t)

    def cross_entropy(self, line: str):
        """Per-token negative mean log-probability of the line, or None
        when the tokenizer yields nothing. The end marker is part of
        training but is not scored."""
        toks = tokenize_line(line, self.config.tokenizer_id)
        if not toks:
            return None
        n = self.config.order
        seq = [BEGIN] * (n - 1) + toks
        total = 0.0
        for i, t in enumerate(toks):
            ctx = seq[i:i + n - 1]
            total += math.log(self.prob(ctx, t))
        return -total / len(toks)

    # -- persistence ---------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "format": "natrank-ngram",
            "version": 1,
            "config": asdict(self.config),
            "vocab": sorted(self.vocab),
            "counts": {
                str(j): [
                    [list(ctx), dict(sorted(targets.items()))]
                    for ctx, targets in sorted(self.counts[j].items())
                ]
                for j in range(1, self.config.order + 1)
            },
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "NGramModel":
        payload = json.loads(text)
        if payload.get("format") != "natrank-ngram" or payload.get("version") != 1:
            raise ValueError("not a recognizable model file")
        config = NGramConfig(**payload["config"])
        counts = {}
        for j_str, pairs in payload["counts"].items():
            j = int(j_str)
            counts[j] = {
                tuple(ctx): {t: int(c) for t, c in targets.items()}
                for ctx, targets in pairs
            }
        for j in range(1, config.order + 1):
            counts.setdefault(j, {})
        return cls(config, set(payload["vocab"]), counts)


def train(lines, cfg: NGramConfig = NGramConfig()) -> NGramModel:
    """Train on raw line strings.

    Tokenizes each line, replaces rare tokens by the UNK token, pads,
    and accumulates counts at every order 1..n over one shared set of
    target positions, so every order's distribution covers the same
    events.
    """
    if cfg.order < 1:
        raise ValueError(f"order must be >= 1, got {cfg.order}")
    token_lines = [tokenize_line(ln, cfg.tokenizer_id) for ln in lines]
    token_lines = [tl for tl in token_lines if tl]
    if not token_lines:
        raise ValueError("zero usable training lines")
    return train_tokenized(token_lines, cfg)


def train_tokenized(token_lines, cfg: NGramConfig = NGramConfig()) -> NGramModel:
    """Train on pre-tokenized lines (each a nonempty list of tokens)."""
    n = cfg.order
    k = cfg.unk_threshold
    unk = cfg.unk_token

    raw = Counter()
    for tl in token_lines:
        raw.update(tl)

    def mapped(tok: str) -> str:
        c = raw[tok]
        rare = c < k if cfg.unk_strict else c <= k
        return unk if rare else tok

    vocab = {mapped(t) for t in raw}
    vocab.add(unk)
    vocab.add(END)

    counts = {j: {} for j in range(1, n + 1)}
    for tl in token_lines:
        seq = [BEGIN] * (n - 1) + [mapped(t) for t in tl] + [END]
        for i in range(n - 1, len(seq)):
            target = seq[i]
            for j in range(1, n + 1):
                ctx = tuple(seq[i - (j - 1):i])
                table = counts[j].setdefault(ctx, {})
                table[target] = table.get(target, 0) + 1

    return NGramModel(cfg, vocab, counts)
