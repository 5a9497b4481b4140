"""Mask-site selection and context-window rendering.

For each subject line, every identifier, literal, and operator token is
a candidate masking site. A site renders to a variant: the cleaned
token stream (no whitespace, no comments) with the site replaced by a
placeholder, shrunk to a window around the placeholder so the oracle's
encoder never sees an oversized input.
"""

from dataclasses import dataclass, field

from .lexing import TokenSequence

PLACEHOLDER = "<mask>"

# Token kinds that may be masked. Keywords, separators, annotations and
# trivia never produce sites: predicting them tests the grammar, not
# the code's naturalness.
MASKABLE_KINDS = frozenset({
    "identifier",
    "literal_number",
    "literal_string",
    "literal_char",
    "literal_bool_null",
    "operator",
})

# Lexical-token budget handed to render_variant by the pipeline. The
# oracle's own limit is 512 sub-tokens; one lexical token can expand to
# several sub-tokens, so the pipeline stays well under it.
DEFAULT_WINDOW_BUDGET = 256


@dataclass(frozen=True)
class MaskSite:
    """One maskable token occurrence."""

    file: str
    line_no: int
    token_index: int  # index into the full grammar TokenSequence
    original_text: str
    kind: str


@dataclass(frozen=True)
class MaskedVariant:
    """A site rendered as an oracle-ready context window."""

    site: MaskSite
    window_tokens: tuple[str, ...]
    placeholder: str = PLACEHOLDER
    window_budget: int = 512

    @property
    def mask_position(self) -> int:
        return self.window_tokens.index(self.placeholder)


def extract_sites(seq: TokenSequence, lines) -> list[MaskSite]:
    """All maskable token occurrences on the requested lines, in source
    order. Lines with no maskable tokens contribute nothing."""
    wanted = set(lines)
    sites: list[MaskSite] = []
    for idx, tok in enumerate(seq.tokens):
        if tok.line_no in wanted and tok.kind in MASKABLE_KINDS:
            sites.append(MaskSite(
                file=seq.source,
                line_no=tok.line_no,
                token_index=idx,
                original_text=tok.text,
                kind=tok.kind,
            ))
    return sites


def render_variant(seq: TokenSequence, site: MaskSite, budget: int = DEFAULT_WINDOW_BUDGET) -> MaskedVariant:
    """Render one site to a placeholder-bearing window.

    The whitespace and comment tokens are dropped first; the window then
    grows from the placeholder alternately left, right, left, ... until
    it holds ``budget`` tokens or the cleaned sequence runs out. When
    one side is exhausted the remainder is taken from the other, so the
    window length is always min(budget, cleaned length).
    """
    if budget < 3:
        raise ValueError(f"window budget must be >= 3, got {budget}")

    texts: list[str] = []
    pos = -1
    for idx, tok in enumerate(seq.tokens):
        if tok.kind in ("whitespace", "comment"):
            continue
        if idx == site.token_index:
            pos = len(texts)
            texts.append(PLACEHOLDER)
        else:
            texts.append(tok.text)
    if pos < 0:
        raise ValueError(
            f"site token_index {site.token_index} not in sequence {seq.source}"
        )

    n = len(texts)
    lo = hi = pos
    take_left = True
    while (hi - lo + 1) < budget and (lo > 0 or hi < n - 1):
        if take_left:
            if lo > 0:
                lo -= 1
            else:
                hi += 1
        else:
            if hi < n - 1:
                hi += 1
            else:
                lo -= 1
        take_left = not take_left

    return MaskedVariant(
        site=site,
        window_tokens=tuple(texts[lo:hi + 1]),
        window_budget=budget,
    )


def mask_record(variant: MaskedVariant, bundle_id: str) -> dict:
    """The JSON-lines record shape used by ``masks.jsonl``."""
    return {
        "bundle_id": bundle_id,
        "file": variant.site.file,
        "line": variant.site.line_no,
        "token_index": variant.site.token_index,
        "original": variant.site.original_text,
        "window": list(variant.window_tokens),
    }
