"""Model-side core: encode one masked window, predict, embed.

The wire window is a list of lexical tokens containing exactly one
``<mask>`` placeholder. Context tokens are encoded independently (a
lexical token may expand to several sub-tokens); the placeholder always
becomes the model's single mask sub-token, so predictions are single
sub-token candidates. Every response carries a ``note`` documenting
that approximation, because the original token never travels on the
wire and the bridge cannot tell when it would have split.
"""

from dataclasses import dataclass

import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer

PLACEHOLDER = "<mask>"
PROTOCOL_VERSION = 1
MAX_PROPOSITIONS = 5
SUBTOKEN_NOTE = ("predictions are single sub-token candidates; a masked "
                 "token that would split into several sub-tokens is "
                 "approximated by one mask")


class BridgeRequestError(ValueError):
    """Per-request failure, reported as an error response."""


@dataclass(frozen=True)
class BridgeConfig:
    model: str
    device: str = "cpu"
    max_len: int = 512  # encoder budget in sub-tokens, special tokens included
    transport: str = "stdio"
    port: int = 8471


class MaskedLMEngine:
    """Wraps a pretrained fill-mask model behind :meth:`predict`.

    Inference runs in eval mode (no dropout) under ``no_grad`` with a
    fixed seed, so identical inputs produce identical outputs.
    """

    def __init__(self, cfg: BridgeConfig):
        self.cfg = cfg
        torch.manual_seed(0)
        self.tokenizer = AutoTokenizer.from_pretrained(cfg.model)
        self.model = AutoModelForMaskedLM.from_pretrained(cfg.model)
        self.model.to(cfg.device)
        self.model.eval()
        if self.tokenizer.mask_token_id is None:
            raise ValueError(f"tokenizer for {cfg.model!r} has no mask token")
        # usable sequence length; the -2 covers position-id offsets used
        # by roberta-style encoders (slightly conservative elsewhere)
        mp = getattr(self.model.config, "max_position_embeddings", None)
        self._position_limit = (mp - 2) if mp else None

    def _special_ids(self):
        tok = self.tokenizer
        bos = tok.bos_token_id if tok.bos_token_id is not None else tok.cls_token_id
        eos = tok.eos_token_id if tok.eos_token_id is not None else tok.sep_token_id
        prefix = [bos] if bos is not None else []
        suffix = [eos] if eos is not None else []
        return prefix, suffix

    def _encode(self, window):
        """Window tokens -> (sub-token ids with specials, mask index).

        Truncation is symmetric around the mask and never drops it. If
        the result still exceeds the encoder's position table, that is
        an overflow error for this request.
        """
        if sum(1 for t in window if t == PLACEHOLDER) != 1:
            raise BridgeRequestError(
                "window must contain exactly one placeholder")
        ids: list[int] = []
        mask_at = -1
        for text in window:
            if text == PLACEHOLDER:
                mask_at = len(ids)
                ids.append(self.tokenizer.mask_token_id)
            else:
                ids.extend(self.tokenizer.encode(text, add_special_tokens=False))

        prefix, suffix = self._special_ids()
        budget = self.cfg.max_len - len(prefix) - len(suffix)
        if budget < 1:
            raise BridgeRequestError(f"max_len {self.cfg.max_len} too small")
        if len(ids) > budget:
            left_avail = mask_at
            right_avail = len(ids) - mask_at - 1
            left = min(left_avail, (budget - 1) // 2)
            right = min(right_avail, budget - 1 - left)
            left = min(left_avail, budget - 1 - right)  # hand slack back
            ids = ids[mask_at - left:mask_at + right + 1]
            mask_at = left

        ids = prefix + ids + suffix
        mask_at += len(prefix)
        if self._position_limit is not None and len(ids) > self._position_limit:
            raise BridgeRequestError(
                f"encoder overflow: {len(ids)} sub-tokens exceed the "
                f"{self._position_limit}-position encoder after truncation")
        return ids, mask_at

    @torch.no_grad()
    def _forward(self, ids):
        batch = torch.tensor([ids], dtype=torch.long, device=self.cfg.device)
        out = self.model(batch, output_hidden_states=True)
        return out.logits[0], out.hidden_states[-1][0]

    def _flatten(self, hidden, n_prefix: int, n_suffix: int):
        # one vector per window sub-token, specials excluded, concatenated
        end = hidden.shape[0] - n_suffix
        return [float(x) for x in hidden[n_prefix:end].reshape(-1)]

    def predict(self, window, k, want_embeddings: bool) -> dict:
        """Answer one request; the result lacks only ``id`` and ``v``."""
        if not isinstance(k, int) or isinstance(k, bool) or \
                not 1 <= k <= MAX_PROPOSITIONS:
            raise BridgeRequestError(f"k must be in 1..{MAX_PROPOSITIONS}")
        ids, mask_at = self._encode(list(window))
        logits, hidden = self._forward(ids)
        probs = torch.softmax(logits[mask_at].float(), dim=-1)
        top = torch.topk(probs, min(k, probs.shape[-1]))
        props = [
            {"token": self.tokenizer.decode([int(idx)]).strip(),
             "confidence": float(p)}
            for p, idx in zip(top.values, top.indices)
        ]
        resp = {"propositions": props, "note": SUBTOKEN_NOTE}
        if want_embeddings:
            prefix, suffix = self._special_ids()
            substituted = list(ids)
            substituted[mask_at] = int(top.indices[0])
            _, hidden_pred = self._forward(substituted)
            resp["emb_orig"] = self._flatten(hidden, len(prefix), len(suffix))
            resp["emb_pred"] = self._flatten(hidden_pred, len(prefix), len(suffix))
        return resp
