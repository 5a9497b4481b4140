"""Fill-mask oracle access: wire protocol client plus an in-process stub.

The oracle answers one question: given a token window with a single
``<mask>`` element, what are the top-k most likely tokens at the masked
position, with what confidence, and (on request) what do the original
and predicted windows embed to?

Two transports speak the same newline-delimited JSON protocol: a child
process's stdio and HTTP POST. The stub oracle answers the same
question from a frequency table, with no model, no randomness, and
bitwise-reproducible output; it exists so the entire pipeline can be
tested hermetically.
"""

import json
import math
import subprocess
import threading
import time
import urllib.error
import urllib.request
import zlib
from collections import deque
from dataclasses import dataclass

from .masking import PLACEHOLDER, MaskedVariant

PROTOCOL_VERSION = 1
EMBEDDING_DIM = 64
MAX_PROPOSITIONS = 5


class OracleError(Exception):
    """Base class for oracle failures."""


class OracleProtocolError(OracleError):
    """The oracle answered, but the answer violates the protocol."""


class OracleTransportError(OracleError):
    """The transport failed and retries were exhausted."""


@dataclass(frozen=True)
class PredictionRecord:
    """Top-k propositions for one masked site, plus optional embeddings
    of the original window and the rank-1-substituted window."""

    variant_ref: tuple  # (file, line_no, token_index)
    propositions: tuple  # ((token_text, confidence), ...) confidence descending
    emb_orig: tuple | None = None
    emb_pred: tuple | None = None


def make_request(req_id: str, variant: MaskedVariant, k: int, want_embeddings: bool) -> dict:
    return {
        "id": req_id,
        "window": list(variant.window_tokens),
        "k": k,
        "embeddings": want_embeddings,
        "v": PROTOCOL_VERSION,
    }


def _check_version(obj: dict) -> None:
    if obj.get("v") != PROTOCOL_VERSION:
        raise OracleProtocolError(
            f"protocol version mismatch: expected {PROTOCOL_VERSION}, got {obj.get('v')!r}"
        )


def parse_response(obj: dict, pending: dict, answered: set, want_embeddings: bool):
    """Validate one response object against the in-flight table.

    Returns ``(req_id, PredictionRecord)``. Raises
    :class:`OracleProtocolError` for version mismatch, stray or
    duplicate ids, oracle-reported errors, and malformed payloads.
    """
    if not isinstance(obj, dict):
        raise OracleProtocolError(f"response is not an object: {obj!r}")
    _check_version(obj)
    req_id = obj.get("id")
    if not isinstance(req_id, str):
        raise OracleProtocolError(f"response without id: {obj!r}")
    if req_id in answered:
        raise OracleProtocolError(f"duplicate response id: {req_id}")
    if req_id not in pending:
        raise OracleProtocolError(f"stray response id: {req_id}")
    if "error" in obj:
        raise OracleProtocolError(f"oracle error for {req_id}: {obj['error']}")

    props = obj.get("propositions")
    if not isinstance(props, list) or not 1 <= len(props) <= MAX_PROPOSITIONS:
        raise OracleProtocolError(f"malformed propositions for {req_id}: {props!r}")
    parsed = []
    prev = None
    for p in props:
        if not isinstance(p, dict) or "token" not in p or "confidence" not in p:
            raise OracleProtocolError(f"malformed proposition for {req_id}: {p!r}")
        tok, conf = p["token"], p["confidence"]
        if not isinstance(tok, str) or not isinstance(conf, (int, float)):
            raise OracleProtocolError(f"malformed proposition for {req_id}: {p!r}")
        conf = float(conf)
        if not (0.0 < conf <= 1.0) or not math.isfinite(conf):
            raise OracleProtocolError(
                f"confidence out of range for {req_id}: {conf!r}"
            )
        if prev is not None and conf > prev + 1e-12:
            raise OracleProtocolError(
                f"confidences not sorted for {req_id}"
            )
        prev = conf
        parsed.append((tok, conf))

    emb_orig = emb_pred = None
    if want_embeddings:
        emb_orig = obj.get("emb_orig")
        emb_pred = obj.get("emb_pred")
        for name, vec in (("emb_orig", emb_orig), ("emb_pred", emb_pred)):
            if not isinstance(vec, list) or not vec or not all(
                isinstance(x, (int, float)) and math.isfinite(x) for x in vec
            ):
                raise OracleProtocolError(
                    f"missing or malformed {name} for {req_id}"
                )
        if len(emb_orig) != len(emb_pred):
            raise OracleProtocolError(
                f"embedding dimensions differ for {req_id}: "
                f"{len(emb_orig)} vs {len(emb_pred)}"
            )

    variant = pending[req_id]
    site = variant.site
    record = PredictionRecord(
        variant_ref=(site.file, site.line_no, site.token_index),
        propositions=tuple(parsed),
        emb_orig=tuple(float(x) for x in emb_orig) if emb_orig is not None else None,
        emb_pred=tuple(float(x) for x in emb_pred) if emb_pred is not None else None,
    )
    return req_id, record


# ---------------------------------------------------------------------------
# deterministic stub oracle

def coarse_class(text: str) -> str:
    """Bucket a token text as identifier-, operator-, or literal-like.
    Used to pick which slice of the vocabulary competes for a site."""
    if not text:
        return "operator"
    ch = text[0]
    if text in ("true", "false", "null"):
        return "literal"
    if ch.isdigit() or ch in "\"'" or (ch == "." and len(text) > 1 and text[1].isdigit()):
        return "literal"
    if ch.isalpha() or ch in "_$":
        return "identifier"
    return "operator"


def hashed_embedding(tokens, dim: int = EMBEDDING_DIM) -> tuple:
    """Bag-of-tokens vector: each token crc32-hashed to one of ``dim``
    buckets, bucket counts L2-normalized. Stable across processes."""
    counts = [0.0] * dim
    for t in tokens:
        counts[zlib.crc32(t.encode("utf-8")) % dim] += 1.0
    norm = math.sqrt(sum(c * c for c in counts))
    if norm == 0.0:
        return tuple(counts)
    return tuple(c / norm for c in counts)


class _VocabTable:
    """Vocabulary frequencies split by coarse class, ranked."""

    def __init__(self, vocab):
        if not vocab:
            raise OracleError("stub oracle requires a non-empty vocabulary")
        self.by_class: dict[str, list] = {}
        self.class_total: dict[str, int] = {}
        items = sorted(vocab.items())  # text order breaks frequency ties
        for text, count in items:
            cls = coarse_class(text)
            self.by_class.setdefault(cls, []).append((text, count))
            self.class_total[cls] = self.class_total.get(cls, 0) + count
        for cls in self.by_class:
            self.by_class[cls].sort(key=lambda tc: (-tc[1], tc[0]))
        self.global_ranked = sorted(items, key=lambda tc: (-tc[1], tc[0]))
        self.global_total = sum(vocab.values())

    def top(self, cls: str, k: int):
        """Top-k (token, raw class-relative frequency) for a class,
        falling back to the global table when the class is empty."""
        ranked = self.by_class.get(cls)
        if ranked:
            total = self.class_total[cls]
        else:
            ranked = self.global_ranked
            total = self.global_total
        return [(text, count / total) for text, count in ranked[:k]]


def stub_query(variants, k: int, want_embeddings: bool, vocab) -> "list[PredictionRecord]":
    """Deterministic oracle: propositions are the most frequent
    vocabulary tokens of the masked token's coarse class, confidence is
    the raw class-relative frequency (independent of k). Embeddings are
    hashed bags of window tokens, with the original (resp. rank-1
    predicted) token substituted at the placeholder.
    """
    if not 1 <= k <= MAX_PROPOSITIONS:
        raise OracleError(f"k must be in 1..{MAX_PROPOSITIONS}, got {k}")
    table = _VocabTable(vocab)
    records = []
    for variant in variants:
        site = variant.site
        props = table.top(coarse_class(site.original_text), k)
        emb_orig = emb_pred = None
        if want_embeddings:
            pos = variant.mask_position
            window = list(variant.window_tokens)
            orig_tokens = list(window)
            orig_tokens[pos] = site.original_text
            pred_tokens = list(window)
            pred_tokens[pos] = props[0][0]
            emb_orig = hashed_embedding(orig_tokens)
            emb_pred = hashed_embedding(pred_tokens)
        records.append(PredictionRecord(
            variant_ref=(site.file, site.line_no, site.token_index),
            propositions=tuple(props),
            emb_orig=emb_orig,
            emb_pred=emb_pred,
        ))
    return records


# ---------------------------------------------------------------------------
# wire clients

class StdioOracleClient:
    """Speaks the line protocol to a child process.

    Up to ``max_in_flight`` requests ride the pipe concurrently; the
    child may answer out of order. If the child dies mid-stream the
    client restarts it and resends the unanswered requests, up to
    ``retries`` restarts.
    """

    def __init__(self, argv, max_in_flight: int = 8, retries: int = 2):
        if isinstance(argv, str):
            raise TypeError("argv must be a list of program arguments")
        self.argv = list(argv)
        self.max_in_flight = max(1, max_in_flight)
        self.retries = retries

    def query(self, variants, k: int, want_embeddings: bool = False):
        if not 1 <= k <= MAX_PROPOSITIONS:
            raise OracleError(f"k must be in 1..{MAX_PROPOSITIONS}, got {k}")
        todo = deque()
        for n, variant in enumerate(variants):
            todo.append((f"q{n}", variant))
        answered: set = set()
        records: list = []
        attempts = 0
        while todo:
            try:
                # records is shared so answers received before a crash
                # survive the restart
                self._run_once(todo, answered, records, k, want_embeddings)
            except OracleTransportError:
                attempts += 1
                if attempts > self.retries:
                    raise
                time.sleep(0.05 * attempts)
        return records

    def _run_once(self, todo, answered, records, k, want_embeddings):
        proc = subprocess.Popen(
            self.argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        pending: dict = {}
        lock = threading.Lock()
        slots = threading.Semaphore(self.max_in_flight)
        stop = threading.Event()

        def sender():
            while True:
                slots.acquire()
                if stop.is_set():
                    return
                with lock:
                    if not todo:
                        break
                    req_id, variant = todo.popleft()
                    pending[req_id] = variant
                line = json.dumps(
                    make_request(req_id, variant, k, want_embeddings),
                    sort_keys=True,
                )
                try:
                    proc.stdin.write(line + "\n")
                    proc.stdin.flush()
                except (BrokenPipeError, OSError, ValueError):
                    # request stays in pending; the reader re-queues it
                    return
            # everything sent: half-close so a buffering server flushes
            try:
                proc.stdin.close()
            except (BrokenPipeError, OSError, ValueError):
                pass

        def unblock_sender():
            stop.set()
            for _ in range(self.max_in_flight):
                slots.release()
            t.join(timeout=5)

        t = threading.Thread(target=sender, daemon=True)
        t.start()
        try:
            while True:
                with lock:
                    if not todo and not pending:
                        break
                line = proc.stdout.readline()
                if line == "":
                    proc.kill()
                    unblock_sender()
                    with lock:
                        for req_id, variant in pending.items():
                            todo.appendleft((req_id, variant))
                        pending.clear()
                    try:
                        code = proc.wait(timeout=2)
                    except Exception:
                        code = None
                    raise OracleTransportError(
                        f"oracle process ended early (exit {code})"
                    )
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise OracleProtocolError(f"unparseable response line: {e}") from None
                with lock:
                    req_id, record = parse_response(obj, pending, answered, want_embeddings)
                    del pending[req_id]
                    answered.add(req_id)
                records.append(record)
                slots.release()
        finally:
            unblock_sender()
            try:
                proc.stdin.close()
            except (BrokenPipeError, OSError, ValueError):
                pass
            proc.stdout.close()
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()


class HttpOracleClient:
    """Speaks the same message bodies over HTTP POST, one request per
    call. Transient transport failures (connection refused, 5xx,
    timeouts) are retried; protocol violations are not."""

    def __init__(self, url: str, retries: int = 2, timeout: float = 30.0):
        self.url = url
        self.retries = retries
        self.timeout = timeout

    def query(self, variants, k: int, want_embeddings: bool = False):
        if not 1 <= k <= MAX_PROPOSITIONS:
            raise OracleError(f"k must be in 1..{MAX_PROPOSITIONS}, got {k}")
        records = []
        for n, variant in enumerate(variants):
            req_id = f"q{n}"
            body = json.dumps(
                make_request(req_id, variant, k, want_embeddings), sort_keys=True
            ).encode("utf-8")
            obj = self._post(body, req_id)
            pending = {req_id: variant}
            _, record = parse_response(obj, pending, set(), want_embeddings)
            records.append(record)
        return records

    def _post(self, body: bytes, req_id: str) -> dict:
        last = None
        for attempt in range(self.retries + 1):
            req = urllib.request.Request(
                self.url, data=body,
                headers={"Content-Type": "application/json"},
                method="POST",
            )
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    return json.loads(resp.read().decode("utf-8"))
            except urllib.error.HTTPError as e:
                if e.code >= 500:
                    last = e
                else:
                    raise OracleProtocolError(
                        f"oracle rejected request {req_id}: HTTP {e.code}"
                    ) from None
            except (urllib.error.URLError, TimeoutError, ConnectionError, json.JSONDecodeError) as e:
                last = e
            if attempt < self.retries:
                time.sleep(0.05 * (attempt + 1))
        raise OracleTransportError(f"oracle unreachable after retries: {last}")


def open_client(endpoint: str, max_in_flight: int = 8, retries: int = 2):
    """Build a wire client from an endpoint string: ``cmd:<argv...>``
    (shell-split) or ``http://...`` / ``https://...``."""
    if endpoint.startswith("cmd:"):
        import shlex

        return StdioOracleClient(shlex.split(endpoint[4:]), max_in_flight, retries)
    if endpoint.startswith(("http://", "https://")):
        return HttpOracleClient(endpoint, retries=retries)
    raise OracleError(f"unknown oracle endpoint: {endpoint!r}")
