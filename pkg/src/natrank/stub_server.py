"""Reference fill-mask server for the line protocol.

Answers from a token frequency table instead of a model, so transport
code can be exercised hermetically. Because the wire carries only the
window, this server cannot see the masked token's kind or original
text; it ranks over the global vocabulary and embeds the original
window with the placeholder left in place. The in-process stub
(:func:`natrank.oracle.stub_query`) is sharper on both counts.

Run over stdio (default) or HTTP (``--http PORT``). The ``--die-after``,
``--stray-id``, ``--dup-id``, ``--bad-version``, and ``--error-token``
flags inject protocol faults for client tests.
"""

import argparse
import json
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .masking import PLACEHOLDER
from .oracle import MAX_PROPOSITIONS, PROTOCOL_VERSION, hashed_embedding

# Standalone default so the server runs with no vocab file.
DEFAULT_VOCAB = {
    "i": 40, "value": 32, "result": 28, "x": 25, "count": 22, "name": 18,
    "size": 15, "get": 12, "list": 10, "index": 9,
    "=": 60, "+": 30, "==": 22, "<": 14, "-": 12, "*": 8, "&&": 6,
    "0": 35, "1": 30, "2": 12, '""': 8, "null": 7, "true": 6, "false": 5,
}


class _Responder:
    def __init__(self, vocab, faults):
        self.ranked = sorted(vocab.items(), key=lambda tc: (-tc[1], tc[0]))
        self.total = sum(vocab.values())
        self.faults = faults
        self.sent = 0

    def answer(self, obj) -> list[dict]:
        """Build the response line(s) for one request object."""
        req_id = obj.get("id", "?") if isinstance(obj, dict) else "?"

        def err(msg):
            return [{"id": req_id, "error": msg, "v": PROTOCOL_VERSION}]

        if not isinstance(obj, dict):
            return err("request is not an object")
        if obj.get("v") != PROTOCOL_VERSION:
            return err(f"unsupported protocol version {obj.get('v')!r}")
        window = obj.get("window")
        k = obj.get("k")
        if not isinstance(window, list) or not all(isinstance(t, str) for t in window):
            return err("window must be a list of strings")
        if window.count(PLACEHOLDER) != 1:
            return err("window must contain exactly one placeholder")
        if not isinstance(k, int) or not 1 <= k <= MAX_PROPOSITIONS:
            return err(f"k must be in 1..{MAX_PROPOSITIONS}")

        fault_token = self.faults.get("error_token")
        if fault_token is not None and fault_token in window:
            return err(f"refusing window containing {fault_token!r}")

        props = [
            {"token": text, "confidence": count / self.total}
            for text, count in self.ranked[:k]
        ]
        resp = {"id": req_id, "propositions": props, "v": PROTOCOL_VERSION}
        if obj.get("embeddings"):
            pos = window.index(PLACEHOLDER)
            pred = list(window)
            pred[pos] = props[0]["token"]
            resp["emb_orig"] = list(hashed_embedding(window))
            resp["emb_pred"] = list(hashed_embedding(pred))

        out = [resp]
        if self.faults.get("stray_id") and self.sent == 0:
            out.insert(0, {"id": "stray-0", "propositions": props, "v": PROTOCOL_VERSION})
        if self.faults.get("dup_id"):
            out.append(dict(resp))
        if self.faults.get("bad_version"):
            for o in out:
                o["v"] = PROTOCOL_VERSION + 1
        self.sent += 1
        return out


def serve_stdio(responder, die_after=None, reorder=None, inp=None, outp=None):
    inp = inp or sys.stdin
    outp = outp or sys.stdout
    answered = 0
    held = []

    def emit(resp):
        outp.write(json.dumps(resp, sort_keys=True) + "\n")
        outp.flush()

    for line in inp:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            obj = None
        for resp in responder.answer(obj):
            if reorder:
                held.append(resp)
                if len(held) >= reorder:
                    for r in reversed(held):
                        emit(r)
                    held.clear()
            else:
                emit(resp)
        answered += 1
        if die_after is not None and answered >= die_after:
            return 1
    for r in reversed(held):
        emit(r)
    return 0


def make_http_server(responder, port):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                obj = json.loads(self.rfile.read(length).decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError):
                obj = None
            body = json.dumps(responder.answer(obj)[-1], sort_keys=True).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


def serve_http(responder, port):
    server = make_http_server(responder, port)
    print(f"listening on 127.0.0.1:{server.server_address[1]}", file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="natrank-stub-server", description=__doc__)
    ap.add_argument("--vocab", help="JSON file mapping token text to count")
    ap.add_argument("--http", type=int, metavar="PORT", help="serve HTTP instead of stdio")
    ap.add_argument("--die-after", type=int, metavar="N", help="exit after N stdio requests")
    ap.add_argument("--reorder", type=int, metavar="N", help="buffer N responses and emit them reversed")
    ap.add_argument("--stray-id", action="store_true", help="emit one response with an unknown id")
    ap.add_argument("--dup-id", action="store_true", help="answer every request twice")
    ap.add_argument("--bad-version", action="store_true", help="stamp responses with a wrong version")
    ap.add_argument("--error-token", metavar="TEXT", help="reject windows containing TEXT")
    args = ap.parse_args(argv)

    if args.vocab:
        with open(args.vocab, encoding="utf-8") as fh:
            vocab = {str(k): int(v) for k, v in json.load(fh).items()}
    else:
        vocab = DEFAULT_VOCAB
    faults = {
        "stray_id": args.stray_id,
        "dup_id": args.dup_id,
        "bad_version": args.bad_version,
        "error_token": args.error_token,
    }
    responder = _Responder(vocab, faults)
    if args.http is not None:
        return serve_http(responder, args.http)
    return serve_stdio(responder, die_after=args.die_after, reorder=args.reorder)


if __name__ == "__main__":
    sys.exit(main())
