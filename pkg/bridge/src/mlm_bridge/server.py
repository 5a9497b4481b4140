"""Serve a pretrained masked language model over the fill-mask wire
protocol: newline-delimited JSON on stdio, or the same bodies over
HTTP POST. One response per request; ordering is unconstrained.
"""

import argparse
import json
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .engine import (
    PROTOCOL_VERSION, BridgeConfig, BridgeRequestError, MaskedLMEngine)


class Responder:
    """Validate one request object and produce one response object."""

    def __init__(self, engine: MaskedLMEngine):
        self.engine = engine

    def answer(self, obj) -> dict:
        req_id = obj.get("id", "?") if isinstance(obj, dict) else "?"

        def err(msg):
            return {"id": req_id, "error": msg, "v": PROTOCOL_VERSION}

        if not isinstance(obj, dict):
            return err("request is not an object")
        if obj.get("v") != PROTOCOL_VERSION:
            return err(f"unsupported version {obj.get('v')!r}")
        window = obj.get("window")
        if not isinstance(window, list) or \
                not all(isinstance(t, str) for t in window):
            return err("window must be a list of strings")
        try:
            resp = self.engine.predict(
                window, obj.get("k"), bool(obj.get("embeddings")))
        except BridgeRequestError as e:
            return err(str(e))
        resp["id"] = req_id
        resp["v"] = PROTOCOL_VERSION
        return resp


def serve_stdio(responder: Responder, inp=None, outp=None) -> int:
    inp = inp if inp is not None else sys.stdin
    outp = outp if outp is not None else sys.stdout
    for line in inp:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            obj = None
        outp.write(json.dumps(responder.answer(obj), sort_keys=True) + "\n")
        outp.flush()
    return 0


def make_http_server(responder: Responder, port: int) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                obj = json.loads(self.rfile.read(length).decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError):
                obj = None
            body = json.dumps(responder.answer(obj), sort_keys=True).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


def serve_http(responder: Responder, port: int) -> int:
    server = make_http_server(responder, port)
    print(f"listening on 127.0.0.1:{server.server_address[1]}",
          file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="mlm-bridge", description=__doc__)
    ap.add_argument("--model", required=True,
                    help="pretrained model id or local checkpoint path")
    ap.add_argument("--transport", choices=["stdio", "http"], default="stdio")
    ap.add_argument("--port", type=int, default=8471, help="http port")
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--max-len", type=int, default=512,
                    help="encoder budget in sub-tokens")
    args = ap.parse_args(argv)

    cfg = BridgeConfig(model=args.model, device=args.device,
                       max_len=args.max_len, transport=args.transport,
                       port=args.port)
    try:
        engine = MaskedLMEngine(cfg)
    except Exception as e:
        print(f"mlm-bridge: cannot load model {cfg.model!r}: {e}",
              file=sys.stderr)
        return 1

    responder = Responder(engine)
    if cfg.transport == "http":
        return serve_http(responder, cfg.port)
    return serve_stdio(responder)


if __name__ == "__main__":
    sys.exit(main())
