"""Pipeline command line.

Subcommands wire the library stages together per bundle:

    mask    bundle sources -> masks.jsonl
    score   masks.jsonl + oracle -> scores.jsonl
    ngram   bundle sources -> entropy.csv (per-bundle language models)
    rank    scores.jsonl [+ entropy.csv] -> line_scores.csv + outcomes.csv
    eval    outcomes.csv + baselines -> stats.csv
    report  outcomes.csv -> report.csv (per-method quartiles)

Every emitted artifact is deterministic for a fixed input set: files are
iterated in sorted order, JSON keys are sorted, and floats are written
with repr. Exit codes: 0 success, 1 validation error, 2 oracle failure.
"""

import argparse
import csv
import json
import statistics as pystats
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .aggregate import LINE_SCORES_HEADER, line_score_row, line_scores
from .corpus import BugBundle, BundleError, load_bundle, subject_lines, training_lines
from .lexing import lex_grammar
from .masking import DEFAULT_WINDOW_BUDGET, MASKABLE_KINDS, extract_sites, mask_record, render_variant
from .metrics import TokenScore, score_record, token_scores
from .ngram import NGramConfig, train
from .oracle import OracleError, open_client, stub_query
from .ranking import (
    OUTCOMES_HEADER,
    BugOutcome,
    bug_outcome,
    complexity_baseline,
    outcome_row,
    random_baseline,
    rank_lines,
)
from .stats import STATS_HEADER, PairedSample, stats_row

ALL_METRICS = ("conf", "cos", "acc")
ALL_AGGS = ("min", "max", "mean", "median", "entropy")
ALL_ORDERS = ("asc", "desc")
DEFAULT_TRIO = (("conf", "min", "asc"), ("cos", "max", "desc"), ("acc", "mean", "asc"))
NGRAM_TOKENIZERS = ("jp", "utf8")

REPORT_HEADER = ["method_id", "outcome_kind", "n_bugs", "min", "q1", "median", "q3", "max"]


class UsageError(Exception):
    """Bad invocation or missing/stale upstream artifact."""


@dataclass
class RunConfig:
    """One invocation's knobs, defaulting to the recommended setup:
    k=1, business-logic lines only, the conf.min.asc / cos.max.desc /
    acc.mean.asc method trio, and a 4-gram model with unk threshold 1."""

    bundle_roots: list = field(default_factory=list)
    out_dir: Path = Path("out")
    oracle: str = "stub"
    k: int = 1
    business_only: bool = True
    methods: tuple = DEFAULT_TRIO
    tokenizers: tuple = NGRAM_TOKENIZERS
    ngram_order: int = 4
    unk_threshold: int = 1
    jobs: int = 4
    seed: int = 0  # reserved for stochastic oracles; the stub is deterministic


# ---------------------------------------------------------------------------
# shared plumbing

def _bundle_dir(out_dir: Path, bundle: BugBundle) -> Path:
    d = Path(out_dir) / bundle.bundle_id
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_sorted_bundles(roots) -> list:
    bundles = [load_bundle(r) for r in roots]
    bundles.sort(key=lambda b: b.bundle_id)
    seen = set()
    for b in bundles:
        if b.bundle_id in seen:
            raise UsageError(f"duplicate bundle id {b.bundle_id!r}")
        seen.add(b.bundle_id)
    return bundles


def _subject_variants(bundle: BugBundle, business_only: bool):
    """Masked variants for every subject line, in (file, line, token)
    order. Also returns the subject records for label/complexity use."""
    records = subject_lines(bundle, business_only)
    by_file: dict = {}
    for r in records:
        by_file.setdefault(r.file, []).append(r.line_no)
    variants = []
    for path in sorted(by_file):
        seq = lex_grammar(bundle.file(path).content, source=path, strict=False)
        for site in extract_sites(seq, by_file[path]):
            variants.append(render_variant(seq, site, DEFAULT_WINDOW_BUDGET))
    return variants, records


def _stub_vocab(bundle: BugBundle) -> dict:
    """Frequencies of every maskable token across the whole bundle; the
    builtin oracle predicts from these."""
    counts: dict = {}
    for sf in bundle.files:
        seq = lex_grammar(sf.content, source=sf.path, strict=False)
        for tok in seq.tokens:
            if tok.kind in MASKABLE_KINDS:
                counts[tok.text] = counts.get(tok.text, 0) + 1
    return counts


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _require(path: Path, producer: str) -> Path:
    if not path.is_file():
        raise UsageError(f"expected artifact {path}; run `natrank {producer}` first")
    return path


# ---------------------------------------------------------------------------
# subcommands

def cmd_mask(bundle: BugBundle, out_dir: Path, business_only: bool = True) -> Path:
    variants, _ = _subject_variants(bundle, business_only)
    if not variants:
        print(f"warning: {bundle.bundle_id}: no maskable subject lines; "
              "masks.jsonl will be empty", file=sys.stderr)
    path = _bundle_dir(out_dir, bundle) / "masks.jsonl"
    _write_jsonl(path, (mask_record(v, bundle.bundle_id) for v in variants))
    return path


def cmd_score(bundle: BugBundle, out_dir: Path, oracle: str = "stub",
              k: int = 1, business_only: bool = True, jobs: int = 4) -> Path:
    masks_path = _require(Path(out_dir) / bundle.bundle_id / "masks.jsonl", "mask")
    variants, _ = _subject_variants(bundle, business_only)

    with open(masks_path, encoding="utf-8") as fh:
        on_disk = [json.loads(line) for line in fh if line.strip()]
    fresh = [mask_record(v, bundle.bundle_id) for v in variants]
    if on_disk != fresh:
        raise UsageError(
            f"stale masks.jsonl at {masks_path} (bundle or flags changed); "
            "re-run `natrank mask` with the same --business-only setting")

    if not variants:
        records = []
    elif oracle == "stub":
        records = stub_query(variants, k, want_embeddings=True,
                             vocab=_stub_vocab(bundle))
    else:
        client = open_client(oracle, max_in_flight=jobs)
        records = client.query(variants, k, want_embeddings=True)

    sites = [v.site for v in variants]
    scored = token_scores(records, sites, k)
    scored.sort(key=lambda ts: ts.variant_ref)
    path = Path(out_dir) / bundle.bundle_id / "scores.jsonl"
    _write_jsonl(path, (score_record(ts) for ts in scored))
    return path


def cmd_ngram(bundles, out_dir: Path, ngram_order: int = 4,
              unk_threshold: int = 1, tokenizers=NGRAM_TOKENIZERS,
              business_only: bool = True, jobs: int = 4) -> list:
    """Train per-bundle models on the unchanged files and score every
    subject line with each tokenizer. Bundles with nothing to train on
    are skipped with a logged reason."""

    def one(bundle: BugBundle):
        if bundle.no_train:
            return bundle, None
        records = subject_lines(bundle, business_only)
        rows = []
        for tok in tokenizers:
            cfg = NGramConfig(order=ngram_order, unk_threshold=unk_threshold,
                              tokenizer_id=tok)
            model = train(training_lines(bundle, tok), cfg)
            for r in records:
                h = model.cross_entropy(r.text)
                rows.append([r.file, r.line_no, tok,
                             "" if h is None else repr(h)])
        rows.sort(key=lambda row: (row[0], row[1], row[2]))
        return bundle, rows

    paths = []
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for bundle, rows in pool.map(one, bundles):
            if rows is None:
                print(f"skipped {bundle.bundle_id}: every file is changed, "
                      "nothing to train on", file=sys.stderr)
                continue
            path = _bundle_dir(out_dir, bundle) / "entropy.csv"
            _write_csv(path, ["file", "line", "tokenizer", "H"], rows)
            paths.append(path)
    return paths


def select_methods(metric_args, agg_args, order_args) -> tuple:
    """Expand --metric/--agg/--order into (metric, aggregator, order)
    triples. With no flags the recommended trio is used; otherwise the
    cross product of the requested sets, minus acc.entropy, which is
    undefined (accuracy scores may be zero)."""
    if not metric_args and not agg_args and not order_args:
        return DEFAULT_TRIO

    def expand(values, universe, joker):
        if not values:
            return universe
        out = []
        for v in values:
            out.extend(universe if v == joker else [v])
        return tuple(dict.fromkeys(out))

    metrics = expand(metric_args, ALL_METRICS, "all")
    aggs = expand(agg_args, ALL_AGGS, "all")
    orders = expand(order_args, ALL_ORDERS, "both")
    return tuple((m, a, o) for m in metrics for a in aggs for o in orders
                 if not (m == "acc" and a == "entropy"))


def _read_scores(path: Path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out.append(TokenScore(
                variant_ref=(obj["file"], obj["line"], obj["token_index"]),
                conf=obj["conf"], cos=obj["cos"], acc=obj["acc"],
                k_used=obj["k"],
            ))
    return out


def _read_entropy(path: Path) -> dict:
    """entropy.csv -> {tokenizer: {(file, line): H or None}}."""
    out: dict = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            ref = (row["file"], int(row["line"]))
            h = float(row["H"]) if row["H"] != "" else None
            out.setdefault(row["tokenizer"], {})[ref] = h
    return out


def cmd_rank(bundles, out_dir: Path, methods=DEFAULT_TRIO,
             business_only: bool = True) -> Path:
    """Aggregate token scores per line, rank every subject line under
    every requested method, and emit one outcome row per (bundle,
    method). N-gram entropies join in when entropy.csv is present."""
    all_outcomes = []
    for bundle in bundles:
        scores_path = _require(
            Path(out_dir) / bundle.bundle_id / "scores.jsonl", "score")
        ts = _read_scores(scores_path)
        records = subject_lines(bundle, business_only)
        subject_refs = [(r.file, r.line_no) for r in records]
        if not subject_refs:
            print(f"skipped {bundle.bundle_id}: no subject lines to rank",
                  file=sys.stderr)
            continue
        buggy = {(r.file, r.line_no) for r in records if r.label == "buggy"}

        ls_rows = []
        for metric, agg, order in methods:
            per_line = line_scores(ts, metric, agg)
            values = {ref: None for ref in subject_refs}
            for ls in per_line:
                ref = (ls.file, ls.line_no)
                if ref not in values:
                    raise UsageError(
                        f"scores.jsonl covers non-subject line {ref} "
                        "(was it produced with different --business-only?)")
                values[ref] = ls.value
            ranked = rank_lines(values, order)
            all_outcomes.append(bug_outcome(
                ranked, buggy, bundle.bundle_id, f"{metric}_{agg}_{order}"))
            ls_rows.extend(line_score_row(ls) for ls in per_line)

        entropy_path = Path(out_dir) / bundle.bundle_id / "entropy.csv"
        if entropy_path.is_file():
            for tok, per_ref in sorted(_read_entropy(entropy_path).items()):
                values = {ref: None for ref in subject_refs}
                for ref, h in per_ref.items():
                    if ref not in values:
                        raise UsageError(
                            f"entropy.csv covers non-subject line {ref}; "
                            "re-run `natrank ngram` with matching flags")
                    values[ref] = h
                for order in ALL_ORDERS:
                    ranked = rank_lines(values, order)
                    all_outcomes.append(bug_outcome(
                        ranked, buggy, bundle.bundle_id,
                        f"ngram_{tok}_{order}"))

        seen = set()
        deduped = []
        for row in sorted(ls_rows):
            key = tuple(row[:4])
            if key not in seen:
                seen.add(key)
                deduped.append(row)
        _write_csv(_bundle_dir(out_dir, bundle) / "line_scores.csv",
                   LINE_SCORES_HEADER, deduped)

    all_outcomes.sort(key=lambda o: (o.bundle_id, o.method_id))
    path = Path(out_dir) / "outcomes.csv"
    _write_csv(path, OUTCOMES_HEADER, (outcome_row(o) for o in all_outcomes))
    return path


def _read_outcomes(path: Path) -> list:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(BugOutcome(
                bundle_id=row["bundle_id"], method_id=row["method_id"],
                first_hit=float(row["first_hit"]) if row["first_hit"] else None,
                mean_rank=float(row["mean_rank"]) if row["mean_rank"] else None,
                total_lines=int(row["total_lines"]),
                buggy_lines=int(row["buggy_lines"]),
                evaluable=row["evaluable"] == "1",
            ))
    return out


def cmd_eval(bundles, out_dir: Path, business_only: bool = True) -> Path:
    """Add the analytic random baseline and the token-count complexity
    baseline to outcomes.csv, then compare every method pair with the
    paired effect size and the signed-rank test."""
    outcomes_path = _require(Path(out_dir) / "outcomes.csv", "rank")
    rows = [o for o in _read_outcomes(outcomes_path)
            if o.method_id not in ("random", "complexity")]
    by_bundle: dict = {}
    for o in rows:
        by_bundle.setdefault(o.bundle_id, []).append(o)
    for bid, group in by_bundle.items():
        if len({o.total_lines for o in group}) != 1:
            raise UsageError(
                f"outcomes.csv disagrees on total lines for {bid}; "
                "re-run `natrank rank` over all bundles in one invocation")

    given = {b.bundle_id for b in bundles}
    extra = sorted(set(by_bundle) - given)
    if extra:
        raise UsageError(
            f"outcomes.csv contains bundles not passed to eval: {extra}; "
            "pass every ranked bundle so baselines stay complete")

    for bundle in bundles:
        group = by_bundle.get(bundle.bundle_id)
        records = subject_lines(bundle, business_only)
        if not group:
            if not records:
                print(f"skipped {bundle.bundle_id}: no subject lines",
                      file=sys.stderr)
                continue
            raise UsageError(
                f"bundle {bundle.bundle_id} missing from outcomes.csv; "
                "re-run `natrank rank` with it included")
        if len(records) != group[0].total_lines:
            raise UsageError(
                f"subject-line count mismatch for {bundle.bundle_id} "
                f"({len(records)} vs {group[0].total_lines}); use the same "
                "--business-only everywhere")
        rows.append(random_baseline(
            group[0].total_lines, group[0].buggy_lines, bundle.bundle_id))
        values, order = complexity_baseline(records)
        buggy = {(r.file, r.line_no) for r in records if r.label == "buggy"}
        rows.append(bug_outcome(rank_lines(values, order), buggy,
                                bundle.bundle_id, "complexity"))

    rows.sort(key=lambda o: (o.bundle_id, o.method_id))
    _write_csv(outcomes_path, OUTCOMES_HEADER, (outcome_row(o) for o in rows))

    methods = sorted({o.method_id for o in rows})
    value_of = {(o.bundle_id, o.method_id): o for o in rows}
    bundle_ids = sorted(by_bundle)
    stat_rows = []
    for kind in ("first_hit", "mean_rank"):
        for i, a in enumerate(methods):
            for b in methods[i + 1:]:
                pairs = []
                for bid in bundle_ids:
                    oa = value_of.get((bid, a))
                    ob = value_of.get((bid, b))
                    if oa and ob and oa.evaluable and ob.evaluable:
                        pairs.append((getattr(oa, kind), getattr(ob, kind)))
                if pairs:
                    stat_rows.append(stats_row(
                        f"{a}_vs_{b}", kind,
                        PairedSample(pairs=pairs, lower_is_better=True)))
    path = Path(out_dir) / "stats.csv"
    _write_csv(path, STATS_HEADER, stat_rows)
    return path


def cmd_report(out_dir: Path) -> Path:
    """Boxplot-style five-number summary per method and outcome kind."""
    outcomes_path = _require(Path(out_dir) / "outcomes.csv", "rank")
    outcomes = _read_outcomes(outcomes_path)
    rows = []
    methods = sorted({o.method_id for o in outcomes})
    for method in methods:
        for kind in ("first_hit", "mean_rank"):
            vals = sorted(getattr(o, kind) for o in outcomes
                          if o.method_id == method and o.evaluable)
            if not vals:
                continue
            if len(vals) == 1:
                q1 = med = q3 = vals[0]
            else:
                q1, med, q3 = pystats.quantiles(vals, n=4, method="inclusive")
            rows.append([method, kind, len(vals), repr(min(vals)), repr(q1),
                         repr(med), repr(q3), repr(max(vals))])
    path = Path(out_dir) / "report.csv"
    _write_csv(path, REPORT_HEADER, rows)
    return path


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    # usage problems are validation errors: exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="natrank",
        description="Code-naturalness line ranking pipeline.",
        epilog="exit codes: 0 success, 1 validation error, 2 oracle failure")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, bundles=True):
        if bundles:
            p.add_argument("--bundle", action="append", required=True,
                           metavar="DIR", help="bundle directory (repeatable)")
        p.add_argument("--out", required=True, metavar="DIR",
                       help="artifact output directory")
        p.add_argument("--business-only", type=_parse_bool, default=True,
                       metavar="BOOL",
                       help="restrict to business-logic lines (default true)")

    p = sub.add_parser("mask", help="render masked variants to masks.jsonl")
    common(p)

    p = sub.add_parser("score", help="query the oracle, write scores.jsonl")
    common(p)
    p.add_argument("--oracle", default="stub",
                   help="stub | cmd:ARGV... | http(s)://URL (default stub)")
    p.add_argument("--k", type=int, default=1,
                   help="propositions per mask, 1..5 (default 1)")
    p.add_argument("--jobs", type=int, default=4,
                   help="concurrent in-flight oracle requests")
    p.add_argument("--seed", type=int, default=0,
                   help="reserved for stochastic oracles; stub ignores it")

    p = sub.add_parser("ngram", help="train per-bundle models, write entropy.csv")
    common(p)
    p.add_argument("--tokenizer", choices=("jp", "utf8", "both"),
                   default="both", help="line tokenizer(s) to score with")
    p.add_argument("--ngram-order", type=int, default=4, metavar="INT")
    p.add_argument("--unk-threshold", type=int, default=1, metavar="INT")
    p.add_argument("--jobs", type=int, default=4,
                   help="bundles trained concurrently")

    p = sub.add_parser("rank", help="rank lines, write outcomes.csv")
    common(p)
    p.add_argument("--metric", action="append",
                   choices=("conf", "cos", "acc", "all"),
                   help="repeatable; default: the recommended trio")
    p.add_argument("--agg", action="append",
                   choices=("min", "max", "mean", "median", "entropy", "all"))
    p.add_argument("--order", action="append", choices=("asc", "desc", "both"))

    p = sub.add_parser("eval", help="add baselines, compare methods, write stats.csv")
    common(p)

    p = sub.add_parser("report", help="per-method quartile summary from outcomes.csv")
    common(p, bundles=False)

    return parser


def _config_from(args) -> RunConfig:
    if args.command == "rank":
        methods = select_methods(args.metric, args.agg, args.order)
    else:
        methods = DEFAULT_TRIO
    if getattr(args, "tokenizer", "both") == "both":
        tokenizers = NGRAM_TOKENIZERS
    else:
        tokenizers = (args.tokenizer,)
    return RunConfig(
        bundle_roots=list(getattr(args, "bundle", []) or []),
        out_dir=Path(args.out),
        oracle=getattr(args, "oracle", "stub"),
        k=getattr(args, "k", 1),
        business_only=getattr(args, "business_only", True),
        methods=methods,
        tokenizers=tokenizers,
        ngram_order=getattr(args, "ngram_order", 4),
        unk_threshold=getattr(args, "unk_threshold", 1),
        jobs=getattr(args, "jobs", 4),
        seed=getattr(args, "seed", 0),
    )


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits; keep main() returning
        return int(exc.code or 0)
    try:
        cfg = _config_from(args)
        if args.command == "report":
            cmd_report(cfg.out_dir)
            return 0
        bundles = _load_sorted_bundles(cfg.bundle_roots)
        if args.command == "mask":
            for b in bundles:
                cmd_mask(b, cfg.out_dir, cfg.business_only)
        elif args.command == "score":
            if not 1 <= cfg.k <= 5:
                raise UsageError(f"--k must be in 1..5, got {cfg.k}")
            for b in bundles:
                cmd_score(b, cfg.out_dir, cfg.oracle, cfg.k,
                          cfg.business_only, cfg.jobs)
        elif args.command == "ngram":
            cmd_ngram(bundles, cfg.out_dir, cfg.ngram_order,
                      cfg.unk_threshold, cfg.tokenizers,
                      cfg.business_only, cfg.jobs)
        elif args.command == "rank":
            cmd_rank(bundles, cfg.out_dir, cfg.methods, cfg.business_only)
        elif args.command == "eval":
            cmd_eval(bundles, cfg.out_dir, cfg.business_only)
    except (BundleError, UsageError, ValueError, OSError) as exc:
        print(f"natrank: error: {exc}", file=sys.stderr)
        return 1
    except OracleError as exc:
        print(f"natrank: oracle failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
