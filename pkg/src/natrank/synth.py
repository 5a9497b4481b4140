"""Synthetic Java bug bundles for end-to-end runs, demos, and tests.

The generator plants buggy lines that break the texture of the rest of
the code: each carries an identifier seen nowhere else, an unusual
operator, and a numeric literal unique within the bundle. Neutral
statement lines stick to a small, heavily reused pool of identifiers
and arithmetic operators and contain no literals at all, so every
naturalness signal in the toolkit (prediction confidence, exact-match
accuracy, n-gram cross-entropy) has something to notice.
"""

import json
import random
from pathlib import Path

COMMON_IDENTS = [
    ("total", 8), ("delta", 5), ("count", 4), ("index", 3),
    ("limit", 2), ("cursor", 2), ("offset", 1), ("state", 1),
]
RARE_IDENTS = ["checksum", "sentinel", "probe", "relic", "quirk", "fudge"]
RARE_OPS = ["^", "%", ">>>", "|", "&"]

NEUTRAL_TEMPLATES = [
    "{a} = {a} + {b};",
    "{a} = {b};",
    "{a} += {b};",
    "{a} -= {b};",
    "{a} = {a} - {b};",
    "{a} = {b} + {c};",
]
BUGGY_TEMPLATES = [
    "{r} = {a} {op} {lit};",
    "{a} = {r} {op} {lit};",
    "{r} = {r} {op} {lit};",
]
COMMENTS = [
    "// keep the running totals in step",
    "// callers rely on this ordering",
    "// bounds were checked upstream",
]

TRAIN_FILES = ["Alpha", "Beta", "Gamma"]
CHANGED_FILES = ["Delta", "Epsilon"]


def _pick_ident(rng):
    names = [n for n, _ in COMMON_IDENTS]
    weights = [w for _, w in COMMON_IDENTS]
    return rng.choices(names, weights=weights, k=1)[0]


def _neutral_statement(rng) -> str:
    tpl = rng.choice(NEUTRAL_TEMPLATES)
    a = _pick_ident(rng)
    b = _pick_ident(rng)
    c = _pick_ident(rng)
    return tpl.format(a=a, b=b, c=c)


def statement_corpus(n_lines: int = 200, seed: int = 11) -> list:
    """Repetitive statement lines, the raw material for language-model
    naturalness checks."""
    rng = random.Random(seed)
    return [_neutral_statement(rng) for _ in range(n_lines)]


def _method(rng, name: str, body_lines: list) -> list:
    lines = [f"    public void {name}() {{"]
    for stmt in body_lines:
        lines.append(f"        {stmt}")
    lines.append("    }")
    return lines


def _training_file(rng, class_name: str, literals: list) -> str:
    lines = [
        "/* synthetic fixture, machine generated */",
        f"public class {class_name} {{",
    ]
    for i, lit in enumerate(literals):
        lines.append(f"    private int seed{class_name}{i} = {lit};")
    lines.append("")
    for m in range(2):
        body = [_neutral_statement(rng) for _ in range(rng.randint(5, 7))]
        lines.extend(_method(rng, f"step{m}", body))
        lines.append("")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _changed_file(rng, class_name: str, bug_stmts: list):
    """Build one changed file; returns (content, buggy line numbers)."""
    lines = [f"public class {class_name} {{"]
    buggy_line_nos = []
    pending = list(bug_stmts)
    n_methods = rng.randint(2, 3)
    for m in range(n_methods):
        body = [_neutral_statement(rng) for _ in range(rng.randint(4, 6))]
        if rng.random() < 0.5:
            body.insert(rng.randrange(len(body) + 1), rng.choice(COMMENTS))
        # plant this method's share of the buggy statements
        while pending and (m == n_methods - 1 or rng.random() < 0.5):
            body.insert(rng.randrange(len(body) + 1), pending.pop())
        block = _method(rng, f"apply{m}", body)
        for offset, text in enumerate(block):
            if text.strip() in bug_stmts:
                buggy_line_nos.append(len(lines) + offset + 1)
        lines.extend(block)
        lines.append("")
    lines.append("}")
    return "\n".join(lines) + "\n", sorted(buggy_line_nos)


def generate_bundle(root, bundle_id: str, project_id: str, seed: int):
    """Write one bundle directory under ``root``; returns its path."""
    rng = random.Random(seed)
    bundle_root = Path(root) / bundle_id
    src = bundle_root / "src"
    src.mkdir(parents=True, exist_ok=True)

    # one shared pool of unique literals keeps the literal vocabulary flat
    literal_pool = rng.sample(range(1009, 99991), 40)
    train_literals = [literal_pool[i:i + 4] for i in range(0, 12, 4)]

    for name, lits in zip(TRAIN_FILES, train_literals):
        (src / f"{name}.java").write_text(
            _training_file(rng, name, lits), encoding="utf-8")

    n_buggy = rng.randint(1, 3)
    bug_stmts = []
    bug_literals = literal_pool[12:12 + n_buggy]
    for lit in bug_literals:
        tpl = rng.choice(BUGGY_TEMPLATES)
        bug_stmts.append(tpl.format(
            r=rng.choice(RARE_IDENTS), a=_pick_ident(rng),
            op=rng.choice(RARE_OPS), lit=lit,
        ))
    split = rng.randint(0, n_buggy)
    shares = [bug_stmts[:split], bug_stmts[split:]]

    buggy_lines = {}
    for name, share in zip(CHANGED_FILES, shares):
        content, line_nos = _changed_file(rng, name, share)
        (src / f"{name}.java").write_text(content, encoding="utf-8")
        if line_nos:
            buggy_lines[f"{name}.java"] = line_nos

    manifest = {
        "bundle_id": bundle_id,
        "project_id": project_id,
        "changed_files": [f"{n}.java" for n in CHANGED_FILES],
        "buggy_lines": buggy_lines,
    }
    (bundle_root / "bundle.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return bundle_root


def generate_dataset(root, n_bundles: int = 30, seed: int = 20240801):
    """Write ``n_bundles`` bundles under ``root``; returns their paths
    in bundle-id order. Fully deterministic for a given seed."""
    rng = random.Random(seed)
    paths = []
    for i in range(n_bundles):
        child_seed = rng.randrange(2 ** 32)
        paths.append(generate_bundle(
            root, f"golden_{i:03d}", "synthproj", child_seed))
    return paths
