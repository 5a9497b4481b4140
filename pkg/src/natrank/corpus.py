"""Bug bundles: a defect snapshot on disk and the queries over it.

A bundle directory holds ``bundle.json`` plus a ``src/`` tree. The
manifest names which files the fix touched and which of their lines
were buggy; every other file in the tree is training material.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .lexing import classify_lines, lex_grammar, line_token_count


class BundleError(ValueError):
    """Malformed bundle: bad manifest, bad paths, or bad labels."""


@dataclass(frozen=True)
class SourceFile:
    """One file's decoded content plus a per-line byte index."""

    path: str
    content: str
    line_index: tuple[tuple[int, int], ...]  # (byte offset, byte length) per line

    @property
    def line_count(self) -> int:
        return len(self.line_index)

    def lines(self) -> list[str]:
        raw = self.content.encode("utf-8")
        return [
            raw[off:off + length].decode("utf-8")
            for off, length in self.line_index
        ]

    def line_text(self, line_no: int) -> str:
        off, length = self.line_index[line_no - 1]
        raw = self.content.encode("utf-8")
        return raw[off:off + length].decode("utf-8")


@dataclass(frozen=True)
class LineRecord:
    """A subject line with its label and complexity measure."""

    file: str
    line_no: int
    text: str
    label: str  # buggy | neutral
    is_business_logic: bool
    token_count: int


@dataclass
class BugBundle:
    """An immutable defect snapshot: files, changed set, buggy labels."""

    bundle_id: str
    project_id: str
    files: list[SourceFile]
    changed_files: set[str]
    buggy_lines: dict[str, set[int]]
    no_train: bool = False
    _by_path: dict[str, SourceFile] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_path = {f.path: f for f in self.files}

    def file(self, path: str) -> SourceFile:
        return self._by_path[path]

    def unchanged_files(self) -> list[SourceFile]:
        return [f for f in self.files if f.path not in self.changed_files]


def _index_lines(content: str) -> tuple[tuple[int, int], ...]:
    """Byte offset and length of every line, terminators excluded.
    A trailing newline does not create a phantom final line."""
    index: list[tuple[int, int]] = []
    raw = content.encode("utf-8")
    start = 0
    i = 0
    n = len(raw)
    while i < n:
        if raw[i:i + 1] == b"\n":
            end = i
            if end > start and raw[end - 1:end] == b"\r":
                end -= 1
            index.append((start, end - start))
            start = i + 1
        i += 1
    if start < n:
        index.append((start, n - start))
    return tuple(index)


def load_bundle(root) -> BugBundle:
    """Read and validate a bundle directory.

    Raises :class:`BundleError` for a missing manifest, a manifest path
    that escapes the bundle or names a missing file, an out-of-range
    buggy line, a buggy path outside ``changed_files``, an empty
    ``changed_files`` list, or a file that is not valid UTF-8.
    """
    root = Path(root)
    manifest_path = root / "bundle.json"
    if not manifest_path.is_file():
        raise BundleError(f"missing manifest: {manifest_path}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)

    for key in ("bundle_id", "project_id", "changed_files", "buggy_lines"):
        if key not in manifest:
            raise BundleError(f"manifest missing key {key!r}")

    src_root = (root / "src").resolve()
    if not src_root.is_dir():
        raise BundleError(f"missing source tree: {src_root}")

    files: list[SourceFile] = []
    for fp in sorted(src_root.rglob("*")):
        if not fp.is_file():
            continue
        rel = fp.relative_to(src_root).as_posix()
        try:
            content = fp.read_bytes().decode("utf-8")
        except UnicodeDecodeError as e:
            raise BundleError(f"file is not UTF-8: {rel}: {e}") from None
        files.append(SourceFile(path=rel, content=content, line_index=_index_lines(content)))
    by_path = {f.path: f for f in files}

    changed = manifest["changed_files"]
    if not changed:
        raise BundleError("no subject lines: changed_files is empty")
    changed_set = set()
    for p in changed:
        norm = Path(p).as_posix()
        if norm.startswith("/") or ".." in Path(norm).parts:
            raise BundleError(f"path escapes bundle: {p}")
        if norm not in by_path:
            raise BundleError(f"changed file not in bundle: {p}")
        changed_set.add(norm)

    buggy: dict[str, set[int]] = {}
    for p, line_list in manifest["buggy_lines"].items():
        norm = Path(p).as_posix()
        if norm not in by_path:
            raise BundleError(f"buggy_lines path not in bundle: {p}")
        if norm not in changed_set:
            raise BundleError(f"buggy_lines path not marked changed: {p}")
        sf = by_path[norm]
        nums = set()
        for ln in line_list:
            if not isinstance(ln, int) or ln < 1 or ln > sf.line_count:
                raise BundleError(
                    f"line out of range: {norm}:{ln} (file has {sf.line_count} lines)"
                )
            nums.add(ln)
        buggy[norm] = nums

    no_train = len(changed_set) == len(files)
    return BugBundle(
        bundle_id=manifest["bundle_id"],
        project_id=manifest["project_id"],
        files=files,
        changed_files=changed_set,
        buggy_lines=buggy,
        no_train=no_train,
    )


def subject_lines(bundle: BugBundle, business_only: bool) -> list[LineRecord]:
    """All lines of the changed files, labeled buggy or neutral.

    With ``business_only`` the non-business-logic lines (imports,
    braces, signatures, fields, comments, blanks) are dropped, buggy
    or not. Order is (path, line_no), so output is reproducible.
    """
    records: list[LineRecord] = []
    for path in sorted(bundle.changed_files):
        sf = bundle.file(path)
        seq = lex_grammar(sf.content, source=path, strict=False)
        cls = classify_lines(seq, sf.content)
        buggy = bundle.buggy_lines.get(path, set())
        texts = sf.lines()
        for line_no in range(1, sf.line_count + 1):
            is_bl = cls.is_business_logic.get(line_no, False)
            if business_only and not is_bl:
                continue
            records.append(LineRecord(
                file=path,
                line_no=line_no,
                text=texts[line_no - 1],
                label="buggy" if line_no in buggy else "neutral",
                is_business_logic=is_bl,
                token_count=line_token_count(seq, line_no),
            ))
    return records


def training_lines(bundle: BugBundle, tokenizer_id: str = "jp") -> list[str]:
    """Raw lines of every unchanged file, in (path, line_no) order.

    Empty and comment-only lines are included verbatim; whether they
    contribute tokens is the tokenizer's decision, not this function's.
    ``tokenizer_id`` is carried for symmetry with the scoring side.
    """
    if bundle.no_train:
        raise BundleError(
            f"bundle {bundle.bundle_id} has no unchanged files to train on"
        )
    out: list[str] = []
    for sf in sorted(bundle.unchanged_files(), key=lambda f: f.path):
        out.extend(sf.lines())
    return out
