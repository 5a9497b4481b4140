"""Java tokenization: a grammar-aware lexer, a raw whitespace tokenizer,
and a line classifier that separates business-logic statements from
structural scaffolding (imports, field declarations, lone braces, ...).

The grammar lexer is a plain hand-written scanner, not a parser: it knows
the Java token shapes (keywords, identifiers, literals, operators,
separators, comments, annotations) and nothing about types or scopes.
Line classification is a brace-depth heuristic layered on top of it.
"""

import re
from dataclasses import dataclass, field


KEYWORDS = frozenset({
    "abstract", "assert", "boolean", "break", "byte", "case", "catch",
    "char", "class", "const", "continue", "default", "do", "double",
    "else", "enum", "extends", "final", "finally", "float", "for", "goto",
    "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return",
    "short", "static", "strictfp", "super", "switch", "synchronized",
    "this", "throw", "throws", "transient", "try", "void", "volatile",
    "while",
})

BOOL_NULL = frozenset({"true", "false", "null"})

# Multi-character operators, longest first so the scanner takes the
# maximal munch. ``::`` and ``...`` are separators (see below).
_MULTI_OPS = [
    ">>>=",
    ">>>", ">>=", "<<=",
    "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=",
    "<<", ">>", "->",
]
_SINGLE_OPS = set("=><!~?:+-*/&|^%")
_SEPARATORS = set("(){}[];,.")

_NUMBER_RE = re.compile(
    r"0[xX][0-9a-fA-F_]+[lL]?"
    r"|0[bB][01_]+[lL]?"
    r"|(?:\d[\d_]*\.?[\d_]*|\.\d[\d_]*)(?:[eE][+-]?\d[\d_]*)?[fFdDlL]?"
)

_RAW_TOKEN_RE = re.compile(r"\S+")


class JavaLexError(ValueError):
    """Raised for unterminated strings, chars, and block comments."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Token:
    """One lexical token with its provenance inside the file."""

    text: str
    kind: str  # keyword | identifier | literal_number | literal_string |
    #            literal_char | literal_bool_null | operator | separator |
    #            comment | annotation | whitespace
    line_no: int  # 1-based line of the token's first character
    col: int  # 0-based byte column on that line
    byte_span: tuple[int, int]  # (offset, length) into the UTF-8 content


@dataclass
class TokenSequence:
    """Ordered, non-overlapping tokens of one source file."""

    tokens: list[Token] = field(default_factory=list)
    source: str = "<memory>"

    def on_line(self, line_no: int) -> list[Token]:
        return [t for t in self.tokens if t.line_no == line_no]


@dataclass
class LineClassification:
    """Per-line business-logic verdicts plus a brace-balance warning."""

    is_business_logic: dict[int, bool]
    brace_warning: bool = False

    def __getitem__(self, line_no: int) -> bool:
        return self.is_business_logic[line_no]


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def _is_ident_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


class _Scanner:
    """Cursor over the decoded text, tracking line/column/byte offsets."""

    def __init__(self, text: str, strict: bool):
        self.text = text
        self.strict = strict
        self.pos = 0
        self.line = 1
        self.col = 0
        # byte offset of each char position, so byte_span slices the
        # UTF-8 encoding of the file exactly even with non-ASCII content
        offsets = [0] * (len(text) + 1)
        acc = 0
        for i, ch in enumerate(text):
            offsets[i] = acc
            acc += len(ch.encode("utf-8"))
        offsets[len(text)] = acc
        self.byte_at = offsets

    def peek(self, ahead: int = 0) -> str:
        i = self.pos + ahead
        return self.text[i] if i < len(self.text) else ""

    def startswith(self, s: str) -> bool:
        return self.text.startswith(s, self.pos)

    def advance(self, n: int) -> None:
        for _ in range(n):
            if self.text[self.pos] == "\n":
                self.line += 1
                self.col = 0
            else:
                self.col += len(self.text[self.pos].encode("utf-8"))
            self.pos += 1

    def make_token(self, start: int, start_line: int, start_col: int, kind: str) -> Token:
        text = self.text[start:self.pos]
        b0 = self.byte_at[start]
        return Token(
            text=text,
            kind=kind,
            line_no=start_line,
            col=start_col,
            byte_span=(b0, self.byte_at[self.pos] - b0),
        )


def lex_grammar(content: str, source: str = "<memory>", strict: bool = True) -> TokenSequence:
    """Tokenize Java source according to the language grammar.

    Comments (including javadoc) come out as ``comment`` tokens and runs
    of whitespace as ``whitespace`` tokens, so the concatenation of all
    token texts reproduces the input; downstream consumers filter.
    Unicode escapes are kept verbatim.

    With ``strict=True`` an unterminated string, char, or block comment
    raises :class:`JavaLexError`; with ``strict=False`` the remainder of
    the input becomes a single token of the started kind (used by the
    line-at-a-time tokenizer, which routinely sees comment fragments).
    """
    sc = _Scanner(content, strict)
    tokens: list[Token] = []

    while sc.pos < len(sc.text):
        start, line0, col0 = sc.pos, sc.line, sc.col
        ch = sc.peek()

        if ch.isspace():
            while sc.pos < len(sc.text) and sc.peek().isspace():
                sc.advance(1)
            tokens.append(sc.make_token(start, line0, col0, "whitespace"))
            continue

        if sc.startswith("//"):
            while sc.pos < len(sc.text) and sc.peek() != "\n":
                sc.advance(1)
            tokens.append(sc.make_token(start, line0, col0, "comment"))
            continue

        if sc.startswith("/*"):
            sc.advance(2)
            closed = False
            while sc.pos < len(sc.text):
                if sc.startswith("*/"):
                    sc.advance(2)
                    closed = True
                    break
                sc.advance(1)
            if not closed and strict:
                raise JavaLexError("unterminated block comment", line0)
            tokens.append(sc.make_token(start, line0, col0, "comment"))
            continue

        if ch == '"' or ch == "'":
            quote = ch
            kind = "literal_string" if quote == '"' else "literal_char"
            sc.advance(1)
            closed = False
            while sc.pos < len(sc.text):
                c = sc.peek()
                if c == "\\" and sc.pos + 1 < len(sc.text):
                    sc.advance(2)
                    continue
                if c == quote:
                    sc.advance(1)
                    closed = True
                    break
                if c == "\n":
                    break
                sc.advance(1)
            if not closed and strict:
                what = "string" if quote == '"' else "char"
                raise JavaLexError(f"unterminated {what} literal", line0)
            tokens.append(sc.make_token(start, line0, col0, kind))
            continue

        if ch.isdigit() or (ch == "." and sc.peek(1).isdigit()):
            m = _NUMBER_RE.match(sc.text, sc.pos)
            sc.advance(m.end() - sc.pos)
            tokens.append(sc.make_token(start, line0, col0, "literal_number"))
            continue

        if ch == "@" and _is_ident_start(sc.peek(1)):
            sc.advance(1)
            while sc.pos < len(sc.text) and _is_ident_part(sc.peek()):
                sc.advance(1)
            tokens.append(sc.make_token(start, line0, col0, "annotation"))
            continue

        if _is_ident_start(ch):
            while sc.pos < len(sc.text) and _is_ident_part(sc.peek()):
                sc.advance(1)
            word = sc.text[start:sc.pos]
            if word in KEYWORDS:
                kind = "keyword"
            elif word in BOOL_NULL:
                kind = "literal_bool_null"
            else:
                kind = "identifier"
            tokens.append(sc.make_token(start, line0, col0, kind))
            continue

        if sc.startswith("..."):
            sc.advance(3)
            tokens.append(sc.make_token(start, line0, col0, "separator"))
            continue
        if sc.startswith("::"):
            sc.advance(2)
            tokens.append(sc.make_token(start, line0, col0, "separator"))
            continue

        matched_op = None
        for op in _MULTI_OPS:
            if sc.startswith(op):
                matched_op = op
                break
        if matched_op:
            sc.advance(len(matched_op))
            tokens.append(sc.make_token(start, line0, col0, "operator"))
            continue
        if ch in _SINGLE_OPS:
            sc.advance(1)
            tokens.append(sc.make_token(start, line0, col0, "operator"))
            continue
        if ch in _SEPARATORS or ch == "@":
            sc.advance(1)
            tokens.append(sc.make_token(start, line0, col0, "separator"))
            continue

        # Anything else (stray backslash, control char) is kept as a
        # one-character separator so the scan stays lossless.
        sc.advance(1)
        tokens.append(sc.make_token(start, line0, col0, "separator"))

    return TokenSequence(tokens=tokens, source=source)


def lex_raw(content: str, source: str = "<memory>") -> TokenSequence:
    """Tokenize as flat text: every maximal non-whitespace run is one
    token of kind ``identifier``. Comments are tokenized like any text;
    empty lines yield nothing."""
    sc = _Scanner(content, strict=False)  # reuse the byte-offset table
    tokens: list[Token] = []
    char_line_starts = [0]
    for i, ch in enumerate(content):
        if ch == "\n":
            char_line_starts.append(i + 1)

    for line_idx, line_start in enumerate(char_line_starts):
        line_end = content.find("\n", line_start)
        if line_end == -1:
            line_end = len(content)
        line = content[line_start:line_end]
        for m in _RAW_TOKEN_RE.finditer(line):
            c0 = line_start + m.start()
            c1 = line_start + m.end()
            b0 = sc.byte_at[c0]
            tokens.append(Token(
                text=m.group(),
                kind="identifier",
                line_no=line_idx + 1,
                col=sc.byte_at[c0] - sc.byte_at[line_start],
                byte_span=(b0, sc.byte_at[c1] - b0),
            ))
    return TokenSequence(tokens=tokens, source=source)


_CONTROL_PAREN_KEYWORDS = frozenset({"if", "while", "for", "switch", "catch", "synchronized"})
_BLOCK_KEYWORDS = frozenset({"do", "try", "else", "finally"})
_THROWS_CLAUSE_OK = frozenset({"identifier", "separator", "keyword"})


def _significant(tokens: list[Token]) -> list[Token]:
    return [t for t in tokens if t.kind not in ("whitespace", "comment")]


def _match_open_paren(sig: list[Token], close_idx: int) -> int:
    depth = 0
    for i in range(close_idx, -1, -1):
        t = sig[i]
        if t.kind == "separator" and t.text == ")":
            depth += 1
        elif t.kind == "separator" and t.text == "(":
            depth -= 1
            if depth == 0:
                return i
    return -1


def _label_brace(sig: list[Token], open_idx: int, region_stack: list[str]) -> str:
    """Decide what kind of region a ``{`` opens: 'type', 'method',
    'initializer', or 'block'."""
    # header = significant tokens back to the previous { } or ;
    header_start = 0
    for i in range(open_idx - 1, -1, -1):
        t = sig[i]
        if t.kind == "separator" and t.text in "{};":
            header_start = i + 1
            break
    header = sig[header_start:open_idx]

    for hi, t in enumerate(header):
        if t.kind == "keyword" and t.text in ("class", "interface", "enum"):
            return "type"
        # `record` is contextual: only a type declaration when followed by a name
        if (
            t.kind == "identifier"
            and t.text == "record"
            and hi + 1 < len(header)
            and header[hi + 1].kind == "identifier"
        ):
            return "type"

    if not header:
        innermost = region_stack[-1] if region_stack else None
        return "initializer" if innermost == "type" else "block"

    last = header[-1]

    # allow a throws clause between the parameter list and the brace
    close_idx = None
    if last.kind == "separator" and last.text == ")":
        close_idx = open_idx - 1
    else:
        for i in range(open_idx - 1, header_start - 1, -1):
            t = sig[i]
            if t.kind == "keyword" and t.text == "throws":
                for j in range(i - 1, header_start - 1, -1):
                    if sig[j].kind == "separator" and sig[j].text == ")":
                        close_idx = j
                    break
                break
            if t.kind not in _THROWS_CLAUSE_OK or (t.kind == "separator" and t.text not in (",", ".")):
                break

    if close_idx is not None:
        oi = _match_open_paren(sig, close_idx)
        if oi > 0:
            before = sig[oi - 1]
            if before.kind == "identifier":
                before2 = sig[oi - 2] if oi >= 2 else None
                if before2 is not None and before2.kind == "keyword" and before2.text == "new":
                    return "type"  # anonymous class body
                return "method"
            if before.kind == "keyword" and before.text in _CONTROL_PAREN_KEYWORDS:
                return "block"
        return "block"

    if last.kind == "keyword" and last.text == "static":
        return "initializer"
    if last.kind == "operator" and last.text == "->":
        return "block"
    if last.kind == "keyword" and last.text in _BLOCK_KEYWORDS:
        return "block"
    if (last.kind == "separator" and last.text in (",", "[", "]")) or (
        last.kind == "operator" and last.text == "="
    ):
        return "block"
    if not region_stack:
        return "type"
    return "block"


def classify_lines(seq: TokenSequence, content: str) -> LineClassification:
    """Classify each line of ``content`` as business-logic or not.

    A line counts as business logic when it sits strictly inside a
    method or initializer body, carries at least one non-comment token,
    is not pure separators/braces, and does not start with ``import``,
    ``package``, or an annotation. Field declarations at type level fail
    the body test and are excluded with everything else at that depth.

    Unbalanced braces do not raise; classification proceeds best-effort
    and the result carries ``brace_warning=True``.
    """
    sig = _significant(seq.tokens)
    n_lines = content.count("\n") + 1 if content else 0

    # region stack snapshot at each significant token
    region_stack: list[str] = []
    warning = False
    inside_body_at: list[bool] = []
    for idx, tok in enumerate(sig):
        inside_body_at.append(any(r in ("method", "initializer") for r in region_stack))
        if tok.kind == "separator" and tok.text == "{":
            region_stack.append(_label_brace(sig, idx, region_stack))
        elif tok.kind == "separator" and tok.text == "}":
            if region_stack:
                region_stack.pop()
            else:
                warning = True
    if region_stack:
        warning = True

    first_on_line: dict[int, int] = {}
    line_tokens: dict[int, list[Token]] = {}
    for idx, tok in enumerate(sig):
        line_tokens.setdefault(tok.line_no, []).append(tok)
        first_on_line.setdefault(tok.line_no, idx)

    verdict: dict[int, bool] = {}
    for line_no in range(1, n_lines + 1):
        toks = line_tokens.get(line_no, [])
        if not toks:
            verdict[line_no] = False
            continue
        first = toks[0]
        if first.kind == "annotation":
            verdict[line_no] = False
            continue
        if first.kind == "keyword" and first.text in ("import", "package"):
            verdict[line_no] = False
            continue
        if all(t.kind == "separator" for t in toks):
            verdict[line_no] = False
            continue
        verdict[line_no] = inside_body_at[first_on_line[line_no]]

    return LineClassification(is_business_logic=verdict, brace_warning=warning)


def line_token_count(seq: TokenSequence, line_no: int) -> int:
    """Number of grammar tokens starting on the line, excluding
    whitespace and comments. This is the line-complexity measure."""
    return sum(
        1 for t in seq.tokens
        if t.line_no == line_no and t.kind not in ("whitespace", "comment")
    )
