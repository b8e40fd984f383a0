"""Lexical tokenization, variable extraction and whole-identifier renaming.

Extraction is heuristic: a name counts as a variable only if none of its
occurrences sits in a position that suggests it is declared or resolved
elsewhere (function/class heads, call heads, member access, imports,
annotations, type positions, C typedef names).  Offsets are character offsets into ``code``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, NamedTuple

LANGUAGES = ("java", "python", "c")

TOKEN_KINDS = (
    "identifier",
    "keyword",
    "literal",
    "string",
    "comment",
    "operator",
    "punctuation",
    "whitespace",
)

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class LexError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class RenameError(ValueError):
    pass


@dataclass(frozen=True)
class SourceUnit:
    code: str
    language: str
    label: int | None = None

    def __post_init__(self):
        if not self.code:
            raise ValueError("source unit has empty code")
        if self.language not in LANGUAGES:
            raise ValueError(f"unsupported language {self.language!r}")

    def with_code(self, code: str) -> "SourceUnit":
        return SourceUnit(code, self.language, self.label)


class Token(NamedTuple):
    kind: str
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class VariableOccurrences:
    name: str
    spans: tuple[tuple[int, int], ...]


class RenameResult(NamedTuple):
    unit: SourceUnit
    count: int  # 0 means `old` was absent and the unit is returned unchanged


def _load_words(filename: str) -> frozenset[str]:
    text = resources.files("rnns.data.keywords").joinpath(filename).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line)
    return frozenset(words)


@lru_cache(maxsize=None)
def keywords(language: str) -> frozenset[str]:
    return _load_words(f"{language}.txt")


@lru_cache(maxsize=None)
def builtins(language: str) -> frozenset[str]:
    return _load_words(f"{language}.builtins.txt")


def is_valid_identifier(name: str, language: str) -> bool:
    if not isinstance(name, str) or not IDENTIFIER_RE.match(name):
        return False
    return name not in keywords(language) and name not in builtins(language)


# --- tokenizer ---------------------------------------------------------------

_OPERATORS = [
    ">>>=", "<<=", ">>=", "**=", "//=", ">>>", "...", "->", "++", "--", "&&", "||",
    "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "<<", ">>", "**", "//", "::", ":=",
    "+", "-", "*", "/", "%", "=", "<", ">", "!", "&", "|", "^", "~", "?",
]
_OPERATOR_RE = "|".join(re.escape(op) for op in _OPERATORS)
_NUMBER_RE = (
    r"0[xX][0-9a-fA-F_]+[lLuU]*"
    r"|0[bB][01_]+[lLuU]*"
    r"|(?:\d[\d_]*\.?[\d_]*|\.\d[\d_]*)(?:[eE][+-]?\d+)?[a-zA-Z]*"
)
_C_STRING = r'"(?:[^"\\\n]|\\.|\\\n)*"' r"|'(?:[^'\\\n]|\\.)*'"
_PY_STRING = (
    r"(?:[rRbBuUfF]{1,2})?(?:"
    r"'''(?:[^\\]|\\.)*?'''"
    r'|"""(?:[^\\]|\\.)*?"""'
    r"|'(?:[^'\\\n]|\\.|\\\n)*'"
    r'|"(?:[^"\\\n]|\\.|\\\n)*"'
    r")"
)

_SPECS = {
    "c": [
        ("whitespace", r"\s+"),
        # preprocessor directives are never rewritten; lexed as one opaque token
        ("comment", r"(?m:^[ \t]*#(?:[^\n\\]|\\.|\\\n)*)"),
        ("comment", r"//[^\n]*|/\*[\s\S]*?\*/"),
        ("string", _C_STRING),
        ("literal", _NUMBER_RE),
        ("identifier", r"[A-Za-z_][A-Za-z0-9_]*"),
        ("operator", _OPERATOR_RE),
        ("punctuation", r"[()\[\]{};,.:@]"),
    ],
    "java": [
        ("whitespace", r"\s+"),
        ("comment", r"//[^\n]*|/\*[\s\S]*?\*/"),
        ("string", r'"""[\s\S]*?"""|' + _C_STRING),
        ("literal", _NUMBER_RE),
        ("identifier", r"[A-Za-z_$][A-Za-z0-9_$]*"),
        ("operator", _OPERATOR_RE),
        ("punctuation", r"[()\[\]{};,.:@]"),
    ],
    "python": [
        ("whitespace", r"\s+|\\\n"),
        ("comment", r"#[^\n]*"),
        ("string", _PY_STRING),
        ("literal", _NUMBER_RE),
        ("identifier", r"[A-Za-z_][A-Za-z0-9_]*"),
        ("operator", _OPERATOR_RE),
        ("punctuation", r"[()\[\]{};,.:@]"),
    ],
}

_UNTERMINATED = {
    "c": r"/\*|[\"']",
    "java": r"/\*|[\"']",
    "python": r"[\"']",
}


def _master(language: str) -> re.Pattern:
    # A quote or comment opener reaching the `bad` group was not closed; any
    # character nothing else claims falls through to `other`.
    groups = []
    for i, (kind, pat) in enumerate(_SPECS[language]):
        groups.append(f"(?P<k{i}>{pat})")
        if kind == "string":
            groups.append(f"(?P<bad>{_UNTERMINATED[language]})")
    groups.append(r"(?P<other>[\s\S])")
    return re.compile("|".join(groups))


_MASTER = {lang: _master(lang) for lang in _SPECS}
_KIND_OF_GROUP = {lang: {f"k{i}": kind for i, (kind, _) in enumerate(spec)} for lang, spec in _SPECS.items()}


@lru_cache(maxsize=4096)
def _tokenize(code: str, language: str) -> tuple[Token, ...]:
    master = _MASTER[language]
    kinds = _KIND_OF_GROUP[language]
    kw = keywords(language)
    tokens = []
    for m in master.finditer(code):
        group = m.lastgroup
        pos = m.start()
        if group == "bad":
            what = "comment" if code.startswith("/*", pos) else "string"
            raise LexError(f"unterminated {what}", pos)
        if group == "other":
            # unknown characters are kept as single-character punctuation
            tokens.append(Token("punctuation", m.group(), pos, pos + 1))
            continue
        kind = kinds[group]
        text = m.group()
        if kind == "identifier" and text in kw:
            kind = "keyword"
        tokens.append(Token(kind, text, pos, m.end()))
    return tuple(tokens)


def tokenize(unit: SourceUnit) -> list[Token]:
    """Lossless tokenization: ``"".join(t.text for t in tokens) == unit.code``."""
    return list(_tokenize(unit.code, unit.language))


# --- variable extraction -----------------------------------------------------

_DECL_KEYWORDS = {
    "python": {"def", "class", "import", "from"},
    "java": {"class", "interface", "enum", "extends", "implements", "package", "import", "new", "throws", "record"},
    "c": {"struct", "union", "enum", "goto"},
}
_MEMBER_ACCESS = {".", "->", "::", "@"}
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_FSTRING_FIELD = re.compile(r"\{([^{}]*)\}")


def _significant(tokens: Iterable[Token]) -> list[Token]:
    return [t for t in tokens if t.kind not in ("whitespace", "comment")]


def _opaque_names(tokens: Iterable[Token], language: str) -> set[str]:
    """Names referenced from text the renamer never rewrites (macros, f-string fields)."""
    names = set()
    for t in tokens:
        if language == "c" and t.kind == "comment" and t.text.lstrip().startswith("#"):
            names.update(_WORD_RE.findall(t.text))
        elif language == "python" and t.kind == "string":
            prefix = t.text[: len(t.text) - len(t.text.lstrip("rRbBuUfF"))]
            if "f" in prefix.lower():
                for field in _FSTRING_FIELD.findall(t.text):
                    names.update(_WORD_RE.findall(field))
    return names


def _disqualified(code: str, sig: list[Token], language: str) -> set[str]:
    out = set()
    decl = _DECL_KEYWORDS[language]
    brackets: list[str] = []
    in_import = False
    typedef_depth = None  # bracket depth of an open C `typedef` statement
    for i, t in enumerate(sig):
        prev = sig[i - 1] if i > 0 else None
        nxt = sig[i + 1] if i + 1 < len(sig) else None
        if t.kind == "punctuation" and t.text in "([{":
            brackets.append(t.text)
        elif t.kind == "punctuation" and t.text in ")]}" and brackets:
            brackets.pop()
        if t.kind == "keyword" and t.text in ("import", "package"):
            in_import = True
        elif language == "python" and t.text == "from" and (prev is None or "\n" in code[prev.end:t.start]):
            in_import = True
        if language == "c" and t.kind == "keyword" and t.text == "typedef":
            typedef_depth = len(brackets)
        elif typedef_depth is not None and t.text == ";" and len(brackets) == typedef_depth:
            if prev is not None and prev.kind == "identifier":
                out.add(prev.text)  # the name a typedef introduces is a type
            typedef_depth = None
        if in_import:
            if t.kind == "identifier":
                out.add(t.text)
            if language == "python":
                if nxt is None or ("\n" in code[t.end:nxt.start] and not brackets):
                    in_import = False
            elif t.text == ";":
                in_import = False
            continue
        if t.kind != "identifier":
            continue
        if prev is not None and (prev.text in _MEMBER_ACCESS or (prev.kind == "keyword" and prev.text in decl)):
            out.add(t.text)
        elif nxt is not None and nxt.text == "(":
            out.add(t.text)
        elif language in ("java", "c") and nxt is not None and nxt.kind == "identifier":
            out.add(t.text)  # type position: `Type name`
        elif language == "java" and t.text[0].isupper():
            out.add(t.text)  # type or constant by convention
        elif language == "python" and nxt is not None and nxt.text == "=" and brackets[-1:] == ["("]:
            out.add(t.text)  # keyword argument
    return out


@lru_cache(maxsize=4096)
def _extract(code: str, language: str) -> tuple[VariableOccurrences, ...]:
    tokens = _tokenize(code, language)
    sig = _significant(tokens)
    bad = _disqualified(code, sig, language) | _opaque_names(tokens, language) | builtins(language)
    spans: dict[str, list[tuple[int, int]]] = {}
    for t in tokens:
        if t.kind == "identifier" and t.text not in bad and IDENTIFIER_RE.match(t.text):
            spans.setdefault(t.text, []).append((t.start, t.end))
    return tuple(VariableOccurrences(name, tuple(s)) for name, s in spans.items())


def extract_variables(unit: SourceUnit) -> list[VariableOccurrences]:
    """Variables of ``unit`` in first-occurrence order, each with all whole-token spans."""
    return list(_extract(unit.code, unit.language))


@lru_cache(maxsize=4096)
def _names_in(code: str, language: str) -> frozenset[str]:
    tokens = _tokenize(code, language)
    return frozenset(t.text for t in tokens if t.kind == "identifier") | _opaque_names(tokens, language)


def identifier_names(unit: SourceUnit) -> frozenset[str]:
    """Every name a substitute must not take: identifier tokens plus names used
    from macro bodies or f-string fields."""
    return _names_in(unit.code, unit.language)


# --- renaming ----------------------------------------------------------------

def rename(unit: SourceUnit, old: str, new: str) -> RenameResult:
    """Replace every whole-token occurrence of ``old`` with ``new``.

    Strings and comments are left alone.  ``new`` must be a valid identifier not
    already used anywhere in the unit.
    """
    if not is_valid_identifier(new, unit.language):
        raise RenameError(f"{new!r} is not a valid {unit.language} identifier")
    if new in identifier_names(unit):
        raise RenameError(f"{new!r} collides with an identifier already in the unit")
    tokens = _tokenize(unit.code, unit.language)
    parts = []
    count = 0
    for t in tokens:
        if t.kind == "identifier" and t.text == old:
            parts.append(new)
            count += 1
        else:
            parts.append(t.text)
    if count == 0:
        return RenameResult(unit, 0)
    return RenameResult(unit.with_code("".join(parts)), count)


def alpha_equivalent(a: SourceUnit, b: SourceUnit, mapping: Mapping[str, str]) -> bool:
    """True iff ``b`` is ``a`` with identifiers renamed exactly per ``mapping``."""
    if a.language != b.language:
        return False
    ta = _tokenize(a.code, a.language)
    tb = _tokenize(b.code, b.language)
    if len(ta) != len(tb):
        return False
    targets = set(mapping.values())
    if len(targets) != len(mapping):
        return False
    for x, y in zip(ta, tb):
        if x.kind != y.kind:
            return False
        if x.kind == "identifier":
            if x.text in mapping:
                if y.text != mapping[x.text]:
                    return False
            elif y.text != x.text or y.text in targets:
                return False
        elif x.text != y.text:
            return False
    return True
