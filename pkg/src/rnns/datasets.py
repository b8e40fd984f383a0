"""Dataset files and the synthetic labeled-program generator.

A dataset file holds one JSON object per line: ``{"code": ..., "label": ..., "lang": ...}``.

Generator procedure (per sample of class ``c``, all draws from one
``random.Random(seed)`` stream, samples emitted class by class):

1. Pick the program task: task ``c`` with probability ``own_task_p``,
   otherwise a uniformly random task (so structure alone is only a weak cue).
2. Pick a casing style (camelCase or snake_case) uniformly.
3. Name each of the task's variable slots: with probability ``class_name_p``
   compose the name from class ``c``'s topic vocabulary (optionally joined
   with a generic word or a digit), otherwise from the generic vocabulary.
   Names are redrawn until valid and distinct within the program.
4. Draw the numeric constants and, with probability 1/2, append a debugging
   print of one variable.
5. Render the task for the target language inside that language's
   boilerplate (class ``Main`` for Java, ``main`` for C, top level for Python).
"""
from __future__ import annotations

import json
import os
import random
from pathlib import Path
from typing import Iterable

from .lexing import SourceUnit, is_valid_identifier

TOPICS = [
    ["amount", "price", "cost", "fee", "tax", "rate", "balance", "budget"],
    ["width", "height", "area", "radius", "side", "angle", "point", "shape"],
    ["word", "char", "letter", "text", "line", "token", "vowel", "space"],
    ["day", "hour", "minute", "second", "week", "month", "year", "clock"],
    ["node", "vertex", "link", "path", "hop", "degree", "parent", "child"],
    ["item", "stock", "box", "crate", "shelf", "bin", "load", "unit"],
    ["score", "player", "level", "lives", "round", "bonus", "hit", "turn"],
    ["mass", "energy", "force", "speed", "temp", "volt", "wave", "atom"],
]
GENERIC = [
    "tmp", "val", "idx", "cnt", "res", "num", "arr", "cur", "prv", "data",
    "lst", "size", "pos", "key", "flag", "step", "diff", "left", "right", "low",
    "high", "mid", "first", "last", "ans", "acc", "total", "value", "count", "result",
    "buf", "ptr", "ref", "obj", "elem", "entry", "cell", "slot", "field", "part",
    "limit", "bound", "start", "stop", "end", "offset", "delta", "ratio", "factor", "base",
    "prev", "state", "mode", "kind", "tag", "mark", "seen", "done", "ok", "err",
    "input", "output", "source", "target", "dest", "other", "extra", "temp", "aux", "helper",
    "sum", "prod", "avg", "best", "worst", "min", "max", "pivot", "head", "tail",
]
SHORT = ["i", "j", "k", "n", "m", "x", "y", "a", "b", "t"]

# Task bodies in a small statement language; `{vN}` are variable slots and
# `{cN}` numeric constants.  Expressions use only syntax shared by the three
# target languages.
#   ("read", v)  ("decl", v, e)  ("set", v, e)  ("aug", v, op, e)
#   ("arr", v, n)  ("readarr", v, i, n)  ("for", i, lo, hi, body)
#   ("while", cond, body)  ("if", cond, body)  ("print", e)
TASKS = [
    # 0: sum of inputs
    (4, 0, [("read", "{v0}"), ("arr", "{v1}", "{v0}"), ("readarr", "{v1}", "{v2}", "{v0}"),
            ("decl", "{v3}", "0"),
            ("for", "{v2}", "0", "{v0}", [("aug", "{v3}", "+", "{v1}[{v2}]")]),
            ("print", "{v3}")]),
    # 1: maximum
    (4, 0, [("read", "{v0}"), ("arr", "{v1}", "{v0}"), ("readarr", "{v1}", "{v2}", "{v0}"),
            ("decl", "{v3}", "{v1}[0]"),
            ("for", "{v2}", "1", "{v0}", [("if", "{v1}[{v2}] > {v3}", [("set", "{v3}", "{v1}[{v2}]")])]),
            ("print", "{v3}")]),
    # 2: count multiples
    (4, 1, [("read", "{v0}"), ("decl", "{v3}", "0"),
            ("for", "{v2}", "0", "{v0}", [("read", "{v1}"),
                                          ("if", "{v1} % {c0} == 0", [("aug", "{v3}", "+", "1")])]),
            ("print", "{v3}")]),
    # 3: reverse
    (3, 0, [("read", "{v0}"), ("arr", "{v1}", "{v0}"), ("readarr", "{v1}", "{v2}", "{v0}"),
            ("for", "{v2}", "0", "{v0}", [("print", "{v1}[{v0} - 1 - {v2}]")])]),
    # 4: fibonacci
    (5, 0, [("read", "{v0}"), ("decl", "{v1}", "0"), ("decl", "{v2}", "1"),
            ("for", "{v3}", "0", "{v0}", [("decl", "{v4}", "{v1} + {v2}"), ("set", "{v1}", "{v2}"),
                                          ("set", "{v2}", "{v4}")]),
            ("print", "{v1}")]),
    # 5: product modulo
    (3, 1, [("read", "{v0}"), ("decl", "{v1}", "1"),
            ("for", "{v2}", "1", "{v0} + 1", [("set", "{v1}", "{v1} * {v2} % {c0}")]),
            ("print", "{v1}")]),
    # 6: gcd
    (3, 0, [("read", "{v0}"), ("read", "{v1}"),
            ("while", "{v1} != 0", [("decl", "{v2}", "{v0} % {v1}"), ("set", "{v0}", "{v1}"),
                                    ("set", "{v1}", "{v2}")]),
            ("print", "{v0}")]),
    # 7: pairs with bounded difference
    (5, 1, [("read", "{v0}"), ("arr", "{v1}", "{v0}"), ("readarr", "{v1}", "{v2}", "{v0}"),
            ("decl", "{v4}", "0"),
            ("for", "{v2}", "0", "{v0}", [("for", "{v3}", "{v2} + 1", "{v0}", [
                ("if", "{v1}[{v2}] - {v1}[{v3}] < {c0}", [("aug", "{v4}", "+", "1")])])]),
            ("print", "{v4}")]),
]

RESERVED_NAMES = {"sc", "args", "main", "Main"}


def load_dataset(path: str | Path) -> list[SourceUnit]:
    units = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                units.append(SourceUnit(rec["code"], rec["lang"], rec.get("label")))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad dataset record ({exc})") from None
    return units


def dumps_dataset(units: Iterable[SourceUnit]) -> str:
    return "".join(
        json.dumps({"code": u.code, "label": u.label, "lang": u.language}, sort_keys=True) + "\n" for u in units
    )


def save_dataset(units: Iterable[SourceUnit], path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_dataset(units), encoding="utf-8")
    os.replace(tmp, path)


# --- rendering ---------------------------------------------------------------

def _render(stmts, lang: str, depth: int) -> list[str]:
    pad = "    " * depth
    out = []
    for st in stmts:
        op = st[0]
        if op == "read":
            v = st[1]
            out.append({"java": f"{pad}int {v} = sc.nextInt();",
                        "c": f"{pad}int {v};\n{pad}scanf(\"%d\", &{v});",
                        "python": f"{pad}{v} = int(input())"}[lang])
        elif op == "decl":
            out.append(f"{pad}{st[1]} = {st[2]}" if lang == "python" else f"{pad}int {st[1]} = {st[2]};")
        elif op == "set":
            out.append(f"{pad}{st[1]} = {st[2]}" + ("" if lang == "python" else ";"))
        elif op == "aug":
            out.append(f"{pad}{st[1]} {st[2]}= {st[3]}" + ("" if lang == "python" else ";"))
        elif op == "arr":
            out.append({"java": f"{pad}int[] {st[1]} = new int[{st[2]}];",
                        "c": f"{pad}int {st[1]}[1000];",
                        "python": f"{pad}{st[1]} = [0] * {st[2]}"}[lang])
        elif op == "readarr":
            v, i, n = st[1:]
            if lang == "python":
                out.append(f"{pad}for {i} in range({n}):\n{pad}    {v}[{i}] = int(input())")
            elif lang == "java":
                out.append(f"{pad}for (int {i} = 0; {i} < {n}; {i}++) {{\n{pad}    {v}[{i}] = sc.nextInt();\n{pad}}}")
            else:
                out.append(f"{pad}for (int {i} = 0; {i} < {n}; {i}++) {{\n{pad}    scanf(\"%d\", &{v}[{i}]);\n{pad}}}")
        elif op == "for":
            i, lo, hi, body = st[1:]
            head = (f"{pad}for {i} in range({lo}, {hi}):" if lang == "python"
                    else f"{pad}for (int {i} = {lo}; {i} < {hi}; {i}++) {{")
            out.append(head)
            out.extend(_render(body, lang, depth + 1))
            if lang != "python":
                out.append(f"{pad}}}")
        elif op in ("while", "if"):
            cond, body = st[1:]
            out.append(f"{pad}{op} {cond}:" if lang == "python" else f"{pad}{op} ({cond}) {{")
            out.extend(_render(body, lang, depth + 1))
            if lang != "python":
                out.append(f"{pad}}}")
        elif op == "print":
            out.append({"java": f"{pad}System.out.println({st[1]});",
                        "c": f"{pad}printf(\"%d\\n\", {st[1]});",
                        "python": f"{pad}print({st[1]})"}[lang])
        else:
            raise ValueError(f"unknown statement {op!r}")
    return out


def render_program(stmts, lang: str) -> str:
    if lang == "python":
        return "\n".join(_render(stmts, lang, 0)) + "\n"
    body = _render(stmts, lang, 2 if lang == "java" else 1)
    if lang == "java":
        return ("import java.util.*;\n\npublic class Main {\n    public static void main(String[] args) {\n"
                "        Scanner sc = new Scanner(System.in);\n" + "\n".join(body) + "\n    }\n}\n")
    return "#include <stdio.h>\n\nint main() {\n" + "\n".join(body) + "\n    return 0;\n}\n"


def _fill(stmts, mapping):
    out = []
    for st in stmts:
        parts = []
        for p in st:
            if isinstance(p, list):
                parts.append(_fill(p, mapping))
            else:
                parts.append(p.format(**mapping))
        out.append(tuple(parts))
    return out


def _style(words: list[str], snake: bool) -> str:
    if snake:
        return "_".join(words)
    return words[0] + "".join(w[:1].upper() + w[1:] for w in words[1:])


def _draw_name(rng: random.Random, topic: list[str], class_name_p: float, snake: bool) -> str:
    if rng.random() < class_name_p:
        word = rng.choice(topic)
        shape = rng.randrange(4)
        if shape == 0:
            return word
        if shape == 1:
            return _style([word, rng.choice(GENERIC)], snake)
        if shape == 2:
            return _style([rng.choice(GENERIC), word], snake)
        return word + str(rng.randrange(10))
    shape = rng.randrange(3)
    if shape == 0:
        return rng.choice(SHORT)
    if shape == 1:
        return rng.choice(GENERIC)
    return _style([rng.choice(GENERIC), rng.choice(GENERIC)], snake)


def generate_sample(rng: random.Random, label: int, lang: str, own_task_p: float = 0.6,
                    class_name_p: float = 0.75) -> SourceUnit:
    n_classes = len(TOPICS)
    task = label if rng.random() < own_task_p else rng.randrange(len(TASKS))
    n_vars, n_consts, body = TASKS[task]
    snake = rng.random() < 0.5
    names: list[str] = []
    while len(names) < n_vars:
        name = _draw_name(rng, TOPICS[label % n_classes], class_name_p, snake)
        if name in names or name in RESERVED_NAMES or not is_valid_identifier(name, lang):
            continue
        names.append(name)
    mapping = {f"v{i}": n for i, n in enumerate(names)}
    mapping.update({f"c{i}": str(rng.randrange(2, 10)) for i in range(n_consts)})
    stmts = _fill(body, mapping)
    if rng.random() < 0.5:
        # only names declared at the top level are still in scope after the
        # loops close in block-scoped languages
        top = [st[1] for st in stmts if st[0] in ("read", "decl")]
        stmts.append(("print", rng.choice(top)))
    return SourceUnit(render_program(stmts, lang), lang, label)


def generate_dataset(n_classes: int, per_class: int, lang: str, seed: int, **kw) -> list[SourceUnit]:
    if not 2 <= n_classes <= len(TOPICS):
        raise ValueError(f"n_classes must be in [2, {len(TOPICS)}]")
    rng = random.Random(seed)
    return [generate_sample(rng, c, lang, **kw) for c in range(n_classes) for _ in range(per_class)]
