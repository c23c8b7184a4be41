"""Parser for the plain-text LP-subset model format.

Sections (case-insensitive keywords, each on its own line):

    maximize            (or: minimize)
      5 x + 9 y
    subject to
      water: 8 x + 6 y <= 1500
      3 x + 5 y <= 1350
    bounds
      0 <= x <= 10
    integers
      x y
    end

Linear terms carry optional signed rational coefficients (``2/3 x``,
``5x``, ``- 4.5 y``); comparators are ``<=``, ``>=`` and ``=``.  Constraint
names (before ``:``) are optional and comments run from ``\\`` to the end of
the line.  Products of variables are rejected: the grammar is linear only.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .model import Constraint, LinearModel, ModelError


class ParseError(ValueError):
    """Malformed model text; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)"
    r"|(?P<op><=|>=|=|\+|-|\*|/|:)"
    r")"
)

_SECTION_WORDS = ("maximize", "minimize", "subject to", "bounds", "integers", "end")
_INF_WORDS = ("inf", "infinity")


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | literal op
    text: str
    column: int


def _tokenize(line: str, lineno: int) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(line):
        match = _TOKEN_RE.match(line, pos)
        if match is None or match.end() == pos:
            rest = line[pos:].lstrip()
            if not rest:
                break
            column = len(line) - len(rest) + 1
            raise ParseError(f"unexpected character {rest[0]!r}", lineno, column)
        pos = match.end()
        if match.lastgroup == "op":
            tokens.append(_Token(match.group("op"), match.group("op"), match.start("op") + 1))
        elif match.lastgroup == "number":
            tokens.append(_Token("number", match.group("number"), match.start("number") + 1))
        else:
            tokens.append(_Token("ident", match.group("ident"), match.start("ident") + 1))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[_Token], lineno: int, line_len: int):
        self.tokens = tokens
        self.lineno = lineno
        self.line_len = line_len
        self.i = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> _Token | None:
        tok = self.peek()
        if tok is not None:
            self.i += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        column = tok.column if tok is not None else self.line_len + 1
        return ParseError(message, self.lineno, column)


def _parse_numeral(cur: _Cursor, allow_inf: bool) -> float:
    """A signed number, optionally a fraction ``a/b``, optionally ``inf``."""
    sign = 1.0
    tok = cur.peek()
    while tok is not None and tok.kind in ("+", "-"):
        if tok.kind == "-":
            sign = -sign
        cur.next()
        tok = cur.peek()
    if tok is None:
        raise cur.error("expected a number")
    if tok.kind == "ident" and tok.text.lower() in _INF_WORDS:
        if not allow_inf:
            raise cur.error("infinite value not allowed here", tok)
        cur.next()
        return sign * math.inf
    if tok.kind != "number":
        raise cur.error(f"expected a number, found {tok.text!r}", tok)
    cur.next()
    value = float(tok.text)
    nxt = cur.peek()
    if nxt is not None and nxt.kind == "/":
        cur.next()
        den_tok = cur.peek()
        if den_tok is None or den_tok.kind != "number":
            raise cur.error("expected a denominator after '/'", den_tok)
        cur.next()
        den = float(den_tok.text)
        if den == 0:
            raise cur.error("zero denominator", den_tok)
        value /= den
    return sign * value


def _parse_linear_expr(cur: _Cursor) -> dict[str, float]:
    """Sum of signed coefficient/variable terms; repeated variables accumulate."""
    coeffs: dict[str, float] = {}
    first = True
    while True:
        tok = cur.peek()
        if tok is None:
            return coeffs
        sign = 1.0
        if tok.kind in ("+", "-"):
            while tok is not None and tok.kind in ("+", "-"):
                if tok.kind == "-":
                    sign = -sign
                cur.next()
                tok = cur.peek()
            if tok is None:
                raise cur.error("expected a term after sign")
        elif not first:
            return coeffs  # caller consumes what follows (comparator etc.)

        if tok.kind == "number":
            coef = sign * _parse_numeral(cur, allow_inf=False)
            nxt = cur.peek()
            if nxt is not None and nxt.kind == "*":
                cur.next()
                nxt = cur.peek()
            if nxt is None or nxt.kind != "ident":
                raise cur.error("expected a variable after coefficient", nxt)
            if nxt.text.lower() in _INF_WORDS:
                raise cur.error("'inf' is not a valid variable name", nxt)
            cur.next()
            var = nxt.text
        elif tok.kind == "ident":
            cur.next()
            var = tok.text
            coef = sign
            nxt = cur.peek()
            if nxt is not None and nxt.kind == "*":
                star = cur.next()
                nxt = cur.peek()
                if nxt is not None and nxt.kind == "ident":
                    raise cur.error(
                        f"nonlinear term: product of variables {var!r} and {nxt.text!r}", nxt
                    )
                if nxt is None or nxt.kind != "number":
                    raise cur.error("expected a number after '*'", star)
                coef = sign * _parse_numeral(cur, allow_inf=False)
        else:
            raise cur.error(f"unexpected token {tok.text!r} in expression", tok)

        nxt = cur.peek()
        if nxt is not None and nxt.kind == "ident":
            raise cur.error(
                f"nonlinear term: adjacent variables {var!r} and {nxt.text!r}", nxt
            )
        coeffs[var] = coeffs.get(var, 0.0) + coef
        first = False


def _strip_comment(line: str) -> str:
    cut = line.find("\\")
    return line if cut < 0 else line[:cut]


def parse_model(text: str) -> LinearModel:
    """Parse model text into a LinearModel; raises ParseError on bad input."""
    sense: str | None = None
    objective: dict[str, float] | None = None
    objective_lines: list[tuple[int, list[_Token], int]] = []
    constraints: list[Constraint] = []
    bounds: dict[str, tuple[float, float]] = {}
    integers: set[str] = set()
    section: str | None = None
    saw_end = False

    def finish_objective() -> None:
        nonlocal objective
        if section in ("maximize", "minimize") and objective is None:
            merged: dict[str, float] = {}
            for lineno, tokens, line_len in objective_lines:
                cur = _Cursor(tokens, lineno, line_len)
                for var, coef in _parse_linear_expr(cur).items():
                    merged[var] = merged.get(var, 0.0) + coef
                leftover = cur.peek()
                if leftover is not None:
                    raise cur.error(f"unexpected token {leftover.text!r} in objective", leftover)
            objective = merged

    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = _strip_comment(rawline)
        stripped = line.strip()
        if not stripped:
            continue
        if saw_end:
            raise ParseError("content after 'end'", lineno, len(line) - len(line.lstrip()) + 1)
        keyword = stripped.lower()
        if keyword in _SECTION_WORDS:
            if keyword in ("maximize", "minimize"):
                if sense is not None:
                    raise ParseError("duplicate objective section", lineno)
                sense = keyword
                section = keyword
            elif keyword == "subject to":
                if sense is None:
                    raise ParseError("'subject to' before the objective", lineno)
                finish_objective()
                if section in ("bounds", "integers"):
                    raise ParseError("'subject to' must precede bounds/integers", lineno)
                section = "subject to"
            elif keyword == "bounds":
                if sense is None:
                    raise ParseError("'bounds' before the objective", lineno)
                finish_objective()
                if section == "integers":
                    raise ParseError("'bounds' must precede 'integers'", lineno)
                section = "bounds"
            elif keyword == "integers":
                if sense is None:
                    raise ParseError("'integers' before the objective", lineno)
                finish_objective()
                section = "integers"
            elif keyword == "end":
                if sense is None:
                    raise ParseError("'end' before the objective", lineno)
                finish_objective()
                saw_end = True
            continue

        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        if section in ("maximize", "minimize"):
            objective_lines.append((lineno, tokens, len(line)))
        elif section == "subject to":
            constraints.append(_parse_constraint(tokens, lineno, len(line)))
        elif section == "bounds":
            _parse_bound_line(tokens, lineno, len(line), bounds)
        elif section == "integers":
            for tok in tokens:
                if tok.kind != "ident":
                    raise ParseError(
                        f"expected a variable name, found {tok.text!r}", lineno, tok.column
                    )
                integers.add(tok.text)
        else:
            raise ParseError("model must start with 'maximize' or 'minimize'", lineno)

    if sense is None:
        raise ParseError("empty model: no objective section", max(1, text.count("\n") + 1))
    if not saw_end:
        raise ParseError("missing 'end'", text.count("\n") + 1)
    try:
        return LinearModel(
            sense=sense,
            objective=objective or {},
            constraints=constraints,
            bounds=bounds,
            integrality=frozenset(integers),
        )
    except ModelError as exc:
        raise ParseError(str(exc), text.count("\n") + 1) from exc


def _parse_constraint(tokens: list[_Token], lineno: int, line_len: int) -> Constraint:
    cur = _Cursor(tokens, lineno, line_len)
    name = None
    if len(tokens) >= 2 and tokens[0].kind == "ident" and tokens[1].kind == ":":
        name = tokens[0].text
        cur.i = 2
    coeffs = _parse_linear_expr(cur)
    cmp_tok = cur.next()
    if cmp_tok is None or cmp_tok.kind not in ("<=", ">=", "="):
        raise cur.error("expected a comparator (<=, >= or =)", cmp_tok)
    if not coeffs:
        raise ParseError("constraint has an empty left-hand side", lineno, cmp_tok.column)
    rhs = _parse_numeral(cur, allow_inf=False)
    leftover = cur.peek()
    if leftover is not None:
        raise cur.error(f"unexpected token {leftover.text!r} after right-hand side", leftover)
    return Constraint(coeffs=coeffs, comparator=cmp_tok.kind, rhs=rhs, name=name)


def _merge_bound(
    bounds: dict[str, tuple[float, float]],
    var: str,
    lo: float | None,
    hi: float | None,
    lineno: int,
    column: int,
) -> None:
    cur_lo, cur_hi = bounds.get(var, (0.0, math.inf))
    new_lo = cur_lo if lo is None else lo
    new_hi = cur_hi if hi is None else hi
    if new_lo > new_hi:
        raise ParseError(
            f"variable {var!r} has lower bound {new_lo} > upper bound {new_hi}", lineno, column
        )
    bounds[var] = (new_lo, new_hi)


def _parse_bound_line(
    tokens: list[_Token], lineno: int, line_len: int, bounds: dict[str, tuple[float, float]]
) -> None:
    """One of: v <= x, x <= v, v <= x <= v, x >= v, v >= x, v >= x >= v, x = v."""
    cur = _Cursor(tokens, lineno, line_len)
    first = cur.peek()
    if first is None:
        return
    if first.kind == "ident" and first.text.lower() not in _INF_WORDS:
        var_tok = cur.next()
        cmp_tok = cur.next()
        if cmp_tok is None or cmp_tok.kind not in ("<=", ">=", "="):
            raise cur.error("expected a comparator after variable", cmp_tok)
        value = _parse_numeral(cur, allow_inf=True)
        if cmp_tok.kind == "<=":
            lo, hi = None, value
        elif cmp_tok.kind == ">=":
            lo, hi = value, None
        else:
            lo, hi = value, value
        _merge_bound(bounds, var_tok.text, lo, hi, lineno, var_tok.column)
    else:
        value = _parse_numeral(cur, allow_inf=True)
        cmp_tok = cur.next()
        if cmp_tok is None or cmp_tok.kind not in ("<=", ">="):
            raise cur.error("expected <= or >= after bound value", cmp_tok)
        var_tok = cur.next()
        if var_tok is None or var_tok.kind != "ident" or var_tok.text.lower() in _INF_WORDS:
            raise cur.error("expected a variable name", var_tok)
        if cmp_tok.kind == "<=":
            lo, hi = value, None
        else:
            lo, hi = None, value
        second_cmp = cur.peek()
        if second_cmp is not None and second_cmp.kind == cmp_tok.kind:
            cur.next()
            other = _parse_numeral(cur, allow_inf=True)
            if cmp_tok.kind == "<=":
                hi = other
            else:
                lo = other
        _merge_bound(bounds, var_tok.text, lo, hi, lineno, var_tok.column)
    leftover = cur.peek()
    if leftover is not None:
        raise cur.error(f"unexpected token {leftover.text!r} in bound", leftover)
