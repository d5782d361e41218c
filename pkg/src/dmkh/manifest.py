"""Text manifests (.dm) describing one entity, with a canonical printer.

Grammar (one item per line, `#` starts a comment):

    version = 1
    entity = difference_module | lambda_connection | monopole_model
    [section]
    key = value

Values are bare identifiers, integers, expressions in one of the variables
b, w, y over Q(i) (`1/2 - 3/4 i`, `b^3 - b`, `(b + 1) / (b - i)`), or nested
bracket lists of values.  A section header may repeat only where noted in
SCHEMA.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .algebra import GaussQ, Poly, RatFunc

VARIABLES = ("b", "w", "y")


class ManifestError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None, path: str | None = None):
        self.message, self.line, self.col, self.path = message, line, col, path
        where = ""
        if line is not None:
            where = f"line {line}, col {col}: "
        if path:
            where += f"{path}: "
        super().__init__(where + message)


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class Ident:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Expr:
    value: RatFunc
    var: str | None  # None when constant

    def is_const(self) -> bool:
        return self.value.is_poly() and self.value.num.deg <= 0

    def scalar(self) -> GaussQ:
        if not self.is_const():
            raise ManifestError(f"expected a constant, got {self}")
        return self.value.num.coeff(0)

    def __str__(self):
        if self.is_const():
            return str(self.scalar())
        return self.value.to_str(self.var or "b")


# ---------------------------------------------------------------------------
# Tokenizer and expression parser

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


@dataclass
class _Tok:
    kind: str  # num, id, op, end
    text: str
    col: int


def _tokenize(text: str, line: int, col0: int) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        col = col0 + m.start(m.lastindex)
        if m.group(1):
            out.append(_Tok("num", m.group(1), col))
        elif m.group(2):
            out.append(_Tok("id", m.group(2), col))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()[],":
                raise ManifestError(f"unexpected character {ch!r}", line, col)
            out.append(_Tok("op", ch, col))
        pos = m.end()
        if not text[pos:].strip():
            break
    out.append(_Tok("end", "", col0 + len(text)))
    return out


class _Parser:
    def __init__(self, toks: list[_Tok], line: int):
        self.toks, self.i, self.line = toks, 0, line
        self.var: str | None = None

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected: str):
        t = self.peek()
        got = t.text or "end of line"
        raise ManifestError(f"expected {expected}, got {got!r}", self.line, t.col)

    def expect(self, op: str):
        t = self.peek()
        if t.kind != "op" or t.text != op:
            self.fail(repr(op))
        self.take()

    # value := list | identifier | expression
    def value(self) -> Any:
        t = self.peek()
        if t.kind == "op" and t.text == "[":
            self.take()
            items = []
            if not (self.peek().kind == "op" and self.peek().text == "]"):
                items.append(self.value())
                while self.peek().kind == "op" and self.peek().text == ",":
                    self.take()
                    items.append(self.value())
            self.expect("]")
            return tuple(items)
        nxt = self.toks[self.i + 1]
        if t.kind == "id" and t.text not in VARIABLES and t.text != "i" and (
            nxt.kind == "end" or (nxt.kind == "op" and nxt.text in ",]")
        ):
            self.take()
            return Ident(t.text)
        self.var = None
        e = self.expr()
        const = e.is_poly() and e.num.deg <= 0
        return Expr(e, None if const else self.var)

    def expr(self) -> RatFunc:
        t = self.peek()
        if t.kind == "op" and t.text in "+-":
            self.take()
            acc = self.term()
            if t.text == "-":
                acc = -acc
        else:
            acc = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def _starts_atom(self) -> bool:
        t = self.peek()
        return t.kind in ("num", "id") or (t.kind == "op" and t.text == "(")

    def term(self) -> RatFunc:
        acc = self.power()
        while True:
            t = self.peek()
            if t.kind == "op" and t.text in "*/":
                self.take()
                rhs = self.power()
                if t.text == "*":
                    acc = acc * rhs
                else:
                    if rhs.is_zero():
                        raise ManifestError("division by zero", self.line, t.col)
                    acc = acc / rhs
            elif self._starts_atom():
                acc = acc * self.power()
            else:
                return acc

    def power(self) -> RatFunc:
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            neg = False
            if self.peek().kind == "op" and self.peek().text == "-":
                self.take()
                neg = True
            t = self.peek()
            if t.kind != "num":
                self.fail("an integer exponent")
            self.take()
            k = int(t.text)
            base = base ** k
            if neg:
                if base.is_zero():
                    raise ManifestError("division by zero", self.line, t.col)
                base = RatFunc.of(1) / base
        return base

    def atom(self) -> RatFunc:
        t = self.peek()
        if t.kind == "num":
            self.take()
            return RatFunc.of(int(t.text))
        if t.kind == "id":
            if t.text == "i":
                self.take()
                return RatFunc.of(GaussQ(0, 1))
            if t.text in VARIABLES:
                if self.var is not None and self.var != t.text:
                    raise ManifestError(f"mixed variables {self.var} and {t.text}", self.line, t.col)
                self.var = t.text
                self.take()
                return RatFunc.of(Poly.X())
            raise ManifestError(f"unknown symbol {t.text!r}", self.line, t.col)
        if t.kind == "op" and t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        self.fail("a number, i, a variable or '('")


def parse_value(text: str, line: int = 1, col: int = 1) -> Any:
    p = _Parser(_tokenize(text, line, col), line)
    v = p.value()
    if p.peek().kind != "end":
        p.fail("end of value")
    return v


def parse_scalar(text: str) -> GaussQ:
    v = parse_value(text)
    if not isinstance(v, Expr):
        raise ManifestError(f"expected a scalar, got {text!r}")
    return v.scalar()


def print_value(v: Any) -> str:
    if isinstance(v, tuple):
        return "[" + ", ".join(print_value(x) for x in v) + "]"
    return str(v)


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class Section:
    name: str
    entries: tuple  # ((key, value), ...)

    def get(self, key, default=None):
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def __contains__(self, key):
        return any(k == key for k, _ in self.entries)


@dataclass(frozen=True)
class Manifest:
    version: int
    entity: str
    sections: tuple  # of Section

    def section(self, name: str) -> Section | None:
        for s in self.sections:
            if s.name == name:
                return s
        return None

    def all(self, name: str) -> list[Section]:
        return [s for s in self.sections if s.name == name]


# section -> (allowed keys, repeatable)
SCHEMA = {
    "difference_module": {
        "module": ({"lambda", "T", "phi", "construction", "S", "ell", "roots", "Q", "lc_p", "weights", "d"}, False),
        "place": ({"at", "weights", "middle"}, True),
        "infinity": ({"basis", "d"}, False),
        "options": ({"order", "degree_bound"}, False),
    },
    "lambda_connection": {
        "connection": ({"q", "lambda", "T", "A", "a"}, False),
        "kms": ({"a", "alpha"}, False),
        "options": ({"order"}, False),
    },
    "monopole_model": {
        "model": ({"family", "p", "ell", "lambda", "T", "frak_a", "a", "alpha", "gamma", "t10", "beta10", "weight"}, False),
        "options": ({"samples"}, False),
    },
}


def parse_manifest(text: str) -> Manifest:
    version = entity = None
    sections: list[list] = []
    current = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        col0 = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("["):
            m = re.fullmatch(r"\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]", stripped)
            if not m:
                raise ManifestError("malformed section header", ln, col0)
            if entity is None:
                raise ManifestError("entity must be declared before sections", ln, col0)
            name = m.group(1)
            schema = SCHEMA[entity]
            if name not in schema:
                raise ManifestError(f"unknown section [{name}] for {entity}", ln, col0)
            if not schema[name][1] and any(s[0] == name for s in sections):
                raise ManifestError(f"section [{name}] may appear once", ln, col0)
            current = [name, [], ln]
            sections.append(current)
            continue
        m = re.match(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=", line)
        if not m:
            raise ManifestError("expected `key = value`", ln, col0)
        key = m.group(1)
        vtext = line[m.end():]
        vcol = m.end() + 1
        if not vtext.strip():
            raise ManifestError("missing value", ln, vcol)
        if current is None:
            if key == "version":
                v = parse_value(vtext, ln, vcol)
                if not isinstance(v, Expr) or not v.is_const() or v.scalar() != 1:
                    raise ManifestError("only version = 1 is supported", ln, vcol)
                version = 1
            elif key == "entity":
                v = parse_value(vtext, ln, vcol)
                if not isinstance(v, Ident) or v.name not in SCHEMA:
                    raise ManifestError(f"entity must be one of {', '.join(SCHEMA)}", ln, vcol)
                entity = v.name
            else:
                raise ManifestError(f"unknown top-level key {key!r}", ln, m.start(1) + 1)
            continue
        allowed = SCHEMA[entity][current[0]][0]
        if key not in allowed:
            raise ManifestError(f"unknown key {key!r}", ln, m.start(1) + 1, current[0])
        if any(k == key for k, _ in current[1]):
            raise ManifestError(f"duplicate key {key!r}", ln, m.start(1) + 1, current[0])
        current[1].append((key, parse_value(vtext, ln, vcol)))
    if version is None:
        raise ManifestError("missing `version = 1`")
    if entity is None:
        raise ManifestError("missing `entity`")
    man = Manifest(version, entity, tuple(Section(n, tuple(e)) for n, e, _ in sections))
    validate(man)
    return man


def print_manifest(m: Manifest) -> str:
    out = [f"version = {m.version}", f"entity = {m.entity}"]
    for s in m.sections:
        out.append("")
        out.append(f"[{s.name}]")
        for k, v in s.entries:
            out.append(f"{k} = {print_value(v)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Semantic checks and typed accessors


def _matrix(v, path: str):
    if not isinstance(v, tuple) or not v or not all(isinstance(r, tuple) for r in v):
        raise ManifestError("expected a matrix as a list of rows", path=path)
    n = len(v)
    for r in v:
        if len(r) != n:
            raise ManifestError(f"rank mismatch: {n} rows but a row has {len(r)} entries", path=path)
        for a in r:
            if not isinstance(a, Expr):
                raise ManifestError("matrix entries must be expressions", path=path)
    return [[a.value for a in r] for r in v]


def get_scalar(sec: Section, key: str, default=None, path: str = "") -> GaussQ | None:
    v = sec.get(key)
    if v is None:
        return default
    if not isinstance(v, Expr) or not v.is_const():
        raise ManifestError(f"{key} must be a constant", path=path or sec.name)
    return v.scalar()


def get_rational(sec: Section, key: str, default=None) -> Fraction | None:
    v = get_scalar(sec, key)
    if v is None:
        return default
    if v.im:
        raise ManifestError(f"{key} must be rational", path=sec.name)
    return v.re


def get_int(sec: Section, key: str, default=None) -> int | None:
    v = get_rational(sec, key)
    if v is None:
        return default
    if v.denominator != 1:
        raise ManifestError(f"{key} must be an integer", path=sec.name)
    return int(v)


def get_list(sec: Section, key: str, default=None) -> list | None:
    v = sec.get(key)
    if v is None:
        return default
    if not isinstance(v, tuple):
        raise ManifestError(f"{key} must be a list", path=sec.name)
    out = []
    for a in v:
        if not isinstance(a, Expr) or not a.is_const():
            raise ManifestError(f"{key} entries must be constants", path=sec.name)
        out.append(a.scalar())
    return out


def get_ident(sec: Section, key: str, default=None) -> str | None:
    v = sec.get(key)
    if v is None:
        return default
    if not isinstance(v, Ident):
        raise ManifestError(f"{key} must be an identifier", path=sec.name)
    return v.name


def get_matrix(sec: Section, key: str):
    v = sec.get(key)
    return None if v is None else _matrix(v, f"{sec.name}.{key}")


def get_poly(sec: Section, key: str) -> Poly | None:
    v = sec.get(key)
    if v is None:
        return None
    if not isinstance(v, Expr) or not v.value.is_poly():
        raise ManifestError(f"{key} must be a polynomial", path=sec.name)
    return v.value.num


def validate(m: Manifest) -> None:
    if m.entity == "difference_module":
        mod = m.section("module")
        if mod is None:
            raise ManifestError("missing [module] section")
        cons = get_ident(mod, "construction")
        if cons is None:
            phi = get_matrix(mod, "phi")
            if phi is None:
                raise ManifestError("need phi or construction", path="module")
            from .algebra import det_gauss

            if det_gauss([[RatFunc.of(a) for a in r] for r in phi]).is_zero():
                raise ManifestError("phi is not invertible", path="module.phi")
            inf = m.section("infinity")
            if inf is not None:
                r = len(phi)
                d = get_list(inf, "d")
                if d is not None and len(d) != r:
                    raise ManifestError("rank mismatch in d", path="infinity.d")
                basis = get_matrix(inf, "basis")
                if basis is not None and len(basis) != r:
                    raise ManifestError("rank mismatch in basis", path="infinity.basis")
        elif cons not in ("example_a", "example_b"):
            raise ManifestError("construction must be example_a or example_b", path="module.construction")
        for p in m.all("place"):
            if "at" not in p or "weights" not in p:
                raise ManifestError("place needs `at` and `weights`", path="place")
    elif m.entity == "lambda_connection":
        con = m.section("connection")
        if con is None:
            raise ManifestError("missing [connection] section")
        if ("A" in con) == ("a" in con):
            raise ManifestError("give exactly one of A or a", path="connection")
        if "A" in con:
            mats = con.get("A")
            if not isinstance(mats, tuple) or not mats:
                raise ManifestError("A must be a list of matrices", path="connection.A")
            r = None
            for k, mm in enumerate(mats):
                mat = _matrix(mm, f"connection.A[{k}]")
                if r is not None and len(mat) != r:
                    raise ManifestError("rank mismatch between coefficients", path=f"connection.A[{k}]")
                r = len(mat)
    elif m.entity == "monopole_model":
        mod = m.section("model")
        if mod is None:
            raise ManifestError("missing [model] section")
        fam = get_ident(mod, "family")
        if fam not in ("lp_ell", "frobenius", "tame", "gamma", "dirac"):
            raise ManifestError("family must be lp_ell, frobenius, tame, gamma or dirac", path="model.family")
