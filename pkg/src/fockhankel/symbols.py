"""A closed expression language for symbols g on the complex plane.

Expressions are immutable trees.  Because the language is closed, everything the
integrators need to know (growth rate, discontinuity circles, angular bandwidth,
continuity) can be read off the tree.

Text grammar::

    expr  := term ('+' term)*
    term  := atom ('*' atom)*
    atom  := 'z^' a ['zb^' b] | 'zb^' b | '|z|^' s | 'sin|z|' | 'sin(' w '|z|)'
           | 'expq(' s ')' | 'ang(' k ')' | 'ind(' c ',' a ',' b ')'
           | 'conj(' expr ')' | '(' expr ')' | literal
    literal := number | number 'i' | 'i' | '(' number ('+'|'-') number 'i' ')'

Un-parenthesised literals and monomials inside one term are multiplied out, so
``2*z^1`` is the single monomial ``Mono(1, 0, 2)``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

MAX_DEPTH = 32
EXPQ_BOUND = 0.25


class SymbolError(ValueError):
    pass


class AdmissibilityError(SymbolError):
    pass


class SymbolSyntaxError(SymbolError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


# --------------------------------------------------------------------------- nodes


@dataclass(frozen=True)
class Mono:
    a: int
    b: int
    c: complex = 1.0

    def __post_init__(self):
        if int(self.a) != self.a or int(self.b) != self.b or self.a < 0 or self.b < 0:
            raise SymbolError("monomial exponents must be non-negative integers")
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", int(self.b))
        object.__setattr__(self, "c", complex(self.c))


@dataclass(frozen=True)
class RadialPower:
    s: float

    def __post_init__(self):
        if not self.s >= 0:
            raise SymbolError("radial power must be >= 0")
        object.__setattr__(self, "s", float(self.s))


@dataclass(frozen=True)
class RadialSin:
    omega: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega))


@dataclass(frozen=True)
class RadialExpQ:
    s: float

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        if abs(self.s) > EXPQ_BOUND:
            raise AdmissibilityError(
                f"expq({self.s!r}) violates the Omega_m admissibility rule: |s| <= 1/4 is "
                "required so that g * k_v^m stays in some L^{p',m}"
            )


@dataclass(frozen=True)
class Angular:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k:
            raise SymbolError("angular frequency must be an integer")
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class IndicatorAnnulus:
    center: complex
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (self.a >= 0 and self.b > self.a):
            raise SymbolError("indicator annulus needs 0 <= a < b")


@dataclass(frozen=True)
class Sum:
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if len(self.terms) < 1:
            raise SymbolError("empty sum")
        _check_depth(self)


@dataclass(frozen=True)
class Product:
    left: SymbolExpr
    right: SymbolExpr

    def __post_init__(self):
        _check_depth(self)


@dataclass(frozen=True)
class Conj:
    child: SymbolExpr

    def __post_init__(self):
        _check_depth(self)


SymbolExpr = Union[Mono, RadialPower, RadialSin, RadialExpQ, Angular, IndicatorAnnulus,
                   Sum, Product, Conj]
_LEAVES = (Mono, RadialPower, RadialSin, RadialExpQ, Angular, IndicatorAnnulus)


def children(g) -> tuple:
    if isinstance(g, Sum):
        return g.terms
    if isinstance(g, Product):
        return (g.left, g.right)
    if isinstance(g, Conj):
        return (g.child,)
    return ()


def depth(g) -> int:
    kids = children(g)
    return 1 + (max(depth(k) for k in kids) if kids else 0)


def _check_depth(g):
    if depth(g) > MAX_DEPTH:
        raise SymbolError(f"expression tree deeper than {MAX_DEPTH}")


# --------------------------------------------------------------------- evaluation


def eval_symbol(g, v):
    """Evaluate ``g`` at complex point(s) ``v``."""
    v = np.asarray(v, dtype=complex)
    out = _eval(g, v)
    out = np.broadcast_to(out, v.shape).astype(complex)
    return complex(out) if out.ndim == 0 else out


def _eval(g, v):
    if isinstance(g, Mono):
        out = g.c * np.ones_like(v)
        if g.a:
            out = out * v**g.a
        if g.b:
            out = out * np.conj(v) ** g.b
        return out
    r = np.abs(v)
    if isinstance(g, RadialPower):
        return r**g.s if g.s else np.ones_like(r)
    if isinstance(g, RadialSin):
        return np.sin(g.omega * r)
    if isinstance(g, RadialExpQ):
        return np.exp(g.s * r * r)
    if isinstance(g, Angular):
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(r > 0, (v / np.where(r > 0, r, 1.0)) ** g.k, 0.0)
        return out
    if isinstance(g, IndicatorAnnulus):
        d = np.abs(v - g.center)
        return ((d >= g.a) & (d <= g.b)).astype(float)
    if isinstance(g, Sum):
        out = 0
        for t in g.terms:
            out = out + _eval(t, v)
        return out
    if isinstance(g, Product):
        return _eval(g.left, v) * _eval(g.right, v)
    if isinstance(g, Conj):
        return np.conj(_eval(g.child, v))
    raise TypeError(f"not a symbol expression: {g!r}")


def as_function(g):
    """Callable ``v -> g(v)`` for a symbol expression or a plain callable."""
    if callable(g) and not isinstance(g, _LEAVES + (Sum, Product, Conj)):
        return g
    return lambda v: eval_symbol(g, v)


# ------------------------------------------------------------ structural queries


def growth_rate(g) -> float:
    """Exponent ``s`` such that ``|g(v)| <= C (1+|v|)**N exp(s |v|**2)``."""
    if isinstance(g, RadialExpQ):
        return g.s
    if isinstance(g, Sum):
        return max(growth_rate(t) for t in g.terms)
    if isinstance(g, Product):
        return growth_rate(g.left) + growth_rate(g.right)
    if isinstance(g, Conj):
        return growth_rate(g.child)
    if isinstance(g, IndicatorAnnulus):
        return -math.inf
    return 0.0


def poly_degree(g) -> float:
    """Polynomial growth degree (ignoring Gaussian factors); 0 for bounded atoms."""
    if isinstance(g, Mono):
        return 0.0 if g.c == 0 else float(g.a + g.b)
    if isinstance(g, RadialPower):
        return g.s
    if isinstance(g, Sum):
        return max(poly_degree(t) for t in g.terms)
    if isinstance(g, Product):
        return poly_degree(g.left) + poly_degree(g.right)
    if isinstance(g, Conj):
        return poly_degree(g.child)
    return 0.0


def bandwidth(g) -> int | None:
    """Largest |angular frequency| around the origin, or None if unlimited."""
    if isinstance(g, Mono):
        return abs(g.a - g.b)
    if isinstance(g, Angular):
        return abs(g.k)
    if isinstance(g, IndicatorAnnulus):
        return 0 if g.center == 0 else None
    if isinstance(g, (RadialPower, RadialSin, RadialExpQ)):
        return 0
    parts = [bandwidth(c) for c in children(g)]
    if any(p is None for p in parts):
        return None
    return sum(parts) if isinstance(g, Product) else max(parts)


def is_radial(g) -> bool:
    if isinstance(g, Mono):
        return g.a == g.b or g.c == 0
    return bandwidth(g) == 0


def discontinuity_circles(g) -> list:
    """``(center, radius)`` of every circle across which ``g`` may jump."""
    out = []
    if isinstance(g, IndicatorAnnulus):
        if g.a > 0:
            out.append((g.center, g.a))
        out.append((g.center, g.b))
    for c in children(g):
        out.extend(discontinuity_circles(c))
    return sorted(set(out), key=lambda cr: (cr[0].real, cr[0].imag, cr[1]))


def is_continuous(g) -> bool:
    return not discontinuity_circles(g)


def is_analytic_polynomial(g) -> bool:
    if isinstance(g, Mono):
        return g.b == 0 or g.c == 0
    if isinstance(g, (Sum, Product)):
        return all(is_analytic_polynomial(c) for c in children(g))
    return False


def check_admissible(g, max_growth: float, what: str = "integrand") -> None:
    """Reject symbols whose Gaussian growth defeats the weight of an integral."""
    s = growth_rate(g)
    if s >= max_growth:
        raise AdmissibilityError(
            f"{what} diverges: symbol grows like exp({s:g}|z|^2), which exceeds the "
            f"Omega_m admissibility limit {max_growth:g} for this computation"
        )


# ----------------------------------------------------------------------- printing


def _fmt_num(x: float) -> str:
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return str(int(x)) if x != 0 or math.copysign(1, x) > 0 else "0"
    return repr(x)


def _fmt_literal(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return _fmt_num(c.real)
    if c.real == 0:
        return f"{_fmt_num(c.imag)}i"
    sign = "-" if c.imag < 0 else "+"
    return f"({_fmt_num(c.real)}{sign}{_fmt_num(abs(c.imag))}i)"


def to_text(g) -> str:
    """Canonical text form; ``parse_symbol(to_text(g)) == g``."""
    if isinstance(g, Mono):
        core = ""
        if g.a:
            core += f"z^{g.a}"
        if g.b:
            core += f"zb^{g.b}"
        if not core:
            return _fmt_literal(g.c)
        return core if g.c == 1 else f"{_fmt_literal(g.c)}*{core}"
    if isinstance(g, RadialPower):
        return f"|z|^{_fmt_num(g.s)}"
    if isinstance(g, RadialSin):
        return "sin|z|" if g.omega == 1 else f"sin({_fmt_num(g.omega)}|z|)"
    if isinstance(g, RadialExpQ):
        return f"expq({_fmt_num(g.s)})"
    if isinstance(g, Angular):
        return f"ang({g.k})"
    if isinstance(g, IndicatorAnnulus):
        return f"ind({_fmt_literal(g.center)},{_fmt_num(g.a)},{_fmt_num(g.b)})"
    if isinstance(g, Conj):
        return f"conj({to_text(g.child)})"
    if isinstance(g, Sum):
        if len(g.terms) == 1:
            return f"({to_text(g.terms[0])})"
        return " + ".join(f"({to_text(t)})" if isinstance(t, Sum) else to_text(t) for t in g.terms)
    if isinstance(g, Product):
        left = to_text(g.left)
        if isinstance(g.left, (Sum, Mono)):
            left = f"({left})"
        right = to_text(g.right)
        if isinstance(g.right, (Sum, Mono, Product)):
            right = f"({right})"
        return f"{left}*{right}"
    raise TypeError(f"not a symbol expression: {g!r}")


# ------------------------------------------------------------------------ parsing

_NUM = r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?"
_RE_NUM = re.compile(r"[+-]?" + _NUM)
_RE_PAREN_LIT = re.compile(r"\(\s*([+-]?" + _NUM + r")\s*([+-])\s*(" + _NUM + r")?\s*i\s*\)")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg):
        raise SymbolSyntaxError(msg, self.pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, s: str) -> bool:
        self.skip()
        return self.text.startswith(s, self.pos)

    def expect(self, s: str):
        if not self.peek(s):
            self.error(f"expected {s!r}")
        self.pos += len(s)

    def number(self) -> float:
        self.skip()
        mt = _RE_NUM.match(self.text, self.pos)
        if not mt:
            self.error("expected a number")
        self.pos = mt.end()
        return float(mt.group())

    def integer(self) -> int:
        start = self.pos
        x = self.number()
        if x != int(x):
            self.pos = start
            self.error("expected an integer")
        return int(x)

    def parse(self):
        g = self.expr()
        self.skip()
        if self.pos != len(self.text):
            self.error("unexpected trailing input")
        return g

    def expr(self):
        terms = [self.term()]
        while self.peek("+"):
            self.pos += 1
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self):
        factors = [self.atom()]
        while self.peek("*"):
            self.pos += 1
            factors.append(self.atom())
        # fold bare literals/monomials into a single leading monomial
        mono = None
        rest = []
        for node, bare in factors:
            if bare and isinstance(node, Mono):
                mono = node if mono is None else Mono(mono.a + node.a, mono.b + node.b, mono.c * node.c)
            else:
                rest.append(node)
        nodes = ([mono] if mono is not None else []) + rest
        out = nodes[0]
        for node in nodes[1:]:
            out = Product(out, node)
        return out

    def atom(self):
        """Return ``(node, bare)``; ``bare`` marks foldable literal/monomial atoms."""
        self.skip()
        t = self.text
        start = self.pos
        try:
            if t.startswith("z^", self.pos):
                self.pos += 2
                a = self.integer()
                b = 0
                if t.startswith("zb^", self.pos):
                    self.pos += 3
                    b = self.integer()
                return Mono(a, b, 1.0), True
            if t.startswith("zb^", self.pos):
                self.pos += 3
                return Mono(0, self.integer(), 1.0), True
            if t.startswith("|z|^", self.pos):
                self.pos += 4
                return RadialPower(self.number()), False
            if t.startswith("sin|z|", self.pos):
                self.pos += 6
                return RadialSin(1.0), False
            if t.startswith("sin(", self.pos):
                self.pos += 4
                w = self.number()
                self.expect("|z|")
                self.expect(")")
                return RadialSin(w), False
            if t.startswith("expq(", self.pos):
                self.pos += 5
                s = self.number()
                self.expect(")")
                return RadialExpQ(s), False
            if t.startswith("ang(", self.pos):
                self.pos += 4
                k = self.integer()
                self.expect(")")
                return Angular(k), False
            if t.startswith("ind(", self.pos):
                self.pos += 4
                c = self.literal()
                self.expect(",")
                a = self.number()
                self.expect(",")
                b = self.number()
                self.expect(")")
                return IndicatorAnnulus(c, a, b), False
            if t.startswith("conj(", self.pos):
                self.pos += 5
                g = self.expr()
                self.expect(")")
                return Conj(g), False
            if t.startswith("(", self.pos):
                if _RE_PAREN_LIT.match(t, self.pos):
                    return Mono(0, 0, self.literal()), True
                self.pos += 1
                g = self.expr()
                self.expect(")")
                return g, False
            return Mono(0, 0, self.literal()), True
        except AdmissibilityError:
            raise
        except SymbolSyntaxError:
            raise
        except SymbolError as exc:
            raise SymbolSyntaxError(str(exc), start) from None

    def literal(self) -> complex:
        self.skip()
        t = self.text
        mt = _RE_PAREN_LIT.match(t, self.pos)
        if mt:
            self.pos = mt.end()
            im = float(mt.group(3)) if mt.group(3) else 1.0
            return complex(float(mt.group(1)), im if mt.group(2) == "+" else -im)
        sign = 1.0
        if t.startswith("-i", self.pos) or t.startswith("+i", self.pos):
            sign = -1.0 if t[self.pos] == "-" else 1.0
            self.pos += 1
        if t.startswith("i", self.pos):
            self.pos += 1
            return complex(0.0, sign)
        mt = _RE_NUM.match(t, self.pos)
        if not mt:
            self.error("expected a symbol atom or literal")
        self.pos = mt.end()
        x = float(mt.group())
        if t.startswith("i", self.pos):
            self.pos += 1
            return complex(0.0, x)
        return complex(x, 0.0)


def parse_symbol(text: str):
    """Parse the text grammar documented in the module docstring."""
    return _Parser(text).parse()


# --------------------------------------------------------------------------- JSON


def to_json_obj(g) -> dict:
    if isinstance(g, Mono):
        return {"type": "Mono", "a": g.a, "b": g.b, "c": [g.c.real, g.c.imag]}
    if isinstance(g, RadialPower):
        return {"type": "RadialPower", "s": g.s}
    if isinstance(g, RadialSin):
        return {"type": "RadialSin", "omega": g.omega}
    if isinstance(g, RadialExpQ):
        return {"type": "RadialExpQ", "s": g.s}
    if isinstance(g, Angular):
        return {"type": "Angular", "k": g.k}
    if isinstance(g, IndicatorAnnulus):
        return {"type": "IndicatorAnnulus", "center": [g.center.real, g.center.imag],
                "a": g.a, "b": g.b}
    if isinstance(g, Sum):
        return {"type": "Sum", "terms": [to_json_obj(t) for t in g.terms]}
    if isinstance(g, Product):
        return {"type": "Product", "left": to_json_obj(g.left), "right": to_json_obj(g.right)}
    if isinstance(g, Conj):
        return {"type": "Conj", "child": to_json_obj(g.child)}
    raise TypeError(f"not a symbol expression: {g!r}")


def from_json_obj(obj: dict):
    kind = obj.get("type")
    if kind == "Mono":
        return Mono(obj["a"], obj["b"], complex(*obj["c"]))
    if kind == "RadialPower":
        return RadialPower(obj["s"])
    if kind == "RadialSin":
        return RadialSin(obj["omega"])
    if kind == "RadialExpQ":
        return RadialExpQ(obj["s"])
    if kind == "Angular":
        return Angular(obj["k"])
    if kind == "IndicatorAnnulus":
        return IndicatorAnnulus(complex(*obj["center"]), obj["a"], obj["b"])
    if kind == "Sum":
        return Sum(tuple(from_json_obj(t) for t in obj["terms"]))
    if kind == "Product":
        return Product(from_json_obj(obj["left"]), from_json_obj(obj["right"]))
    if kind == "Conj":
        return Conj(from_json_obj(obj["child"]))
    raise SymbolError(f"unknown symbol constructor {kind!r}")


def dumps(g) -> str:
    return json.dumps(to_json_obj(g))


def loads(text: str):
    return from_json_obj(json.loads(text))


# ------------------------------------------------------------------------ catalog


@dataclass(frozen=True)
class ClassTags:
    """Known class membership of a curated symbol (None = not asserted).

    For every built-in the answers do not depend on p, so the ``*_p`` classes are
    recorded once and apply to all finite ``p >= 1``.
    """

    in_BO: bool | None = None
    in_BA_p: bool | None = None
    in_BMO_p: bool | None = None
    in_VO: bool | None = None
    in_VA_p: bool | None = None
    in_VMO_p: bool | None = None

    def consistent(self) -> bool:
        def implies(x, y):
            return not (x is True and y is False)

        checks = [
            implies(self.in_VO, self.in_BO),
            implies(self.in_VA_p, self.in_BA_p),
            implies(self.in_VMO_p, self.in_BMO_p),
            implies(self.in_BO, self.in_BMO_p),
            implies(self.in_BA_p, self.in_BMO_p),
            implies(self.in_VO, self.in_VMO_p),
            implies(self.in_VA_p, self.in_VMO_p),
        ]
        return all(checks)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    expr: object
    tags: ClassTags


def builtin_catalog() -> list:
    """Curated symbols with known membership in the oscillation classes."""
    re_z = Sum((Mono(1, 0, 0.5), Mono(0, 1, 0.5)))
    return [
        CatalogEntry("const", Mono(0, 0, 1.0),
                     ClassTags(True, True, True, True, False, True)),
        CatalogEntry("conj_z", Mono(0, 1, 1.0),
                     ClassTags(True, False, True, False, False, False)),
        CatalogEntry("re_z", re_z,
                     ClassTags(True, False, True, False, False, False)),
        CatalogEntry("disk_ind", IndicatorAnnulus(0, 0, 1),
                     ClassTags(False, True, True, False, True, True)),
        CatalogEntry("radial_sq", RadialPower(2.0),
                     ClassTags(False, False, False, False, False, False)),
        CatalogEntry("bounded_osc", RadialSin(1.0),
                     ClassTags(True, True, True, False, False, False)),
        CatalogEntry("gauss_bump", RadialExpQ(-0.25),
                     ClassTags(True, True, True, True, True, True)),
    ]


def catalog_entry(name: str) -> CatalogEntry:
    for e in builtin_catalog():
        if e.name == name:
            return e
    raise KeyError(f"no catalog symbol named {name!r}")


def resolve_symbol(text: str):
    """Catalog name or expression text -> expression."""
    for e in builtin_catalog():
        if e.name == text:
            return e.expr
    return parse_symbol(text)
