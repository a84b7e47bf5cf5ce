"""Exact exterior algebra of holomorphic forms with sparse polynomial coefficients.

Coordinates are 0-based internally; the text format and ``repr`` use the
1-based names ``z1 .. zn``.  Coefficients are Gaussian rationals, so every
identity checked on these objects holds exactly.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class DimensionError(ValueError):
    """Operands live in ambient spaces of different dimension."""


# ---------------------------------------------------------------------------
# Gaussian rationals
# ---------------------------------------------------------------------------


class QI:
    """Exact complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, QI):
            re, im = re.re, re.im + Fraction(im)
        elif isinstance(re, complex):
            re, im = Fraction(re.real), Fraction(re.imag) + Fraction(im)
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def coerce(x) -> "QI":
        return x if isinstance(x, QI) else QI(x)

    def __add__(self, other):
        o = QI.coerce(other)
        return QI(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-QI.coerce(other))

    def __rsub__(self, other):
        return QI.coerce(other) - self

    def __mul__(self, other):
        o = QI.coerce(other)
        return QI(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = QI.coerce(other)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return self * QI(o.re / d, -o.im / d)

    def conjugate(self) -> "QI":
        return QI(self.re, -self.im)

    def __eq__(self, other):
        try:
            o = QI.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return format_qi(self)


def format_qi(c: QI) -> str:
    if c.im == 0:
        return str(c.re)
    if c.re == 0:
        return f"{c.im}*i"
    sign = "+" if c.im > 0 else "-"
    return f"({c.re}{sign}{abs(c.im)}*i)"


def parse_qi(text: str) -> QI:
    """Parse ``3``, ``-1/2``, ``2*i``, ``i``, ``(1/2-3*i)``."""
    s = text.strip().replace(" ", "")
    if s.startswith("(") and s.endswith(")"):
        s = s[1:-1]
    if not s:
        raise ValueError("empty coefficient")
    total = QI()
    for m in re.finditer(r"([+-]?)([^+-]+)", s):
        sign = -1 if m.group(1) == "-" else 1
        part = m.group(2)
        if part.endswith("i"):
            mag = part[:-1].rstrip("*")
            total += QI(0, sign * Fraction(mag if mag else 1))
        else:
            total += QI(sign * Fraction(part))
    return total


# ---------------------------------------------------------------------------
# Sparse polynomials
# ---------------------------------------------------------------------------

Exponent = tuple  # tuple[int, ...]


def _check_exponent(e: Sequence[int], n: int) -> Exponent:
    e = tuple(int(x) for x in e)
    if len(e) != n or any(x < 0 for x in e):
        raise ValueError(f"bad exponent vector {e} for n={n}")
    return e


class SparsePoly:
    """Polynomial in z_1..z_n stored as ``{exponent tuple: QI}`` (no zeros)."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Exponent, object] | None = None):
        self.n = n
        clean = {}
        for e, c in (terms or {}).items():
            c = QI.coerce(c)
            if c:
                e = _check_exponent(e, n)
                clean[e] = clean.get(e, QI()) + c
                if not clean[e]:
                    del clean[e]
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def constant(cls, n: int, c=1) -> "SparsePoly":
        return cls(n, {(0,) * n: c})

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "SparsePoly":
        return cls(len(exps), {tuple(exps): c})

    @classmethod
    def var(cls, n: int, i: int) -> "SparsePoly":
        e = [0] * n
        e[i] = 1
        return cls.monomial(e)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, SparsePoly):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, tuple(self.terms.items())))

    def _like(self, other) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            if other.n != self.n:
                raise DimensionError(f"dimension {self.n} vs {other.n}")
            return other
        return SparsePoly.constant(self.n, other)

    def __add__(self, other):
        o = self._like(other)
        t = dict(self.terms)
        for e, c in o.terms.items():
            t[e] = t.get(e, QI()) + c
        return SparsePoly(self.n, t)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._like(other))

    def __rsub__(self, other):
        return self._like(other) - self

    def __mul__(self, other):
        o = self._like(other)
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in o.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, QI()) + c1 * c2
        return SparsePoly(self.n, t)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = SparsePoly.constant(self.n)
        for _ in range(k):
            out = out * self
        return out

    def diff(self, i: int) -> "SparsePoly":
        t = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                t[tuple(e2)] = c * e[i]
        return SparsePoly(self.n, t)

    def set_zero(self, idx: Iterable[int]) -> "SparsePoly":
        idx = set(idx)
        return SparsePoly(self.n, {e: c for e, c in self.terms.items() if not any(e[i] for i in idx)})

    def divisible_by_var(self, i: int) -> bool:
        return all(e[i] > 0 for e in self.terms)

    def divisible_by_monomial(self, a: Sequence[int]) -> bool:
        return all(all(x >= y for x, y in zip(e, a)) for e in self.terms)

    def divide_monomial(self, a: Sequence[int]) -> "SparsePoly":
        if not self.divisible_by_monomial(a):
            raise ValueError("not divisible")
        return SparsePoly(self.n, {tuple(x - y for x, y in zip(e, a)): c for e, c in self.terms.items()})

    def conjugate_coefficients(self) -> "SparsePoly":
        return SparsePoly(self.n, {e: c.conjugate() for e, c in self.terms.items()})

    def variables(self) -> frozenset:
        return frozenset(i for e in self.terms for i, x in enumerate(e) if x)

    def substitute(self, images: Sequence["SparsePoly"]) -> "SparsePoly":
        """Compose with ``z_i -> images[i]`` (all images share one ambient)."""
        if len(images) != self.n:
            raise DimensionError("need one image per variable")
        m = images[0].n if images else 0
        out = SparsePoly(m)
        for e, c in self.terms.items():
            term = SparsePoly.constant(m, c)
            for img, k in zip(images, e):
                if k:
                    term = term * img ** k
            out = out + term
        return out

    def numeric_terms(self) -> list[tuple[complex, Exponent]]:
        return [(complex(c), e) for e, c in self.terms.items()]

    def __call__(self, z):
        """Numeric evaluation; ``z`` is a sequence of n arrays or scalars."""
        total = 0
        for c, e in self.numeric_terms():
            v = c
            for zi, k in zip(z, e):
                if k:
                    v = v * zi ** k
            total = total + v
        return total

    def __repr__(self):
        return format_poly(self)


def format_poly(p: SparsePoly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for e, c in p.terms.items():
        mono = "*".join(f"z{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
        if not mono:
            parts.append(format_qi(c))
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append("-" + mono)
        else:
            parts.append(f"{format_qi(c)}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")


# ---------------------------------------------------------------------------
# Exterior forms
# ---------------------------------------------------------------------------


def sort_sign(indices: Sequence[int]) -> tuple[int, tuple]:
    """Sign of the permutation sorting ``indices``; 0 if an index repeats."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


class ExteriorForm:
    """Holomorphic k-form ``sum_K c_K(z) dz_K`` with increasing index tuples K."""

    __slots__ = ("n", "degree", "components")

    def __init__(self, n: int, degree: int, components: Mapping[tuple, SparsePoly] | None = None):
        self.n = n
        self.degree = degree
        comps: dict = {}
        for K, p in (components or {}).items():
            K = tuple(K)
            if len(K) != degree or list(K) != sorted(set(K)) or any(not 0 <= i < n for i in K):
                raise ValueError(f"bad index set {K} for degree {degree}, n={n}")
            if not isinstance(p, SparsePoly):
                p = SparsePoly.constant(n, p)
            if p.n != n:
                raise DimensionError("coefficient lives in another dimension")
            if not p.is_zero():
                comps[K] = comps[K] + p if K in comps else p
                if comps[K].is_zero():
                    del comps[K]
        self.components = dict(sorted(comps.items()))

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int, degree: int = 0) -> "ExteriorForm":
        return cls(n, degree)

    @classmethod
    def function(cls, p: SparsePoly) -> "ExteriorForm":
        return cls(p.n, 0, {(): p})

    @classmethod
    def dz(cls, n: int, *indices: int) -> "ExteriorForm":
        """``dz_{i1} ^ ... ^ dz_{ik}`` (0-based indices, any order)."""
        s, K = sort_sign(indices)
        if s == 0:
            return cls(n, len(indices))
        return cls(n, len(K), {K: SparsePoly.constant(n, s)})

    # -- algebra ----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.components

    def __eq__(self, other):
        if not isinstance(other, ExteriorForm):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return self.n == other.n
        return self.n == other.n and self.degree == other.degree and self.components == other.components

    def __hash__(self):
        return hash((self.n, self.degree, tuple(self.components.items())))

    def _check(self, other: "ExteriorForm"):
        if self.n != other.n:
            raise DimensionError(f"dimension {self.n} vs {other.n}")

    def __add__(self, other):
        self._check(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        comps = dict(self.components)
        for K, p in other.components.items():
            comps[K] = comps[K] + p if K in comps else p
        return ExteriorForm(self.n, self.degree, comps)

    def __neg__(self):
        return ExteriorForm(self.n, self.degree, {K: -p for K, p in self.components.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, p) -> "ExteriorForm":
        if not isinstance(p, SparsePoly):
            p = SparsePoly.constant(self.n, p)
        return ExteriorForm(self.n, self.degree, {K: p * c for K, c in self.components.items()})

    def __mul__(self, p):
        return self.scale(p)

    __rmul__ = __mul__

    def coefficient(self, K: Sequence[int]) -> SparsePoly:
        return self.components.get(tuple(K), SparsePoly(self.n))

    def conjugate_coefficients(self) -> "ExteriorForm":
        return ExteriorForm(self.n, self.degree, {K: p.conjugate_coefficients() for K, p in self.components.items()})

    def __repr__(self):
        return serialize(self)


def wedge(a: ExteriorForm, b: ExteriorForm) -> ExteriorForm:
    a._check(b)
    deg = a.degree + b.degree
    out: dict = {}
    if deg <= a.n:
        for Ka, pa in a.components.items():
            for Kb, pb in b.components.items():
                s, K = sort_sign(Ka + Kb)
                if s:
                    term = pa * pb * s
                    out[K] = out[K] + term if K in out else term
    return ExteriorForm(a.n, deg, out)


def exterior_d(a: ExteriorForm) -> ExteriorForm:
    out: dict = {}
    for K, p in a.components.items():
        for i in range(a.n):
            dp = p.diff(i)
            if dp.is_zero():
                continue
            s, K2 = sort_sign((i,) + K)
            if s:
                term = dp * s
                out[K2] = out[K2] + term if K2 in out else term
    return ExteriorForm(a.n, a.degree + 1, out)


def restrict_extend(a: ExteriorForm, idx: Iterable[int]) -> ExteriorForm:
    """Pull back to ``{z_i = 0, i in idx}`` and extend constantly."""
    idx = set(idx)
    comps = {K: p.set_zero(idx) for K, p in a.components.items() if not idx.intersection(K)}
    return ExteriorForm(a.n, a.degree, comps)


@dataclass(frozen=True)
class DivisorSpec:
    """The normal crossings divisor ``{z^a = 0}``."""

    monomial: tuple

    def __post_init__(self):
        object.__setattr__(self, "monomial", tuple(int(x) for x in self.monomial))
        if any(x < 0 for x in self.monomial) or not any(self.monomial):
            raise ValueError("divisor monomial needs a positive entry and no negative ones")

    @property
    def components(self) -> tuple:
        return tuple(i for i, x in enumerate(self.monomial) if x > 0)

    @classmethod
    def of_indices(cls, n: int, idx: Iterable[int]) -> "DivisorSpec":
        e = [0] * n
        for i in idx:
            e[i] = 1
        return cls(tuple(e))


def vanishes_on(a: ExteriorForm, d: DivisorSpec) -> bool:
    if len(d.monomial) != a.n:
        raise DimensionError("divisor and form dimensions differ")
    return all(restrict_extend(a, {i}).is_zero() for i in d.components)


def vanishes_on_divisibility(a: ExteriorForm, d: DivisorSpec) -> bool:
    """Same predicate via the exponent test: dz_K with i not in K must be divisible by z_i."""
    return all(
        p.divisible_by_var(i)
        for i in d.components
        for K, p in a.components.items()
        if i not in K
    )


def log_wedge_is_holomorphic(a: ExteriorForm, sigma: Sequence[int]) -> bool:
    """Is ``(d sigma / sigma) ^ a`` holomorphic, i.e. is ``d sigma ^ a`` divisible by sigma?"""
    ds = exterior_d(ExteriorForm.function(SparsePoly.monomial(sigma)))
    w = wedge(ds, a)
    return all(p.divisible_by_monomial(sigma) for p in w.components.values())


def simple_factors(monomials: Sequence[Sequence[int]]) -> frozenset:
    if not monomials:
        raise ValueError("need at least one monomial")
    n = len(monomials[0])
    return frozenset(k for k in range(n) if sum(1 for a in monomials if a[k] > 0) == 1)


# ---------------------------------------------------------------------------
# Monomial maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonomialMap:
    """``x_j = c_j z^{m_j}``: maps C^{n_source} (z) to C^{n_target} (x)."""

    n_source: int
    exponents: tuple
    coefficients: tuple = field(default=())

    def __post_init__(self):
        exps = tuple(tuple(int(x) for x in e) for e in self.exponents)
        for e in exps:
            _check_exponent(e, self.n_source)
        coefs = tuple(QI.coerce(c) for c in self.coefficients) or tuple(QI(1) for _ in exps)
        if len(coefs) != len(exps):
            raise ValueError("one coefficient per image")
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefficients", coefs)

    @property
    def n_target(self) -> int:
        return len(self.exponents)

    @classmethod
    def identity(cls, n: int) -> "MonomialMap":
        return cls(n, tuple(tuple(int(i == j) for i in range(n)) for j in range(n)))

    def images(self) -> list[SparsePoly]:
        return [SparsePoly.monomial(e, c) for e, c in zip(self.exponents, self.coefficients)]

    def compose(self, inner: "MonomialMap") -> "MonomialMap":
        """``self o inner``: first apply ``inner``, then ``self``."""
        if inner.n_target != self.n_source:
            raise DimensionError("maps do not compose")
        exps, coefs = [], []
        for e, c in zip(self.exponents, self.coefficients):
            new = [0] * inner.n_source
            cc = c
            for k, ek in enumerate(e):
                cc = cc * _qi_pow(inner.coefficients[k], ek)
                for i in range(inner.n_source):
                    new[i] += ek * inner.exponents[k][i]
            exps.append(tuple(new))
            coefs.append(cc)
        return MonomialMap(inner.n_source, tuple(exps), tuple(coefs))

    def __call__(self, z):
        return [img(z) for img in self.images()]


class PolyMap:
    """``x_j = P_j(z)`` for arbitrary polynomial images (e.g. ``x3 = z3 - z1*z2``)."""

    def __init__(self, images: Sequence[SparsePoly]):
        images = list(images)
        if not images:
            raise ValueError("need at least one image")
        ns = {p.n for p in images}
        if len(ns) != 1:
            raise DimensionError("images live in different dimensions")
        self.n_source = ns.pop()
        self._images = images

    @property
    def n_target(self) -> int:
        return len(self._images)

    def images(self) -> list[SparsePoly]:
        return list(self._images)

    def __call__(self, z):
        return [img(z) for img in self._images]


def _qi_pow(c: QI, k: int) -> QI:
    out = QI(1)
    for _ in range(k):
        out = out * c
    return out


def pullback(a: ExteriorForm, m: "MonomialMap | PolyMap") -> ExteriorForm:
    if m.n_target != a.n:
        raise DimensionError("map target dimension differs from form dimension")
    imgs = m.images()
    dimgs = [exterior_d(ExteriorForm.function(p)) for p in imgs]
    out = ExteriorForm.zero(m.n_source, a.degree)
    for K, p in a.components.items():
        term = ExteriorForm.function(p.substitute(imgs))
        for k in K:
            term = wedge(term, dimgs[k])
        out = out + term
    return out


# ---------------------------------------------------------------------------
# Text serialization
# ---------------------------------------------------------------------------


def serialize(a: ExteriorForm) -> str:
    """Canonical text: ``coef * z^(e1,...,en) dz{K}`` terms joined by `` + ``."""
    if a.is_zero():
        return f"0 [n={a.n}, k={a.degree}]"
    parts = []
    for K, p in a.components.items():
        Ks = ",".join(str(i + 1) for i in K)
        for e, c in p.terms.items():
            parts.append(f"{format_qi(c)} * z^({','.join(map(str, e))}) dz{{{Ks}}}")
    return " + ".join(parts)


_CANON = re.compile(r"^\s*(?P<c>.+?)\s*\*\s*z\^\((?P<e>[\d,\s]*)\)\s*dz\{(?P<K>[\d,\s]*)\}\s*$")
_ZERO = re.compile(r"^\s*0\s*\[n=(\d+),\s*k=(\d+)\]\s*$")


def _split_terms(text: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
        if ch in "+-" and depth == 0 and cur.strip() and not cur.rstrip().endswith(("*", "/", "^")):
            parts.append(cur)
            cur = "" if ch == "+" else "-"
        else:
            cur += ch
    if cur.strip():
        parts.append(cur)
    return parts


def parse_form(text: str, n: int | None = None) -> ExteriorForm:
    """Inverse of :func:`serialize`; also accepts ``z2*z1^2 dz1^dz3`` style terms.

    In the informal style ``n`` must be given (or is inferred from the largest
    index mentioned); a term without differentials is a 0-form term.
    """
    m0 = _ZERO.match(text)
    if m0:
        return ExteriorForm(int(m0.group(1)), int(m0.group(2)))
    terms = _split_terms(text)
    parsed = []
    for t in terms:
        m = _CANON.match(t)
        if m:
            e = tuple(int(x) for x in m.group("e").split(",") if x.strip())
            K = tuple(int(x) - 1 for x in m.group("K").split(",") if x.strip())
            parsed.append((parse_qi(m.group("c")), e, K))
        else:
            parsed.append(_parse_informal(t))
    if n is None:
        n = max(
            [len(e) for _, e, _ in parsed if isinstance(e, tuple)]
            + [max([*e.keys(), 0]) + 1 if isinstance(e, dict) else 0 for _, e, _ in parsed]
            + [max(K) + 1 for _, _, K in parsed if K]
            + [1]
        )
    out = None
    for c, e, K in parsed:
        if isinstance(e, dict):
            vec = [0] * n
            for i, k in e.items():
                vec[i] += k
            e = tuple(vec)
        s, Ks = sort_sign(K)
        f = ExteriorForm(n, len(K), {Ks: SparsePoly(n, {e: c * s})} if s else {})
        out = f if out is None else out + f
    return out if out is not None else ExteriorForm(n, 0)


_INF_VAR = re.compile(r"^z(\d+)(?:\^(\d+))?$")


def _parse_informal(t: str):
    t = t.strip()
    sign = QI(1)
    while t.startswith("-"):
        sign = -sign
        t = t[1:].strip()
    pieces = t.split()
    diff_part = [p for p in pieces if p.startswith("dz")]
    scal_part = [p for p in pieces if not p.startswith("dz")]
    K = []
    for d in diff_part:
        for tok in d.split("^"):
            if not re.fullmatch(r"dz\d+", tok):
                raise ValueError(f"cannot parse differential {tok!r}")
            K.append(int(tok[2:]) - 1)
    coef, exps = sign, {}
    for factor in "*".join(scal_part).split("*"):
        if not factor:
            continue
        mv = _INF_VAR.match(factor)
        if mv:
            i = int(mv.group(1)) - 1
            exps[i] = exps.get(i, 0) + int(mv.group(2) or 1)
        else:
            coef = coef * parse_qi(factor)
    return coef, exps, tuple(K)


def parse_monomial(text: str, n: int) -> tuple:
    """``z1^2*z3`` -> exponent tuple of length n."""
    e = [0] * n
    for factor in text.replace(" ", "").split("*"):
        if not factor or factor == "1":
            continue
        mv = _INF_VAR.match(factor)
        if not mv:
            raise ValueError(f"not a monomial factor: {factor!r}")
        e[int(mv.group(1)) - 1] += int(mv.group(2) or 1)
    return tuple(e)


def all_subsets(idx: Sequence[int], size: int) -> list[tuple]:
    return [tuple(c) for c in itertools.combinations(sorted(idx), size)]
