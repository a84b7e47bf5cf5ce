"""Profile-generated smooth test forms, closed under dbar and monomial pullback.

A scalar coefficient is a :class:`Field`: a sum of products of atoms, where an
atom is either a 1D profile evaluated at a polynomial argument (``phi3(z2*z3)``)
or a power of a polynomial (Jacobians, conjugated holomorphic coefficients,
``|f~|^{2 lambda}`` unit factors).  Profiles are ``sum c w^p wbar^q h^(j)(|w|^2)``
for a radial function ``h``, which makes Wirtinger derivatives exact.

An (n, q) test form is ``sum_K F_K dz_1^...^dz_n ^ dzbar_K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from .forms import DimensionError, ExteriorForm, MonomialMap, SparsePoly, pullback, sort_sign

LAM = sp.symbols("lambda1:4")

# Gaussian tails beyond this many radii are below 1e-27 and treated as zero.
GAUSS_TRUNCATION = 8.0


# ---------------------------------------------------------------------------
# Radial functions h(t), t = |w|^2
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianRadial:
    radius: float

    def deriv(self, j: int, t):
        r2 = self.radius ** 2
        return (-1.0 / r2) ** j * np.exp(-np.asarray(t, dtype=float) / r2)

    @property
    def t_support(self) -> float:
        return (GAUSS_TRUNCATION * self.radius) ** 2

    @property
    def t_features(self) -> tuple:
        return ()

    @property
    def scale(self) -> float:
        return self.radius


_T = sp.Symbol("t", real=True)


@dataclass(frozen=True)
class SympyRadial:
    """``h`` given by a sympy expression in ``t`` on ``(t_lo, t_hi)``, constant outside."""

    expr_src: str
    t_lo: float
    t_hi: float
    below: float
    above: float

    @cached_property
    def _expr(self):
        return sp.sympify(self.expr_src, locals={"t": _T})

    def _compiled(self, j: int):
        cache = self.__dict__.setdefault("_cache", {})
        if j not in cache:
            cache[j] = sp.lambdify(_T, sp.diff(self._expr, _T, j) if j else self._expr, "numpy")
        return cache[j]

    def deriv(self, j: int, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if j == 0:
            out[t <= self.t_lo] = self.below
            out[t >= self.t_hi] = self.above
        inside = (t > self.t_lo) & (t < self.t_hi)
        if np.any(inside):
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                vals = np.asarray(self._compiled(j)(t[inside]), dtype=float)
            out[inside] = np.nan_to_num(vals, nan=0.0, posinf=0.0, neginf=0.0)
        return out

    @property
    def t_support(self) -> float:
        return self.t_hi if self.above == 0 else math.inf

    @property
    def t_features(self) -> tuple:
        return tuple(x for x in (self.t_lo, self.t_hi) if 0 < x < math.inf)

    @property
    def scale(self) -> float:
        """Width (in |w|) of the non-constant region."""
        # compactly supported pieces are only C-infinity at their edges, so
        # quadrature panels must be a fraction of the transition width
        lo = math.sqrt(self.t_lo) if self.t_lo > 0 else 0.0
        width = math.sqrt(self.t_hi) - lo
        return width / 8 if lo == 0 else width / 4


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Profile1D:
    """``f(u) = sum c * w^p * wbar^q * h^(j)(|w|^2)`` with ``w = u - center``."""

    radial: object
    terms: tuple  # ((p, q, j), complex coef), sorted
    center: complex = 0j
    kind: str = "gaussian-bump"
    parent: "Profile1D | None" = field(default=None, compare=False)
    derivative: str = ""  # "dbar" / "dz" when built structurally from ``parent``

    @staticmethod
    def _clean(terms: Mapping) -> tuple:
        return tuple(sorted((k, complex(c)) for k, c in terms.items() if c != 0))

    def __call__(self, u):
        w = np.asarray(u, dtype=complex) - self.center
        t = (w * w.conj()).real
        out = np.zeros(w.shape, dtype=complex)
        hcache = {}
        for (p, q, j), c in self.terms:
            if j not in hcache:
                hcache[j] = self.radial.deriv(j, t)
            out = out + c * w ** p * w.conj() ** q * hcache[j]
        return out

    def dzbar(self) -> "Profile1D":
        acc: dict = {}
        for (p, q, j), c in self.terms:
            if q:
                acc[(p, q - 1, j)] = acc.get((p, q - 1, j), 0) + c * q
            acc[(p + 1, q, j + 1)] = acc.get((p + 1, q, j + 1), 0) + c
        return Profile1D(self.radial, self._clean(acc), self.center, self.kind, parent=self, derivative="dbar")

    def dz(self) -> "Profile1D":
        acc: dict = {}
        for (p, q, j), c in self.terms:
            if p:
                acc[(p - 1, q, j)] = acc.get((p - 1, q, j), 0) + c * p
            acc[(p, q + 1, j + 1)] = acc.get((p, q + 1, j + 1), 0) + c
        return Profile1D(self.radial, self._clean(acc), self.center, self.kind, parent=self, derivative="dz")

    def scaled(self, c: complex) -> "Profile1D":
        return Profile1D(self.radial, self._clean({k: v * c for k, v in self.terms}), self.center, self.kind)

    def value_at_center(self) -> complex:
        return complex(sum(c * self.radial.deriv(j, np.zeros(1))[0] for (p, q, j), c in self.terms if p == 0 and q == 0))

    @property
    def support_radius(self) -> float:
        return math.sqrt(self.radial.t_support) + abs(self.center)

    @property
    def scale(self) -> float:
        return self.radial.scale

    @property
    def feature_radii(self) -> tuple:
        return tuple(math.sqrt(t) for t in self.radial.t_features)

    def is_zero(self) -> bool:
        return not self.terms


def gaussian_bump(value: complex = 1.0, radius: float = 0.3, center: complex = 0j) -> Profile1D:
    """``value * exp(-|z - center|^2 / radius^2)``."""
    return Profile1D(GaussianRadial(float(radius)), Profile1D._clean({(0, 0, 0): value}), complex(center))


def poly_bump(coeffs: Mapping[tuple, complex], radius: float = 0.3, center: complex = 0j) -> Profile1D:
    """``sum c_{pq} w^p wbar^q * exp(-|w|^2 / radius^2)``; keys are ``(p, q)``."""
    return Profile1D(
        GaussianRadial(float(radius)),
        Profile1D._clean({(p, q, 0): c for (p, q), c in coeffs.items()}),
        complex(center),
        kind="polynomial-times-bump",
    )


def compact_bump(value: complex = 1.0, radius: float = 1.0, center: complex = 0j) -> Profile1D:
    """``value * exp(1 - 1/(1 - |w|^2/radius^2))``, supported in the closed disc."""
    r2 = float(radius) ** 2
    h = SympyRadial(f"exp(1 - 1/(1 - t/{r2!r}))", -math.inf, r2, 0.0, 0.0)
    return Profile1D(h, Profile1D._clean({(0, 0, 0): value}), complex(center), kind="compact-smoothstep-bump")


_SMOOTHSTEP = "exp(-1/({x}))/(exp(-1/({x})) + exp(-1/(1 - ({x}))))"


def plateau(inner: float, outer: float) -> Profile1D:
    """1 on ``|w| <= inner``, 0 on ``|w| >= outer``, smooth in between."""
    x = f"({outer!r} - sqrt(t))/({outer!r} - {inner!r})"
    h = SympyRadial(_SMOOTHSTEP.format(x=x), inner ** 2, outer ** 2, 1.0, 0.0)
    return Profile1D(h, ((( 0, 0, 0), 1 + 0j),), 0j, kind="compact-smoothstep-bump")


def inverted_plateau(inner: float, outer: float) -> Profile1D:
    """``1 - plateau(inner, outer)(1/w)``: the complement transported by ``w -> 1/w``."""
    x = f"({outer!r} - 1/sqrt(t))/({outer!r} - {inner!r})"
    h = SympyRadial(f"1 - {_SMOOTHSTEP.format(x=x)}", 1 / outer ** 2, 1 / inner ** 2, 1.0, 0.0)
    return Profile1D(h, (((0, 0, 0), 1 + 0j),), 0j, kind="compact-smoothstep-bump")


# ---------------------------------------------------------------------------
# Atoms, products and fields
# ---------------------------------------------------------------------------


def _eval_poly(P: SparsePoly, Z):
    total = 0j
    for c, e in P.numeric_terms():
        v = c
        for zi, k in zip(Z, e):
            if k:
                v = v * zi ** k
        total = total + v
    return total


@dataclass(frozen=True)
class ProfileAtom:
    """``profile(arg(z))`` for a polynomial argument."""

    profile: Profile1D
    arg: SparsePoly

    def variables(self) -> frozenset:
        return self.arg.variables()

    def evaluate(self, Z, lam=None):
        return self.profile(_eval_poly(self.arg, Z))

    def d(self, k: int, bar: bool) -> list:
        dP = self.arg.diff(k)
        if dP.is_zero():
            return []
        prof = self.profile.dzbar() if bar else self.profile.dz()
        if prof.is_zero():
            return []
        return [(1, (ProfileAtom(prof, self.arg), PolyAtom(dP, 0, 1) if bar else PolyAtom(dP, 1, 0)))]

    def substitute(self, images) -> "ProfileAtom":
        return ProfileAtom(self.profile, self.arg.substitute(images))


@dataclass(frozen=True)
class PolyAtom:
    """``P^hol * conj(P)^anti * |P|^(2 lambda_j)``; ``lam_index`` None means no lambda power."""

    poly: SparsePoly
    hol: int = 1
    anti: int = 0
    lam_index: int | None = None

    def variables(self) -> frozenset:
        return self.poly.variables()

    def evaluate(self, Z, lam=None):
        P = _eval_poly(self.poly, Z)
        out = 1
        if self.hol:
            out = out * P ** self.hol
        if self.anti:
            out = out * np.conj(P) ** self.anti
        if self.lam_index is not None:
            if lam is None:
                raise ValueError("lambda needed to evaluate a unit power")
            out = out * np.exp(lam[self.lam_index] * np.log(np.abs(P) ** 2))
        return out

    def d(self, k: int, bar: bool) -> list:
        dP = self.poly.diff(k)
        if dP.is_zero():
            return []
        power = self.anti if bar else self.hol
        coef = sp.Integer(power) + (LAM[self.lam_index] if self.lam_index is not None else 0)
        if coef == 0:
            return []
        new_hol, new_anti = (self.hol, self.anti - 1) if bar else (self.hol - 1, self.anti)
        atoms = [PolyAtom(dP, 0, 1) if bar else PolyAtom(dP, 1, 0)]
        if new_hol or new_anti or self.lam_index is not None:
            atoms.append(PolyAtom(self.poly, new_hol, new_anti, self.lam_index))
        return [(coef, tuple(atoms))]

    def substitute(self, images) -> "PolyAtom":
        return PolyAtom(self.poly.substitute(images), self.hol, self.anti, self.lam_index)

    def is_constant(self) -> bool:
        return not self.poly.variables() or (self.hol == 0 and self.anti == 0 and self.lam_index is None)


def _atom_key(a) -> tuple:
    return (type(a).__name__, repr(a))


def _canon(atoms) -> tuple:
    """Drop constant polynomial atoms (folded into the coefficient) and sort."""
    const = 1 + 0j
    keep = []
    for a in atoms:
        if isinstance(a, PolyAtom) and not a.poly.variables():
            const *= complex(a.evaluate([], [0, 0, 0]) if a.lam_index is None else np.nan)
            if a.lam_index is not None:
                raise ValueError("constant unit with lambda power")
            continue
        if isinstance(a, PolyAtom) and a.hol == 0 and a.anti == 0 and a.lam_index is None:
            continue
        keep.append(a)
    return const, tuple(sorted(keep, key=_atom_key))


@dataclass(frozen=True)
class Product:
    coef: complex
    atoms: tuple
    lam: object = sp.Integer(1)  # sympy polynomial in lambda

    def variables(self) -> frozenset:
        out = frozenset()
        for a in self.atoms:
            out = out | a.variables()
        return out

    def lam_free(self) -> bool:
        return self.lam == 1 and not any(isinstance(a, PolyAtom) and a.lam_index is not None for a in self.atoms)

    def lam_value(self, lam) -> complex:
        if self.lam == 1:
            return 1.0
        return complex(self.lam.subs({LAM[i]: lam[i] for i in range(3)}))

    def evaluate_atoms(self, Z, lam=None):
        out = self.coef
        for a in self.atoms:
            out = out * a.evaluate(Z, lam)
        return out


class Field:
    """Sum of :class:`Product` terms; immutable."""

    __slots__ = ("n", "products")

    def __init__(self, n: int, products: Sequence[Product] = ()):
        self.n = n
        acc: dict = {}
        for pr in products:
            const, atoms = _canon(pr.atoms)
            key = (atoms, sp.srepr(sp.expand(pr.lam)))
            c = pr.coef * const
            if key in acc:
                acc[key] = (acc[key][0] + c, acc[key][1])
            else:
                acc[key] = (c, sp.expand(pr.lam))
        self.products = tuple(
            Product(c, atoms, lam) for (atoms, _), (c, lam) in acc.items() if c != 0 and lam != 0
        )

    @classmethod
    def constant(cls, n: int, c: complex = 1.0) -> "Field":
        return cls(n, [Product(complex(c), ())])

    @classmethod
    def profile(cls, n: int, prof: Profile1D, arg: SparsePoly | int) -> "Field":
        if isinstance(arg, int):
            arg = SparsePoly.var(n, arg)
        return cls(n, [Product(1.0, (ProfileAtom(prof, arg),))])

    @classmethod
    def poly(cls, P: SparsePoly, conjugate: bool = False) -> "Field":
        return cls(P.n, [Product(1.0, (PolyAtom(P, 0, 1) if conjugate else PolyAtom(P, 1, 0),))])

    def is_zero(self) -> bool:
        return not self.products

    def __add__(self, other: "Field") -> "Field":
        if other.n != self.n:
            raise DimensionError("field dimensions differ")
        return Field(self.n, self.products + other.products)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c, lam=None) -> "Field":
        return Field(self.n, [Product(p.coef * complex(c), p.atoms, p.lam * (lam if lam is not None else 1)) for p in self.products])

    def __mul__(self, other):
        if not isinstance(other, Field):
            return self.scale(other)
        out = []
        for p in self.products:
            for q in other.products:
                out.append(Product(p.coef * q.coef, p.atoms + q.atoms, p.lam * q.lam))
        return Field(self.n, out)

    __rmul__ = __mul__

    def _d(self, k: int, bar: bool) -> "Field":
        out = []
        for pr in self.products:
            for i, a in enumerate(pr.atoms):
                for c, new in a.d(k, bar):
                    rest = pr.atoms[:i] + pr.atoms[i + 1:]
                    if isinstance(c, sp.Basic) and c.free_symbols:
                        out.append(Product(pr.coef, rest + tuple(new), pr.lam * c))
                    else:
                        out.append(Product(pr.coef * complex(c), rest + tuple(new), pr.lam))
        return Field(self.n, out)

    def dbar(self, k: int) -> "Field":
        return self._d(k, True)

    def dz(self, k: int) -> "Field":
        return self._d(k, False)

    def variables(self) -> frozenset:
        out = frozenset()
        for p in self.products:
            out |= p.variables()
        return out

    def evaluate(self, Z, lam=None):
        Z = [np.asarray(z, dtype=complex) for z in Z]
        shape = np.broadcast(*Z).shape if Z else ()
        total = np.zeros(shape, dtype=complex)
        for p in self.products:
            total = total + p.lam_value(lam) * p.evaluate_atoms(Z, lam)
        return total

    def substitute(self, images: Sequence[SparsePoly]) -> "Field":
        m = images[0].n
        return Field(m, [Product(p.coef, tuple(a.substitute(images) for a in p.atoms), p.lam) for p in self.products])

    def __repr__(self):
        return f"Field(n={self.n}, products={len(self.products)})"


# ---------------------------------------------------------------------------
# Test forms
# ---------------------------------------------------------------------------


class BidegreeError(ValueError):
    pass


class TestForm:
    """``sum_K F_K dz_1 ^ ... ^ dz_n ^ dzbar_K`` with |K| = q."""

    __test__ = False  # keep pytest from collecting it
    __slots__ = ("n", "q", "summands", "radii")

    def __init__(self, n: int, q: int, summands: Mapping[tuple, Field] | None = None, radii: Mapping[int, float] | None = None):
        self.n, self.q = n, q
        comps: dict = {}
        for K, F in (summands or {}).items():
            s, Ks = sort_sign(tuple(K))
            if len(K) != q or s == 0:
                raise BidegreeError(f"index set {K} inconsistent with q={q}")
            F = F.scale(s) if s < 0 else F
            comps[Ks] = comps[Ks] + F if Ks in comps else F
        self.summands = {K: F for K, F in sorted(comps.items()) if not F.is_zero()}
        self.radii = dict(radii or {})

    @classmethod
    def scalar(cls, F: Field, K: Sequence[int] = (), radii=None) -> "TestForm":
        return cls(F.n, len(K), {tuple(K): F}, radii)

    def is_zero(self) -> bool:
        return not self.summands

    def __add__(self, other: "TestForm") -> "TestForm":
        if (self.n, self.q) != (other.n, other.q):
            raise BidegreeError("bidegrees differ")
        out = dict(self.summands)
        for K, F in other.summands.items():
            out[K] = out[K] + F if K in out else F
        return TestForm(self.n, self.q, out, {**other.radii, **self.radii})

    def scale(self, F) -> "TestForm":
        return TestForm(self.n, self.q, {K: G * F for K, G in self.summands.items()}, self.radii)

    def evaluate(self, point: Sequence[complex], lam=None) -> dict:
        Z = [np.asarray(z, dtype=complex) for z in point]
        if len(Z) != self.n:
            raise DimensionError("point dimension differs")
        return {K: F.evaluate(Z, lam) for K, F in self.summands.items()}

    def __repr__(self):
        return f"TestForm(n={self.n}, q={self.q}, K={list(self.summands)})"


def dbar(t: TestForm) -> TestForm:
    """``dbar(F dz ^ dzbar_K) = (-1)^n sum_k dF/dzbar_k dz ^ dzbar_k ^ dzbar_K``."""
    if t.q >= t.n:
        raise BidegreeError("dbar of a form of top antiholomorphic degree")
    out: dict = {}
    for K, F in t.summands.items():
        for k in range(t.n):
            if k in K:
                continue
            G = F.dbar(k)
            if G.is_zero():
                continue
            s, K2 = sort_sign((k,) + K)
            G = G.scale(s * (-1) ** t.n)
            out[K2] = out[K2] + G if K2 in out else G
    return TestForm(t.n, t.q + 1, out, t.radii)


def pullback_test(t: TestForm, m: MonomialMap) -> TestForm:
    if m.n_target != t.n:
        raise DimensionError("map target dimension differs from form dimension")
    if m.n_source != m.n_target:
        raise DimensionError("(n, q) test forms pull back only under equidimensional maps")
    n = m.n_source
    images = m.images()
    jac = pullback(ExteriorForm.dz(t.n, *range(t.n)), m).coefficient(tuple(range(n)))
    out: dict = {}
    for K, F in t.summands.items():
        G = F.substitute(images) * Field.poly(jac)
        dK = pullback(ExteriorForm.dz(t.n, *K), m) if K else ExteriorForm.function(SparsePoly.constant(n))
        for K2, c in dK.components.items():
            H = G * Field.poly(c, conjugate=True)
            out[K2] = out[K2] + H if K2 in out else H
    return TestForm(n, t.q, out)


def conjugate_form(phi: ExteriorForm) -> dict:
    """``conj(phi)`` as ``{K: Field}`` (coefficients become antiholomorphic)."""
    return {K: Field.poly(p.conjugate_coefficients(), conjugate=True) for K, p in phi.components.items()}


def product_split(phi_tilde: TestForm, phi: ExteriorForm) -> TestForm:
    """``phi_tilde ^ conj(phi)`` for an (n, 0) form and a holomorphic (n-2)-form."""
    if phi_tilde.q != 0:
        raise BidegreeError("first factor must have bidegree (n, 0)")
    if phi.n != phi_tilde.n:
        raise DimensionError("dimensions differ")
    if phi.degree != phi.n - 2 and not phi.is_zero():
        raise BidegreeError("second factor must be a holomorphic (n-2)-form")
    F = phi_tilde.summands.get((), Field(phi_tilde.n))
    return TestForm(phi.n, phi.n - 2, {K: F * G for K, G in conjugate_form(phi).items()}, phi_tilde.radii)
