"""Mellin side: chart reduction, explicit continuation in lambda, resonance.

In a normal-crossings chart the integrand is

    prod_{j unflagged} |z^a_j|^(2 lam_j)  ^  prod_{j flagged} dbar |z^a_j|^(2 lam_j)
    ------------------------------------------------------------------------------  ^  t
                               prod_j z^a_j

with t an (n, n - r) test form and r the number of flagged factors.  The
reduction splits every dbar into its dzbar_k pieces.  If z_k is a *simple*
factor (it divides exactly one monomial) the derivative is moved onto the test
data by parts.  Otherwise it acts on the kernel and leaves
``lam_j a_jk / zbar_k``.  When the data is divisible by ``zbar_k`` this pole is
absorbed; if not, a second integration by parts against
``|z_k|^(2 s_k) / zbar_k = dbar_k |z_k|^(2 s_k) / s_k`` removes it and produces
the rational factor ``1/s_k``.  Here ``s_k = sum_j a_jk lam_j``.  What is left is
a sum of ``R(lam) * int prod_k |z_k|^(2 s_k) z_k^-b_k G dV`` with G smooth,
which is holomorphic for Re s_k > -1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import sympy as sp

from .forms import SparsePoly, simple_factors, sort_sign
from .integrate import (
    FieldIntegrator,
    PowerKernel,
    QuadratureSpec,
    direct_field_integral,
    orientation_factor,
)
from .testforms import LAM, BidegreeError, Field, PolyAtom, Product, TestForm

POLE_TOL = 1e-12


class HypothesisError(ValueError):
    """The test form does not absorb ``dzbar_k / zbar_k`` for a non-simple factor."""

    def __init__(self, message: str, k: int):
        super().__init__(message)
        self.k = k


class PoleError(ValueError):
    """Evaluation requested on (or within tolerance of) a pole hyperplane."""


class ConvergenceError(ValueError):
    """The direct integral does not converge absolutely at this lambda."""


# ---------------------------------------------------------------------------
# Charts and lambda points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChartSpec:
    """Monomial chart ``f_j = z^a_j * unit_j``; ``dbar_flags`` are 0-based factor indices."""

    n: int
    exponents: tuple
    units: tuple = ()
    dbar_flags: tuple = ()
    name: str = ""
    unit_radius: float = 1.0

    def __post_init__(self):
        exps = tuple(tuple(int(x) for x in a) for a in self.exponents)
        if not 1 <= len(exps) <= 3:
            raise ValueError("charts carry one to three monomials")
        if any(len(a) != self.n for a in exps):
            raise ValueError("exponent vectors must have length n")
        if any(x < 0 for a in exps for x in a) or any(not any(a) for a in exps):
            raise ValueError("exponents must be non-negative and each monomial non-constant")
        object.__setattr__(self, "exponents", exps)
        flags = tuple(sorted(set(int(j) for j in self.dbar_flags)))
        if any(not 0 <= j < len(exps) for j in flags):
            raise ValueError("dbar flag outside the factor range")
        object.__setattr__(self, "dbar_flags", flags)
        units = tuple(self.units) if self.units else (None,) * len(exps)
        if len(units) != len(exps):
            raise ValueError("one unit (or None) per factor")
        object.__setattr__(self, "units", units)
        self.check_units()

    @property
    def m(self) -> int:
        return len(self.exponents)

    @property
    def simple(self) -> frozenset:
        return simple_factors(self.exponents)

    @property
    def b(self) -> tuple:
        return tuple(sum(a[k] for a in self.exponents) for k in range(self.n))

    def s_forms(self) -> list:
        """``s_k = sum_j a_jk lambda_j`` as sympy expressions."""
        return [sp.Add(*[a[k] * LAM[j] for j, a in enumerate(self.exponents)]) for k in range(self.n)]

    def s_values(self, lam) -> list:
        lam = tuple(lam)
        return [sum(a[k] * lam[j] for j, a in enumerate(self.exponents)) for k in range(self.n)]

    def has_units(self) -> bool:
        return any(u is not None for u in self.units)

    def check_units(self, radius: float | None = None, samples: int = 7):
        """Units must not vanish on the polydisc of ``radius`` (sampled on a polar grid)."""
        if not self.has_units():
            return
        radius = self.unit_radius if radius is None else radius
        r = np.linspace(0, radius, samples)
        th = np.linspace(0, 2 * np.pi, samples, endpoint=False)
        pts = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
        grid = np.meshgrid(*([pts] * self.n), indexing="ij")
        for j, u in enumerate(self.units):
            if u is None:
                continue
            if u.n != self.n:
                raise ValueError("unit lives in the wrong dimension")
            vals = u([g.ravel() for g in grid])
            if np.min(np.abs(vals)) < 1e-12:
                raise ValueError(f"unit of factor {j + 1} vanishes on the chart domain")


@dataclass(frozen=True)
class LambdaPoint:
    lam: tuple

    def __post_init__(self):
        lam = tuple(complex(x) for x in self.lam)
        if not 1 <= len(lam) <= 3:
            raise ValueError("one to three lambda parameters")
        object.__setattr__(self, "lam", lam + (0j,) * (3 - len(lam)))

    def __iter__(self):
        return iter(self.lam)

    def __getitem__(self, i):
        return self.lam[i]


def _as_lam(lam) -> tuple:
    return lam.lam if isinstance(lam, LambdaPoint) else LambdaPoint(tuple(lam)).lam


# ---------------------------------------------------------------------------
# Reduction (shared with the regularization side)
# ---------------------------------------------------------------------------


@dataclass
class ReducedTerm:
    """``coef * lam_factor * int K(z) z^-b zbar^-c data dV``.

    ``kinds[j]`` is "plain" when factor j enters through its kernel
    (``|f_j|^(2 lam_j)`` or ``chi_j``) and "tilde" when dbar acted on it
    (``chi~_j`` on the regularization side; the lambda_j already sits in
    ``lam_factor`` on the Mellin side).
    """

    coef: complex
    lam_factor: object
    b: tuple
    c: tuple
    data: Field
    kinds: tuple
    directions: tuple = ()
    violations: tuple = ()

    def label(self) -> str:
        return ",".join(f"{a}{k + 1}" for a, k in self.directions)


def _unit_fields(chart: ChartSpec, with_lambda: bool) -> Field:
    """``prod_j 1/f~_j`` (and ``|f~_j|^(2 lam_j)`` on the Mellin side) as a field."""
    out = Field.constant(chart.n)
    for j, u in enumerate(chart.units):
        if u is None:
            continue
        atoms = [PolyAtom(u, -1, 0)]
        if with_lambda:
            atoms.append(PolyAtom(u, 0, 0, j))
        out = out * Field(chart.n, [Product(1.0, tuple(atoms))])
    return out


def divide_conj(F: Field, k: int) -> Field | None:
    """``F / zbar_k`` when every product has an antiholomorphic polynomial atom divisible by z_k."""
    out = []
    for pr in F.products:
        for i, a in enumerate(pr.atoms):
            if isinstance(a, PolyAtom) and a.anti >= 1 and a.lam_index is None and a.poly.divisible_by_var(k):
                e = [0] * F.n
                e[k] = 1
                rest = pr.atoms[:i] + pr.atoms[i + 1:]
                new = (PolyAtom(a.poly, a.hol, a.anti - 1), PolyAtom(a.poly.divide_monomial(e), 0, 1))
                out.append(Product(pr.coef, rest + new, pr.lam))
                break
        else:
            return None
    return Field(F.n, out)


def reduce_integrand(chart: ChartSpec, t: TestForm, side: str = "mellin", strict: bool = False) -> list:
    """Integration-by-parts reduction; ``side`` is "mellin" or "regularize"."""
    n, flags = chart.n, chart.dbar_flags
    r = len(flags)
    if t.n != n:
        raise BidegreeError("test form dimension differs from the chart")
    if t.q != n - r:
        raise BidegreeError(f"test form must have bidegree ({n}, {n - r}) for {r} dbar factors")
    if side == "regularize" and chart.has_units():
        raise NotImplementedError("the cutoff side supports units identically 1 only")
    simple = chart.simple
    vol = orientation_factor(n) * (-1) ** (r * n)
    units = _unit_fields(chart, side == "mellin") if chart.has_units() else None
    out = []
    for K, Phi in t.summands.items():
        free = [k for k in range(n) if k not in K]
        base = Phi * units if units is not None else Phi
        for ks in itertools.permutations(free, r):
            sign, _ = sort_sign(tuple(ks) + tuple(K))
            # each partial term: (coef, lam_factor, c, data, kinds, directions)
            partial = [(vol * sign, sp.Integer(1), [0] * n, base, ["plain"] * chart.m, [])]
            ibp = []
            for j, k in zip(flags, ks):
                a_jk = chart.exponents[j][k]
                u = chart.units[j]
                if a_jk and k in simple:
                    ibp.append(k)
                    partial = [(co, lf, c, d, kd, dr + [("ibp", k)]) for co, lf, c, d, kd, dr in partial]
                    continue
                nxt = []
                for co, lf, c, d, kd, dr in partial:
                    if a_jk:
                        c2 = list(c)
                        c2[k] += 1
                        kd2 = list(kd)
                        kd2[j] = "tilde"
                        lf2 = lf * LAM[j] if side == "mellin" else lf
                        nxt.append((co * a_jk, lf2, c2, d, kd2, dr + [("act", k)]))
                    if u is not None and not u.diff(k).is_zero():
                        # dbar_k of |f~_j|^(2 lam_j): lam_j conj(d_k f~ / f~)
                        extra = Field(n, [Product(1.0, (PolyAtom(u.diff(k), 0, 1), PolyAtom(u, 0, -1)))])
                        nxt.append((co, lf * LAM[j], c, d * extra, kd, dr + [("unit", k)]))
                partial = nxt
            for co, lf, c, d, kd, dr in partial:
                for k in ibp:
                    d = -d.dbar(k)
                if d.is_zero():
                    continue
                viol = []
                for k in range(n):
                    if c[k] == 1:
                        q = divide_conj(d, k)
                        if q is not None:
                            d, c[k] = q, 0
                        else:
                            viol.append(k)
                if viol and strict:
                    raise HypothesisError(
                        f"non-simple factor z{viol[0] + 1}: dzbar/zbar is not absorbed by the test form", viol[0])
                out.append(ReducedTerm(complex(co), lf, chart.b, tuple(c), d, tuple(kd), tuple(dr), tuple(viol)))
    return out


def reduce_chart(chart: ChartSpec, t: TestForm, strict: bool = False) -> list:
    """Reduce the Mellin integrand of ``chart`` against ``t`` to Eq.-(5)-type terms."""
    return reduce_integrand(chart, t, "mellin", strict)


# ---------------------------------------------------------------------------
# Continuation
# ---------------------------------------------------------------------------


@dataclass
class ContinuedTerm:
    coef: complex
    R: object  # sympy rational function of lambda
    b: tuple
    data: Field


def continue_terms(chart: ChartSpec, terms: Sequence[ReducedTerm]) -> list:
    """Remove every remaining ``1/zbar_k`` by a second integration by parts."""
    s = chart.s_forms()
    out = []
    for t in terms:
        d, R = t.data, t.lam_factor
        for k in range(chart.n):
            if t.c[k] == 0:
                continue
            if t.c[k] > 1:
                raise ValueError("higher zbar poles do not arise from a single dbar per factor")
            d = -d.dbar(k)
            R = R / s[k]
        if not d.is_zero():
            out.append(ContinuedTerm(t.coef, sp.cancel(R), t.b, d))
    return out


@dataclass(frozen=True)
class PoleFactor:
    """Pole hyperplane ``coeffs . lambda = 0`` with its multiplicity."""

    coeffs: tuple
    multiplicity: int = 1
    numerator: str = "1"
    denominator: str = "1"

    def __post_init__(self):
        if not any(self.coeffs):
            raise ValueError("pole hyperplane needs a nonzero coefficient vector")

    def distance(self, lam) -> float:
        return abs(sum(c * x for c, x in zip(self.coeffs, lam)))

    def __str__(self):
        return f"{self.numerator}/({self.denominator})"


@dataclass
class MeromorphicValue:
    lam: tuple
    value: complex
    entire_part: complex
    error: float
    prefactor: object  # sympy
    pole_factors: list = field(default_factory=list)
    direction: tuple | None = None
    finite: bool = True
    evaluations: int = 0

    @property
    def prefactor_str(self) -> str:
        return str(self.prefactor)


def _linear_coeffs(expr) -> tuple | None:
    poly = sp.Poly(expr, *LAM)
    if poly.total_degree() != 1 or poly.coeff_monomial(1) != 0:
        return None
    c = [poly.coeff_monomial(x) for x in LAM]
    den = sp.ilcm(*[sp.fraction(sp.nsimplify(x))[1] for x in c])
    return tuple(int(x * den) for x in c)


class Continuation:
    """Continued Mellin integral of one chart; evaluate at any lambda off the poles.

    Data tensors are cached, so sweeping lambda is cheap once the first point
    has been computed (for unit-free charts).
    """

    def __init__(self, chart: ChartSpec, t: TestForm | None = None, terms: Sequence[ReducedTerm] | None = None,
                 spec: QuadratureSpec | None = None, radii=None):
        self.chart = chart
        self.spec = spec or QuadratureSpec()
        if terms is None:
            terms = reduce_chart(chart, t)
        self.reduced = list(terms)
        cont = continue_terms(chart, self.reduced)
        groups: dict = {}
        for ct in cont:
            key = (sp.srepr(ct.R), ct.b)
            F = ct.data.scale(ct.coef)
            groups[key] = (ct.R, ct.b, groups[key][2] + F if key in groups else F)
        self.groups = [(R, b, F) for R, b, F in groups.values() if not F.is_zero()]
        self.radii = radii
        self._structure()
        self._integrators = {}

    def _structure(self):
        if not self.groups:
            self.prefactor, self.pole_factors, self.weights = sp.Integer(0), [], []
            self.D = sp.Integer(1)
            return
        nums, dens = zip(*[sp.fraction(sp.cancel(R)) for R, _, _ in self.groups])
        D = sp.Integer(1)
        for d in dens:
            D = sp.lcm(D, d)
        M = [sp.expand(nv * sp.cancel(D / dv)) for nv, dv in zip(nums, dens)]
        G = M[0]
        for x in M[1:]:
            G = sp.gcd(G, x)
        self.weights = [sp.cancel(x / G) for x in M]
        self.prefactor = sp.factor(sp.cancel(G / D))
        num, den = sp.fraction(self.prefactor)
        self.D = den
        poles = []
        _, factors = sp.factor_list(den, *LAM)
        for fac, mult in factors:
            co = _linear_coeffs(fac)
            if co is None:
                raise ValueError(f"non-linear pole factor {fac}")
            poles.append(PoleFactor(co, int(mult), str(num), str(den)))
        self.pole_factors = poles

    def integrator(self, i: int) -> FieldIntegrator:
        if i not in self._integrators:
            _, b, F = self.groups[i]
            self._integrators[i] = FieldIntegrator(F, b, None, self.spec, self.radii)
        return self._integrators[i]

    def entire(self, lam) -> tuple:
        """``sum_g w_g(lam) J_g(lam)`` with its error bound and evaluation count."""
        lam = _as_lam(lam)
        s = self.chart.s_values(lam)
        subs = {LAM[i]: lam[i] for i in range(3)}
        total, err, evals = 0j, 0.0, 0
        for i, w in enumerate(self.weights):
            wv = complex(w.subs(subs))
            if wv == 0:
                continue
            integ = self.integrator(i)
            kernels = {k: PowerKernel(s[k]) for k in range(self.chart.n)}
            v, e, cnt = integ.value_with_error(kernels, lam=lam)
            total += wv * v
            err += abs(wv) * e
            evals += cnt
        return total, err, evals

    def prefactor_at(self, lam, direction=None) -> tuple:
        """Value of the rational prefactor, or its limit along ``lam + delta * direction``."""
        lam = _as_lam(lam)
        near = [p for p in self.pole_factors if p.distance(lam) < POLE_TOL * (max(abs(x) for x in lam) + 1)]
        if not near:
            return complex(self.prefactor.subs({LAM[i]: lam[i] for i in range(3)})), True
        if direction is None:
            raise PoleError(f"lambda {lam} lies on the pole hyperplane {near[0].coeffs}; pass a direction")
        v = tuple(complex(x) for x in direction) + (0j,) * (3 - len(direction))
        d = sp.Symbol("delta")
        num, den = sp.fraction(self.prefactor)
        sub = {LAM[i]: sp.nsimplify(lam[i].real) + sp.I * sp.nsimplify(lam[i].imag)
               + d * (sp.nsimplify(v[i].real) + sp.I * sp.nsimplify(v[i].imag)) for i in range(3)}
        pn = sp.Poly(sp.expand(num.subs(sub)), d)
        pd = sp.Poly(sp.expand(den.subs(sub)), d)
        if pd.is_zero:
            raise PoleError("direction lies inside the pole set")
        if pn.is_zero:
            return 0j, True
        on = min(m[0] for m in pn.monoms())
        od = min(m[0] for m in pd.monoms())
        if on > od:
            return 0j, True
        if on < od:
            return complex("inf"), False
        return complex(pn.coeff_monomial(d ** on) / pd.coeff_monomial(d ** od)), True

    def evaluate(self, lam, direction=None) -> MeromorphicValue:
        lam = _as_lam(lam)
        if not self.groups:
            return MeromorphicValue(lam, 0j, 0j, 0.0, sp.Integer(0), [], direction)
        pre, finite = self.prefactor_at(lam, direction)
        ent, err, evals = self.entire(lam)
        if not finite:
            if abs(ent) <= 10 * err:
                # 0 * inf: the entire part vanishes on the hyperplane within accuracy
                finite = False
            return MeromorphicValue(lam, complex("nan"), ent, math.inf, self.prefactor, self.pole_factors,
                                    direction, False, evals)
        return MeromorphicValue(lam, pre * ent, ent, abs(pre) * err, self.prefactor, self.pole_factors,
                                direction, True, evals)


def continue_eval(chart_or_cont, t_or_lam=None, lam=None, direction=None, spec: QuadratureSpec | None = None,
                  radii=None) -> MeromorphicValue:
    """Evaluate the continued Mellin integral at ``lam``.

    Either ``continue_eval(continuation, lam)`` or ``continue_eval(chart, t, lam)``.
    On a pole hyperplane a ``direction`` selects the limit of
    ``value(lam + delta * direction)`` as ``delta -> 0+``.
    """
    if isinstance(chart_or_cont, Continuation):
        return chart_or_cont.evaluate(t_or_lam, direction)
    cont = Continuation(chart_or_cont, t_or_lam, spec=spec, radii=radii)
    return cont.evaluate(lam, direction)


def evaluate_reduced(chart: ChartSpec, terms: Sequence[ReducedTerm], lam, spec: QuadratureSpec | None = None,
                     radii=None) -> tuple:
    """Evaluate stage-one reduced terms directly (needs Re s_k large enough for the zbar poles)."""
    lam = _as_lam(lam)
    spec = spec or QuadratureSpec()
    s = chart.s_values(lam)
    subs = {LAM[i]: lam[i] for i in range(3)}
    total, err = 0j, 0.0
    for t in terms:
        if any(cc and (2 * s[k]).real - t.b[k] - cc <= -2 for k, cc in enumerate(t.c)):
            raise ConvergenceError("reduced term not absolutely convergent at this lambda")
        integ = FieldIntegrator(t.data, t.b, t.c, spec, radii)
        v, e, _ = integ.value_with_error({k: PowerKernel(s[k]) for k in range(chart.n)}, lam=lam)
        f = t.coef * complex(sp.sympify(t.lam_factor).subs(subs))
        total += f * v
        err += abs(f) * e
    return total, err


# ---------------------------------------------------------------------------
# Resonance
# ---------------------------------------------------------------------------


@dataclass
class ResonanceReport:
    resonant: bool
    rank: int
    certificate: tuple | None = None


def detect_resonance(chart: ChartSpec | Sequence[Sequence[int]]) -> ResonanceReport:
    """Exact rank of the exponent vectors; an integer dependency when they are dependent."""
    exps = chart.exponents if isinstance(chart, ChartSpec) else [tuple(a) for a in chart]
    A = sp.Matrix([list(a) for a in exps]).T  # columns are the a_j
    rank = A.rank()
    if rank == len(exps):
        return ResonanceReport(False, rank, None)
    v = A.nullspace()[0]
    den = sp.ilcm(*[sp.fraction(x)[1] for x in v])
    ints = [int(x * den) for x in v]
    g = math.gcd(*ints)
    ints = [x // g for x in ints]
    first = next(x for x in ints if x)
    if first < 0:
        ints = [-x for x in ints]
    return ResonanceReport(True, rank, tuple(ints))


# ---------------------------------------------------------------------------
# Direct evaluation (reference oracle)
# ---------------------------------------------------------------------------


def expand_direct(chart: ChartSpec, t: TestForm, side: str = "mellin") -> list:
    """Every dbar acts on its kernel (no integration by parts).

    Returns ``(coef, lam_factor, c, data, kinds)`` tuples; ``kinds`` as in
    :class:`ReducedTerm`.
    """
    n, flags = chart.n, chart.dbar_flags
    r = len(flags)
    if t.n != n or t.q != n - r:
        raise BidegreeError(f"test form must have bidegree ({n}, {n - r})")
    if side == "regularize" and chart.has_units():
        raise NotImplementedError("the cutoff side supports units identically 1 only")
    vol = orientation_factor(n) * (-1) ** (r * n)
    units = _unit_fields(chart, side == "mellin") if chart.has_units() else None
    out = []
    for K, Phi in t.summands.items():
        free = [k for k in range(n) if k not in K]
        base = Phi * units if units is not None else Phi
        for ks in itertools.permutations(free, r):
            sign, _ = sort_sign(tuple(ks) + tuple(K))
            partial = [(vol * sign, sp.Integer(1), [0] * n, base, ["plain"] * chart.m)]
            for j, k in zip(flags, ks):
                a_jk, u = chart.exponents[j][k], chart.units[j]
                nxt = []
                for co, lf, c, d, kd in partial:
                    if a_jk:
                        c2 = list(c)
                        c2[k] += 1
                        kd2 = list(kd)
                        kd2[j] = "tilde"
                        nxt.append((co * a_jk, lf * LAM[j] if side == "mellin" else lf, c2, d, kd2))
                    if u is not None and not u.diff(k).is_zero():
                        extra = Field(n, [Product(1.0, (PolyAtom(u.diff(k), 0, 1), PolyAtom(u, 0, -1)))])
                        nxt.append((co, lf * LAM[j], c, d * extra, kd))
                partial = nxt
            out.extend(partial)
    return out


def mellin_direct(chart: ChartSpec, t: TestForm, lam, spec: QuadratureSpec | None = None, radii=None,
                  counter: list | None = None) -> complex:
    """Full-grid polar quadrature of the unreduced integrand (no integration by parts).

    The kernel ``|z_k|^(2 s_k) z_k^-b_k zbar_k^-c_k`` is evaluated pointwise
    together with the data, and the radius is integrated with plain
    Gauss-Legendre panels.  Requires ``2 Re s_k - b_k - c_k > -1`` in every
    variable (absolute convergence with margin).
    """
    lam = _as_lam(lam)
    spec = spec or QuadratureSpec()
    s = chart.s_values(lam)
    b = chart.b
    subs = {LAM[i]: lam[i] for i in range(3)}
    total = 0j
    for co, lf, c, d, _ in expand_direct(chart, t):
        for k in range(chart.n):
            if (2 * s[k]).real - b[k] - c[k] <= -1:
                raise ConvergenceError(
                    f"Re lambda too small for direct evaluation in z{k + 1} (need 2 Re s - b - c > -1)")
        f = co * complex(lf.subs(subs))
        if f == 0 or d.is_zero():
            continue
        factors = [((k,), lambda z, k=k, c=tuple(c): np.exp(s[k] * np.log(np.abs(z) ** 2)) * z ** (-b[k])
                    * np.conj(z) ** (-c[k])) for k in range(chart.n)]
        total += f * direct_field_integral(d, factors, spec, radii, lam, counter)
    return total
