"""Polar quadrature for integrals over C^n with radial-power and monomial kernels.

Every complex variable is integrated in polar coordinates.  The angle uses the
trapezoid rule, which is spectrally accurate for periodic integrands.  The
radius uses composite Gauss-Legendre panels, graded geometrically towards
r = 0.  For a kernel ``z^-b zbar^-c`` only the angular Fourier mode
``m = b - c`` of the smooth data survives.  That mode equals
``r^|m| * T(r^2)`` with ``T`` smooth, so the data enters through the
"angular-reduced" tensor ``T``.  ``T`` does not depend on lambda or epsilon,
so it is computed once and reused.

Radial kernels ``u^sigma`` (``u = r^2``) are integrated exactly on the
innermost panel: the data is interpolated there and the moments are taken in
closed form.  This makes the rule a meromorphic function of ``sigma``.

Orientation convention (fixed globally): ``dz ^ dzbar = -2i dA``.  An (n, n)
form ``c dz_1..dz_n ^ dzbar_1..dzbar_n`` therefore integrates to
``orientation_factor(n) * integral(c dV)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .forms import SparsePoly
from .testforms import Field, PolyAtom, Profile1D, ProfileAtom, TestForm


class QuadratureError(RuntimeError):
    """Tolerance not reached."""


class BudgetExceeded(QuadratureError):
    def __init__(self, message: str, estimate=None, error_bound=math.inf):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class IntegrabilityError(ValueError):
    pass


def orientation_factor(n: int) -> complex:
    """``dz_1..dz_n ^ dzbar_1..dzbar_n = orientation_factor(n) * dV``."""
    return (-1) ** (n * (n - 1) // 2) * (-2j) ** n


# ---------------------------------------------------------------------------
# Specs and rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    nodes: int = 8  # Gauss-Legendre nodes per radial panel
    n_theta: int = 16  # trapezoid nodes per angle
    grading: int = 14  # geometric panels between the first panel edge and 0
    ratio: float = 2.0  # grading ratio
    panel_scale: float = 1.0  # uniform panel width in units of the data scale
    radii: tuple = ()  # ((variable, support radius), ...) overrides
    budget: int = 200_000_000  # cap on integrand evaluations
    tol: float = 1e-8

    def __post_init__(self):
        if self.nodes < 4 or self.n_theta < 4:
            raise ValueError("quadrature orders must be at least 4")
        if self.tol <= 0 or self.budget <= 0:
            raise ValueError("tolerance and budget must be positive")

    def coarse(self) -> "QuadratureSpec":
        """Cheaper companion rule; the difference serves as error estimate."""
        return replace(self, nodes=max(4, self.nodes - 2), n_theta=max(4, (3 * self.n_theta) // 4),
                       grading=max(2, self.grading - 2))

    def refined(self) -> "QuadratureSpec":
        return replace(self, nodes=self.nodes + 4, n_theta=2 * self.n_theta, grading=self.grading + 4)

    def radius_override(self) -> dict:
        return dict(self.radii)


class RadialRule:
    """Composite Gauss-Legendre rule in ``r`` on panels ``edges``."""

    def __init__(self, edges: Sequence[float], nodes: int):
        edges = np.asarray(edges, dtype=float)
        if edges[0] != 0 or np.any(np.diff(edges) <= 0):
            raise ValueError("panel edges must start at 0 and increase")
        x, wx = np.polynomial.legendre.leggauss(nodes)
        a, b = edges[:-1, None], edges[1:, None]
        self.r = ((b - a) / 2 * x + (a + b) / 2).ravel()
        self.w = ((b - a) / 2 * wx).ravel()
        self.u = self.r ** 2
        self.edges = tuple(edges)
        self.nodes = nodes
        self.key = (self.edges, nodes)
        # Interpolation in u on the innermost panel for exact moments.
        self.U1 = edges[1] ** 2
        V = (self.u[:nodes] / self.U1)[:, None] ** np.arange(nodes)[None, :]
        self._C = np.linalg.inv(V)

    def __len__(self):
        return self.r.size

    def power_weights(self, sigma: complex) -> np.ndarray:
        """Weights for ``int_0^R r^(2 sigma + 1) T(r) dr``, exact-moment innermost panel."""
        sigma = complex(sigma)
        W = self.w * np.exp((2 * sigma + 1) * np.log(self.r))
        m = np.arange(self.nodes)
        mom = 0.5 * np.exp((sigma + 1) * math.log(self.U1)) / (sigma + m + 1)
        W[: self.nodes] = self._C.T @ mom
        return W

    def function_weights(self, values: np.ndarray) -> np.ndarray:
        """Weights for ``int_0^R K(r) T(r) r dr`` given ``K`` at the nodes."""
        return self.w * self.r * values

    def product_weights(self, func: Callable, p: float = 0, scales: Sequence[float] = ()) -> np.ndarray:
        """Weights for ``(1/2) int_0^(R^2) K(u) u^p T(u) du`` by product integration.

        ``T`` is interpolated in ``u`` on every panel through the panel nodes;
        the kernel is integrated against the interpolant with a fine auxiliary
        rule broken at dyadic multiples of ``scales``, so kernels varying on
        scales far below the panel width are resolved without refining the
        data grid.
        """
        x, wx = np.polynomial.legendre.leggauss(16)
        E = self.edges
        W = np.zeros(len(self.r), dtype=complex)
        for i in range(len(E) - 1):
            lo, hi = E[i] ** 2, E[i + 1] ** 2
            cuts = {lo, hi}
            for sc in scales:
                if sc > 0:
                    cuts.update(c for c in sc * 2.0 ** np.arange(-30, 31) if lo < c < hi)
            if i == 0:
                cuts.update(hi * 2.0 ** -np.arange(1, 40))
            c = np.array(sorted(cuts))
            a, b = c[:-1, None], c[1:, None]
            uf = ((b - a) / 2 * x + (a + b) / 2).ravel()
            wf = ((b - a) / 2 * wx).ravel()
            vals = np.asarray(func(uf), dtype=complex) * uf ** p
            sl = slice(i * self.nodes, (i + 1) * self.nodes)
            xi = (self.u[sl] - lo) / (hi - lo)
            V = xi[:, None] ** np.arange(self.nodes)[None, :]
            L = (((uf - lo) / (hi - lo))[:, None] ** np.arange(self.nodes)[None, :]) @ np.linalg.inv(V)
            W[sl] = 0.5 * (wf * vals) @ L
        return W

    def delta_weights(self, mass: complex) -> np.ndarray:
        """Weights for ``mass * T(0) / 2`` (limit of a kernel concentrating at u = 0)."""
        W = np.zeros(len(self.r), dtype=complex)
        W[: self.nodes] = 0.5 * mass * self._C[0, :]
        return W


def make_rule(R: float, scale: float, features: Sequence[float], spec: QuadratureSpec) -> RadialRule:
    h = min(scale * spec.panel_scale, R)
    edges = {0.0, R}
    edges.update(h * spec.ratio ** (-j) for j in range(0, spec.grading + 1))
    n_uni = max(1, math.ceil((R - h) / h - 1e-9))
    edges.update(h + (R - h) * k / n_uni for k in range(n_uni + 1))
    feats = [f for f in features if 0 < f < R]
    out = sorted(e for e in edges if e <= R)
    for f in feats:
        # snap the nearest edge (outside the graded zone) onto the feature
        j = min(range(len(out)), key=lambda i: abs(out[i] - f))
        if out[j] >= h * 0.999 and abs(out[j] - f) < 0.25 * h and out[j] != R:
            out[j] = f
        else:
            out.append(f)
    out = sorted(set(out))
    return RadialRule(out, spec.nodes)


def theta_nodes(n_theta: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n_theta) / n_theta


# ---------------------------------------------------------------------------
# Geometry of profile-generated fields
# ---------------------------------------------------------------------------


def _poly_abs_bound(P: SparsePoly, R: Mapping[int, float]) -> float:
    total = 0.0
    for c, e in P.numeric_terms():
        v = abs(c)
        for k, ek in enumerate(e):
            if ek:
                v *= R.get(k, math.inf) ** ek
        total += v
    return total


def field_geometry(F: Field, overrides: Mapping[int, float] | None = None):
    """Support radius, data scale and feature radii per variable."""
    overrides = dict(overrides or {})
    n = F.n
    R: dict = {}
    scale = {k: math.inf for k in range(n)}
    features: dict = {k: set() for k in range(n)}
    per_product = []
    for pr in F.products:
        bounds: dict = {}
        for a in pr.atoms:
            if not isinstance(a, ProfileAtom):
                continue
            terms = a.arg.numeric_terms()
            prof = a.profile
            if len(terms) == 1:
                c, e = terms[0]
                vs = [k for k, x in enumerate(e) if x]
                if len(vs) == 1:
                    k, d = vs[0], e[vs[0]]
                    bounds[k] = min(bounds.get(k, math.inf), (prof.support_radius / abs(c)) ** (1 / d))
                    if prof.center == 0:
                        for f in prof.feature_radii:
                            features[k].add((f / abs(c)) ** (1 / d))
        per_product.append(bounds)
    # second pass: arguments linear in one variable, e.g. w3 - w1*w2
    for pr, bounds in zip(F.products, per_product):
        known = {**{k: v for k, v in bounds.items()}, **overrides}
        for a in pr.atoms:
            if not isinstance(a, ProfileAtom):
                continue
            for k in a.arg.variables():
                if k in known:
                    continue
                lin = [(c, e) for c, e in a.arg.numeric_terms() if e[k]]
                if len(lin) == 1 and lin[0][1][k] == 1 and sum(lin[0][1]) == 1:
                    rest_terms = [(c, e) for c, e in a.arg.numeric_terms() if not e[k]]
                    restb = sum(abs(c) * math.prod(known.get(j, math.inf) ** x for j, x in enumerate(e) if x) for c, e in rest_terms)
                    if math.isfinite(restb):
                        bounds[k] = min(bounds.get(k, math.inf), (a.profile.support_radius + restb) / abs(lin[0][0]))
                        known[k] = bounds[k]
    for k in range(n):
        if k in overrides:
            R[k] = float(overrides[k])
            continue
        vals = [b.get(k, math.inf) for pr, b in zip(F.products, per_product) if k in pr.variables()]
        R[k] = max(vals) if vals else math.inf
    # scales: profile scale divided by the size of the argument's gradient
    for pr in F.products:
        for a in pr.atoms:
            if not isinstance(a, ProfileAtom):
                continue
            for k in a.arg.variables():
                g = _poly_abs_bound(a.arg.diff(k), R)
                s = a.profile.scale / max(g, 1e-300) if math.isfinite(g) else a.profile.scale
                scale[k] = min(scale[k], s)
    return R, scale, {k: sorted(v) for k, v in features.items()}


# ---------------------------------------------------------------------------
# Angular reduction
# ---------------------------------------------------------------------------

_TENSOR_CACHE: dict = {}


def clear_cache():
    _TENSOR_CACHE.clear()


def angular_tensor(func: Callable, rules: Sequence[RadialRule], modes: Sequence[int], n_theta: int,
                   counter: list | None = None) -> np.ndarray:
    """``T[i..] = r^-|m| * int e^{-i m.theta} func(r e^{i theta}) d theta`` (trapezoid).

    ``func`` takes a list of complex arrays (one per variable) and broadcasts.
    """
    d = len(rules)
    th = theta_nodes(n_theta)
    phases = [np.exp(-1j * m * th) * (2 * np.pi / n_theta) for m in modes]
    circ = np.exp(1j * th)
    shape_full = []
    for rule in rules:
        shape_full += [len(rule), n_theta]
    out = np.empty([len(rule) for rule in rules], dtype=complex)

    def grid(k, r):
        vals = (r[:, None] * circ[None, :])
        shp = [1] * (2 * d)
        shp[2 * k], shp[2 * k + 1] = vals.shape
        return vals.reshape(shp)

    r0 = rules[0].r
    per = int(np.prod(shape_full[2:])) * n_theta if d > 1 else n_theta
    chunk = max(1, int(4_000_000 // max(per, 1)))
    for start in range(0, len(r0), chunk):
        sl = slice(start, min(start + chunk, len(r0)))
        Z = [grid(0, r0[sl])] + [grid(k, rules[k].r) for k in range(1, d)]
        vals = np.asarray(func(Z), dtype=complex)
        full = [r0[sl].size, n_theta] + shape_full[2:]
        vals = np.broadcast_to(vals, full)
        if counter is not None:
            counter[0] += vals.size
        # contract angles from the last variable backwards
        for k in reversed(range(d)):
            vals = np.tensordot(vals, phases[k], axes=([2 * k + 1], [0]))
        out[sl] = vals
    for k, (rule, m) in enumerate(zip(rules, modes)):
        if m:
            shp = [1] * d
            shp[k] = len(rule)
            out = out / (rule.r ** abs(m)).reshape(shp)
    return out


def _atoms_func(atoms, vars_, lam=None):
    pos = {v: i for i, v in enumerate(vars_)}

    def f(Zc):
        n = max(max(a.variables()) for a in atoms) + 1 if atoms else 0
        Z = [0.0] * max(n, max(vars_) + 1)
        for v, i in pos.items():
            Z[v] = Zc[i]
        out = 1.0
        for a in atoms:
            out = out * a.evaluate(Z, lam)
        return out

    return f


class _UnionFind:
    def __init__(self, items):
        self.p = {i: i for i in items}

    def find(self, i):
        while self.p[i] != i:
            self.p[i] = self.p[self.p[i]]
            i = self.p[i]
        return i

    def union(self, i, j):
        self.p[self.find(i)] = self.find(j)

    def groups(self):
        out: dict = {}
        for i in self.p:
            out.setdefault(self.find(i), []).append(i)
        return [tuple(sorted(g)) for g in sorted(out.values())]


# ---------------------------------------------------------------------------
# Kernels and the field integrator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerKernel:
    """Radial factor ``u^s`` for one variable (``u = |z_k|^2``)."""

    s: complex = 0


@dataclass(frozen=True)
class FunctionKernel:
    """Radial factor ``K(u)`` for one variable, given as a vectorized callable.

    ``scales`` lists the u-scales on which K varies (e.g. epsilon); the kernel
    is then integrated by product integration instead of at the data nodes.
    """

    func: Callable
    label: str = ""
    scales: tuple = ()
    key: object = None  # hashable identity; enables weight caching


@dataclass(frozen=True)
class DeltaKernel:
    """``u^-1 K(u/eps) du -> mass * delta_0`` as eps -> 0 (needs the extra power -1)."""

    mass: complex = 1.0
    label: str = ""


@dataclass(frozen=True)
class GroupKernel:
    """Radial factor depending on several variables: ``K(u_v1, u_v2, ...)``."""

    variables: tuple
    func: Callable
    label: str = ""


class FieldIntegrator:
    """``int prod_k K_k(|z_k|) z_k^-b_k zbar_k^-c_k G(z) dV``.

    ``G`` may carry lambda (unit powers ``|f|^(2 lambda)``); then ``lam`` must be
    passed to :meth:`value` and data tensors are cached per lambda.
    """

    def __init__(self, G: Field, b: Sequence[int], c: Sequence[int] | None = None,
                 spec: QuadratureSpec | None = None, radii: Mapping[int, float] | None = None):
        self.G = G
        self.n = G.n
        self.b = tuple(int(x) for x in b)
        self.c = tuple(int(x) for x in (c if c is not None else (0,) * self.n))
        if len(self.b) != self.n or len(self.c) != self.n:
            raise ValueError("kernel exponents have the wrong length")
        self.spec = spec or QuadratureSpec()
        self.lam_free = all(p.lam_free() for p in G.products)
        over = {**self.spec.radius_override(), **dict(radii or {})}
        self.R, self.scale, self.features = field_geometry(G, over)
        self.modes = tuple(bb - cc for bb, cc in zip(self.b, self.c))
        self.extra = tuple((abs(m) - bb - cc) // 2 for m, bb, cc in zip(self.modes, self.b, self.c))
        uf = _UnionFind(range(self.n))
        for p in G.products:
            for a in p.atoms:
                vs = sorted(a.variables())
                for v in vs[1:]:
                    uf.union(vs[0], v)
        self.data_components = uf.groups()
        self._rules: dict = {}
        self._wcache: dict = {}

    # -- rules ---------------------------------------------------------------
    def rules(self, spec: QuadratureSpec) -> list:
        if spec not in self._rules:
            out = []
            for k in range(self.n):
                if not math.isfinite(self.R[k]):
                    raise IntegrabilityError(f"cannot bound the support in z{k + 1}; pass a radius override")
                out.append(make_rule(self.R[k], min(self.scale[k], self.R[k]), self.features[k], spec))
            self._rules[spec] = out
        return self._rules[spec]

    def evaluations(self, spec: QuadratureSpec) -> int:
        rules = self.rules(spec)
        total = 0
        for p in self.G.products:
            for comp in self.data_components:
                total += int(np.prod([len(rules[k]) * spec.n_theta for k in comp]))
        return total

    # -- data tensors --------------------------------------------------------
    def _tensor(self, product, comp, spec, counter, lam=None):
        rules = self.rules(spec)
        atoms = tuple(a for a in product.atoms if a.variables() <= set(comp))
        missing = set(comp) - set().union(*[a.variables() for a in atoms]) if atoms else set(comp)
        has_lam = any(isinstance(a, PolyAtom) and a.lam_index is not None for a in atoms)
        lam_key = tuple(complex(x) for x in lam) if has_lam else None
        key = (atoms, comp, tuple(self.modes[k] for k in comp), tuple(rules[k].key for k in comp), spec.n_theta, lam_key)
        if key in _TENSOR_CACHE:
            return _TENSOR_CACHE[key]
        if missing and any(self.modes[k] for k in missing):
            T = np.zeros([len(rules[k]) for k in comp], dtype=complex)
        else:
            T = angular_tensor(_atoms_func(atoms, comp, lam), [rules[k] for k in comp],
                               [self.modes[k] for k in comp], spec.n_theta, counter)
        _TENSOR_CACHE[key] = T
        return T

    # -- evaluation ----------------------------------------------------------
    def value(self, kernels: Mapping[int, object], groups: Sequence[GroupKernel] = (),
              spec: QuadratureSpec | None = None, counter: list | None = None, lam=None) -> complex:
        spec = spec or self.spec
        if not self.lam_free and lam is None:
            raise ValueError("data depends on lambda; pass lam")
        rules = self.rules(spec)
        W = {}
        for k in range(self.n):
            K = kernels.get(k, PowerKernel(0))
            p = self.extra[k]
            if isinstance(K, PowerKernel):
                W[k] = rules[k].power_weights(K.s + p)
            elif isinstance(K, DeltaKernel):
                if p != -1:
                    # without the 1/u weight the concentrating kernel has no mass in the limit
                    W[k] = np.zeros(len(rules[k]), dtype=complex)
                else:
                    W[k] = rules[k].delta_weights(K.mass)
            elif K.scales:
                ck = (spec, k, K.key, p) if K.key is not None else None
                if ck is not None and ck in self._wcache:
                    W[k] = self._wcache[ck]
                else:
                    W[k] = rules[k].product_weights(K.func, p, K.scales)
                    if ck is not None:
                        self._wcache[ck] = W[k]
            else:
                u = rules[k].u
                W[k] = rules[k].function_weights(np.asarray(K.func(u), dtype=complex) * u ** p)
        uf = _UnionFind(range(self.n))
        for comp in self.data_components:
            for v in comp[1:]:
                uf.union(comp[0], v)
        for g in groups:
            for v in g.variables[1:]:
                uf.union(g.variables[0], v)
        comps = uf.groups()
        total = 0j
        for pr in self.G.products:
            val = pr.coef * (pr.lam_value(lam) if pr.lam != 1 else 1.0)
            for comp in comps:
                subs = [dc for dc in self.data_components if set(dc) <= set(comp)]
                T = None
                order = []
                for dc in subs:
                    t = self._tensor(pr, dc, spec, counter, lam)
                    T = t if T is None else np.multiply.outer(T, t)
                    order += list(dc)
                perm = [order.index(v) for v in comp]
                T = np.transpose(T, perm)
                gs = [g for g in groups if set(g.variables) <= set(comp)]
                if not gs:
                    for k in reversed(comp):
                        T = T @ W[k] if T.ndim > 1 else T @ W[k]
                    val *= complex(T)
                else:
                    Wt = np.ones([1] * len(comp))
                    for i, k in enumerate(comp):
                        shp = [1] * len(comp)
                        shp[i] = len(rules[k])
                        Wt = Wt * W[k].reshape(shp)
                    U = np.meshgrid(*[rules[k].u for k in comp], indexing="ij")
                    for g in gs:
                        Wt = Wt * g.func(*[U[comp.index(v)] for v in g.variables])
                    val *= complex(np.sum(Wt * T))
            total += val
        return total

    def value_with_error(self, kernels, groups=(), spec=None, lam=None):
        spec = spec or self.spec
        counter = [0]
        if self.evaluations(spec) + self.evaluations(spec.coarse()) > spec.budget:
            raise BudgetExceeded(f"{self.evaluations(spec)} evaluations exceed budget {spec.budget}")
        fine = self.value(kernels, groups, spec, counter, lam)
        coarse = self.value(kernels, groups, spec.coarse(), counter, lam)
        return fine, abs(fine - coarse) + 1e-15 * abs(fine), counter[0]


def direct_field_integral(G: Field, factors: Sequence[tuple], spec: QuadratureSpec | None = None,
                          radii: Mapping[int, float] | None = None, lam=None, counter: list | None = None) -> complex:
    """``int G(z) prod_f K_f(z) dV`` on the full polar grid, without mode reduction.

    ``factors`` are ``(variables, func)`` pairs; ``func`` receives the complex
    coordinate arrays of its variables.  The radius uses plain Gauss-Legendre
    weights, so kernels must be absolutely integrable and are best kept
    bounded by powers of r of order > -1.
    """
    spec = spec or QuadratureSpec()
    over = {**spec.radius_override(), **dict(radii or {})}
    R, scale, feats = field_geometry(G, over)
    n = G.n
    rules = [make_rule(R[k], min(scale[k], R[k]), feats[k], spec) for k in range(n)]
    total = 0j
    for pr in G.products:
        uf = _UnionFind(range(n))
        for vs in [sorted(a.variables()) for a in pr.atoms] + [sorted(v) for v, _ in factors]:
            for v in vs[1:]:
                uf.union(vs[0], v)
        val = pr.coef * (pr.lam_value(lam) if pr.lam != 1 else 1.0)
        for comp in uf.groups():
            atoms = tuple(a for a in pr.atoms if a.variables() <= set(comp))
            fs = [(v, f) for v, f in factors if set(v) <= set(comp)]
            base = _atoms_func(atoms, comp, lam)

            def func(Z, base=base, comp=comp, fs=fs):
                out = base(Z)
                for v, f in fs:
                    out = out * f(*[Z[comp.index(k)] for k in v])
                return out

            T = angular_tensor(func, [rules[k] for k in comp], [0] * len(comp), spec.n_theta, counter)
            for k in reversed(comp):
                T = T @ (rules[k].w * rules[k].r)
            val *= complex(T)
        total += val
    return total


# ---------------------------------------------------------------------------
# 1D building blocks and oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularKernel1D:
    """``|z|^(2 lam) z^-k zbar^mbar``."""

    lam: complex = 0
    k: int = 0
    mbar: int = 0

    def __post_init__(self):
        if self.k < 0 or self.mbar < 0:
            raise ValueError("pole order and anti-holomorphic power must be non-negative")

    @property
    def integrable(self) -> bool:
        return 2 * complex(self.lam).real - self.k + self.mbar > -2


def _as_field(data, R):
    if data is None:
        return None
    if isinstance(data, Profile1D):
        return Field.profile(1, data, 0)
    if isinstance(data, Field):
        return data
    raise TypeError("data must be a Profile1D, a one-variable Field, a callable or None")


def quad1d(kernel: SingularKernel1D, data=None, radius: float | None = None, scale: float | None = None,
           spec: QuadratureSpec | None = None, max_refine: int = 3) -> complex:
    """``int_C kernel * data dA``; ``data=None`` means the indicator of the disc ``|z| < radius``."""
    if not kernel.integrable:
        raise IntegrabilityError(f"kernel {kernel} is not integrable against smooth data")
    spec = spec or QuadratureSpec()
    b, c = kernel.k, -kernel.mbar
    m = b - c
    p = (abs(m) - b - c) // 2
    F = _as_field(data, radius)
    if F is None or callable(data) and not isinstance(data, (Field, Profile1D)):
        if radius is None:
            raise ValueError("radius required for callable or indicator data")
        func = (lambda Z: 1.0) if data is None else (lambda Z: data(Z[0]))
        sc = scale or radius

        def run(sp):
            rule = make_rule(radius, sc, (), sp)
            T = angular_tensor(func, [rule], [m], sp.n_theta)
            return complex(T @ rule.power_weights(kernel.lam + p))
    else:
        integ = FieldIntegrator(F, (b,), (c,), spec, {0: radius} if radius else None)

        def run(sp):
            return integ.value({0: PowerKernel(kernel.lam)}, spec=sp)

    cur = spec
    val = run(cur)
    for _ in range(max_refine):
        nxt = cur.refined()
        v2 = run(nxt)
        if abs(v2 - val) <= spec.tol * max(1.0, abs(v2)):
            return v2
        cur, val = nxt, v2
    raise QuadratureError(f"quad1d did not reach tolerance {spec.tol}")


def cauchy_pompeiu(psi: Profile1D, spec: QuadratureSpec | None = None) -> complex:
    """``int (d psi / d zbar) (1/z) dz ^ dzbar``; equals ``2 pi i psi(0)``."""
    val = quad1d(SingularKernel1D(0, 1, 0), psi.dzbar(), spec=spec)
    return orientation_factor(1) * val


@dataclass
class QuadResult:
    value: complex
    error: float
    evaluations: int

    def __complex__(self):
        return complex(self.value)


def quad_nested(func: Callable, n: int, radii: Sequence[float], spec: QuadratureSpec | None = None,
                scales: Sequence[float] | None = None, features: Mapping[int, Sequence[float]] | None = None) -> QuadResult:
    """Nested polar quadrature of ``func(z_1, ..., z_n) dV`` over the polydisc of ``radii``.

    ``func`` receives n broadcastable complex arrays.  The error estimate is the
    difference to a coarser rule.  Raises :class:`BudgetExceeded` (with the
    coarse estimate when affordable) if the node count exceeds the budget.
    """
    spec = spec or QuadratureSpec()
    scales = scales or [r / 4 for r in radii]
    features = features or {}

    def rules_for(sp):
        return [make_rule(radii[k], scales[k], features.get(k, ()), sp) for k in range(n)]

    def cost(sp):
        return int(np.prod([len(r) * sp.n_theta for r in rules_for(sp)]))

    fine_c, coarse_c = cost(spec), cost(spec.coarse())
    counter = [0]

    def run(sp):
        rules = rules_for(sp)
        T = angular_tensor(lambda Z: func(*Z), rules, [0] * n, sp.n_theta, counter)
        for k in reversed(range(n)):
            T = T @ rules[k].power_weights(0)
        return complex(T)

    if fine_c + coarse_c > spec.budget:
        est = run(spec.coarse()) if coarse_c <= spec.budget else None
        raise BudgetExceeded(f"nested quadrature needs {fine_c + coarse_c} evaluations (budget {spec.budget})",
                             estimate=est)
    fine = run(spec)
    coarse = run(spec.coarse())
    return QuadResult(fine, abs(fine - coarse), counter[0])


@dataclass(frozen=True)
class EpsPoint:
    eps: tuple

    def __post_init__(self):
        e = tuple(float(x) for x in self.eps)
        if any(not x >= 0 for x in e):
            raise ValueError("epsilon must lie in the closed first octant")
        object.__setattr__(self, "eps", e)

    def __iter__(self):
        return iter(self.eps)

    def __len__(self):
        return len(self.eps)


def tube_residue_diagonal(exponents: Sequence[Sequence[int]], t: TestForm, eps: EpsPoint | Sequence[float],
                          n_theta: int = 64) -> complex:
    """``int_{T_eps} phi / (f_1 ... f_m)`` for ``f_j = z_{k_j}^{a_j}`` in distinct variables.

    The tube is the product of positively oriented circles
    ``|z_{k_j}| = eps_j^(1/(2 a_j))`` taken in the order of the f_j.
    """
    eps = eps if isinstance(eps, EpsPoint) else EpsPoint(tuple(eps))
    exps = [tuple(int(x) for x in a) for a in exponents]
    n, m = t.n, len(exps)
    if len(eps) != m:
        raise ValueError("one epsilon per function")
    if any(e == 0 for e in eps):
        raise ValueError("tube degenerates when some eps_j = 0")
    var, power = [], []
    for a in exps:
        nz = [k for k, x in enumerate(a) if x]
        if len(a) != n or len(nz) != 1:
            raise ValueError("non-diagonal exponents: use the regularization or Mellin routes")
        var.append(nz[0])
        power.append(a[nz[0]])
    if len(set(var)) != m:
        raise ValueError("non-diagonal exponents: functions share a variable")
    if m != n or t.q != 0:
        raise ValueError("the tube pairing is implemented for (n, 0) test forms with m = n")
    F = t.summands.get((), None)
    if F is None:
        return 0j
    # dz_{k_1} ^ ... ^ dz_{k_m} versus dz_1 ^ ... ^ dz_n
    from .forms import sort_sign

    sign, _ = sort_sign(tuple(var))
    th = theta_nodes(n_theta)
    Z = [None] * n
    jac = 1.0
    for j, (k, a) in enumerate(zip(var, power)):
        rho = eps.eps[j] ** (1.0 / (2 * a))
        shp = [1] * n
        shp[j] = n_theta
        zk = (rho * np.exp(1j * th)).reshape(shp)
        Z[k] = zk
        jac = jac * (1j * zk) * (2 * np.pi / n_theta) / zk ** a
    vals = F.evaluate(Z) * jac
    return complex(sign * np.sum(vals))
