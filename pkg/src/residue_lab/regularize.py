"""Regularized residue integrals: cutoffs, epsilon paths, limits and Hölder fits.

The integrand is the cutoff analogue of the Mellin one,

    prod_{j unflagged} chi_j(|f_j|^2/eps_j) ^ prod_{j flagged} dbar chi_j(|f_j|^2/eps_j) / (f_1...f_m)  ^  t,

reduced exactly like :func:`residue_lab.mellin.reduce_integrand`.  A dbar
acting on a non-simple factor produces ``chi~_j(t) a_jk / zbar_k`` with
``chi~(t) = t chi'(t)``; simple factors are integrated by parts.

Boundary points of the closed octant are evaluated as the continuous
extension.  A plain factor with ``eps_j = 0`` is replaced by 1.  A ``chi~_j``
factor with ``eps_j = 0`` concentrates on ``z_k = 0``; for single-variable
monomials ``z_k^a`` its limit is ``(1/a) * delta``, because the integral of
``chi~(t)/t`` over t equals ``chi(inf) - chi(0) = 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .integrate import (
    DeltaKernel,
    FieldIntegrator,
    direct_field_integral,
    FunctionKernel,
    GroupKernel,
    PowerKernel,
    QuadratureSpec,
)
from .mellin import ChartSpec, ReducedTerm, detect_resonance, expand_direct, reduce_integrand
from .testforms import TestForm


class CutoffError(ValueError):
    pass


class PathError(ValueError):
    pass


class InsufficientRangeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Cutoffs
# ---------------------------------------------------------------------------


def _smoothstep(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def _smoothstep_prime(x):
    x = np.asarray(x, dtype=float)
    S = _smoothstep(x)
    inside = (x > 0) & (x < 1)
    out = np.zeros_like(S)
    xi = x[inside]
    out[inside] = S[inside] * (1 - S[inside]) * (1 / xi ** 2 + 1 / (1 - xi) ** 2)
    return out


@dataclass(frozen=True)
class CutoffSpec:
    """``chi`` on ``[0, inf]`` with ``chi(0) = 0``, ``chi(inf) = 1`` and ``chi~(t) = t chi'(t)``."""

    kind: str
    params: tuple = ()
    chi: Callable = field(default=None, compare=False, repr=False)
    chitilde: Callable = field(default=None, compare=False, repr=False)

    def __call__(self, t):
        return self.chi(np.asarray(t, dtype=float))

    def tilde(self, t):
        return self.chitilde(np.asarray(t, dtype=float))


def make_cutoff(kind: str = "rational", chi: Callable | None = None, chitilde: Callable | None = None,
                **params) -> CutoffSpec:
    """Build and verify a cutoff.

    Kinds: ``rational`` (``t/(1+t)``), ``exponential`` (``1 - exp(-t)``),
    ``smoothstep`` (compact transition on ``[lo, hi]``, default ``[0.5, 2]``)
    and ``custom`` (user callables ``chi`` and ``chitilde``).
    """
    if kind == "rational":
        spec = CutoffSpec(kind, (), lambda t: t / (1 + t), lambda t: t / (1 + t) ** 2)
    elif kind == "exponential":
        spec = CutoffSpec(kind, (), lambda t: -np.expm1(-t), lambda t: t * np.exp(-t))
    elif kind == "smoothstep":
        lo, hi = float(params.get("lo", 0.5)), float(params.get("hi", 2.0))
        if not 0 <= lo < hi:
            raise CutoffError("smoothstep needs 0 <= lo < hi")
        w = hi - lo
        spec = CutoffSpec(kind, (("hi", hi), ("lo", lo)),
                          lambda t: _smoothstep((t - lo) / w),
                          lambda t: t * _smoothstep_prime((t - lo) / w) / w)
    elif kind == "custom":
        if chi is None or chitilde is None:
            raise CutoffError("custom cutoffs need chi and chitilde callables")
        spec = CutoffSpec(kind, tuple(sorted(params.items())), chi, chitilde)
    else:
        raise CutoffError(f"unknown cutoff kind {kind!r}")
    verify_cutoff(spec)
    return spec


def verify_cutoff(c: CutoffSpec, bound: float = 1e3):
    """Check the invariants on ``t in {0} u [1e-8, 1e8]`` (log-spaced)."""
    t = np.concatenate([[0.0], np.logspace(-8, 8, 321)])
    chi = np.asarray(c(t), dtype=float)
    til = np.asarray(c.tilde(t), dtype=float)
    if not np.all(np.isfinite(chi)) or not np.all(np.isfinite(til)):
        raise CutoffError("cutoff is not finite on the verification grid")
    if abs(chi[0]) > 1e-14:
        raise CutoffError(f"chi(0) = {chi[0]} instead of 0")
    if chi[-1] < 1 - 1e-7:
        raise CutoffError(f"chi(1e8) = {chi[-1]} is not within 1e-7 of 1")
    if abs(til[0]) > 1e-14:
        raise CutoffError("chi~(0) must vanish")
    if np.max(np.abs(til)) > bound:
        raise CutoffError("chi~ = t chi' is unbounded on the verification grid")
    # chi~ must really be t chi': compare with a centred difference in log t
    h = 1e-4
    tt = t[1:]
    fd = (np.asarray(c(tt * math.exp(h))) - np.asarray(c(tt * math.exp(-h)))) / (2 * h)
    if np.max(np.abs(fd - til[1:])) > 1e-5 * max(1.0, np.max(np.abs(til))):
        raise CutoffError("chi~ does not match t chi'")


# ---------------------------------------------------------------------------
# Epsilon points and paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpsPath:
    """``parabolic``: ``eps = delta^exponents``; ``iterated``: limits taken one
    variable at a time along ``order`` (innermost first); ``line``:
    ``eps = target + delta * direction``."""

    kind: str
    deltas: tuple
    exponents: tuple = (1.0, 1.0, 1.0)
    order: tuple = (0, 1, 2)
    target: tuple = (0.0, 0.0, 0.0)
    direction: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        d = tuple(float(x) for x in self.deltas)
        if len(d) < 3:
            raise PathError("need at least three delta values")
        if any(b >= a for a, b in zip(d, d[1:])) or d[-1] <= 0:
            raise PathError("delta grid must decrease strictly to a positive last value")
        object.__setattr__(self, "deltas", d)
        if self.kind == "parabolic" and any(a <= 0 for a in self.exponents):
            raise PathError("parabolic exponents must be positive")
        if self.kind not in ("parabolic", "iterated", "line"):
            raise PathError(f"unknown path kind {self.kind!r}")

    @classmethod
    def geometric(cls, kind: str, start: float = 0.5, ratio: float = 0.25, count: int = 12, **kw) -> "EpsPath":
        return cls(kind, tuple(start * ratio ** k for k in range(count)), **kw)

    def point(self, delta: float, m: int) -> tuple:
        if self.kind == "parabolic":
            return tuple(delta ** self.exponents[j] for j in range(m))
        if self.kind == "line":
            return tuple(self.target[j] + delta * self.direction[j] for j in range(m))
        raise PathError("iterated paths have no single-parameter points")


@dataclass
class SweepResult:
    samples: list  # (delta, eps, value, error)
    limit: complex | None
    limit_error: float
    converged: bool
    path: EpsPath | None = None
    gamma: float | None = None
    gamma_ci: tuple | None = None
    fit_residual: float | None = None
    certificate: tuple | None = None
    warnings: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _support(a) -> list:
    return [k for k, x in enumerate(a) if x]


class Regularization:
    """Reduced regularized integrand of one chart; evaluate at any eps in the closed octant."""

    def __init__(self, chart: ChartSpec, t: TestForm, cutoffs: Sequence[CutoffSpec] | CutoffSpec,
                 spec: QuadratureSpec | None = None, radii=None, strict: bool = False):
        self.chart = chart
        if isinstance(cutoffs, CutoffSpec):
            cutoffs = (cutoffs,) * chart.m
        if len(cutoffs) != chart.m:
            raise ValueError("one cutoff per factor")
        self.cutoffs = tuple(cutoffs)
        self.spec = spec or QuadratureSpec()
        self.radii = radii
        self.terms: list[ReducedTerm] = reduce_integrand(chart, t, "regularize", strict)
        self._integrators: dict = {}

    def integrator(self, i: int) -> FieldIntegrator:
        if i not in self._integrators:
            tm = self.terms[i]
            self._integrators[i] = FieldIntegrator(tm.data, tm.b, tm.c, self.spec, self.radii)
        return self._integrators[i]

    def kernels(self, term: ReducedTerm, eps: Sequence[float]):
        """Per-variable kernels and group kernels for one term, or None if it vanishes."""
        per_var: dict = {}
        deltas: dict = {}
        groups = []
        for j, (a, kind) in enumerate(zip(self.chart.exponents, term.kinds)):
            cut = self.cutoffs[j]
            e = float(eps[j])
            vs = _support(a)
            if e == 0:
                if kind == "plain":
                    continue
                if len(vs) != 1:
                    raise NotImplementedError(
                        "boundary value of a cutoff derivative on a multi-variable monomial")
                k = vs[0]
                deltas[k] = deltas.get(k, 1.0) / a[k]
                continue
            f = cut.chi if kind == "plain" else cut.chitilde
            if len(vs) == 1:
                k, p = vs[0], a[vs[0]]
                per_var.setdefault(k, []).append((lambda u, f=f, p=p, e=e: f(u ** p / e), e ** (1.0 / p),
                                                  (cut.kind, cut.params, kind, p, e)))
            else:
                pw = tuple(a[k] for k in vs)

                def g(*U, f=f, pw=pw, e=e):
                    x = 1.0
                    for u, p in zip(U, pw):
                        x = x * u ** p
                    return f(x / e)

                groups.append(GroupKernel(tuple(vs), g, f"factor{j + 1}"))
        out = {}
        for k in range(self.chart.n):
            fs = per_var.get(k, [])
            if k in deltas:
                if any(k in g.variables for g in groups):
                    raise NotImplementedError("boundary delta in a variable shared with a group kernel")
                mass = deltas[k]
                for f, _, _ in fs:
                    mass *= complex(np.asarray(f(np.zeros(1)))[0])
                if mass == 0:
                    return None
                out[k] = DeltaKernel(mass)
            elif fs:
                funcs = [f for f, _, _ in fs]
                scales = tuple(s for _, s, _ in fs)

                def K(u, funcs=funcs):
                    v = 1.0
                    for f in funcs:
                        v = v * f(u)
                    return v

                out[k] = FunctionKernel(K, scales=scales, key=tuple(key for _, _, key in fs))
            else:
                out[k] = PowerKernel(0)
        return out, groups

    def value(self, eps: Sequence[float], with_error: bool = True) -> tuple:
        eps = tuple(float(x) for x in eps)
        if len(eps) != self.chart.m or any(not x >= 0 for x in eps):
            raise ValueError("epsilon must be a point of the closed first octant")
        total, err = 0j, 0.0
        for i, tm in enumerate(self.terms):
            kg = self.kernels(tm, eps)
            if kg is None:
                continue
            kernels, groups = kg
            integ = self.integrator(i)
            if with_error:
                v, e, _ = integ.value_with_error(kernels, groups)
            else:
                v, e = integ.value(kernels, groups), 0.0
            total += tm.coef * v
            err += abs(tm.coef) * e
        return total, err


def reg_integral(chart: ChartSpec, t: TestForm, cutoffs, eps, spec: QuadratureSpec | None = None,
                 radii=None) -> complex:
    """Regularized integral at one point of the closed first octant."""
    return Regularization(chart, t, cutoffs, spec, radii).value(tuple(eps))[0]


def reg_direct(chart: ChartSpec, t: TestForm, cutoffs, eps, spec: QuadratureSpec | None = None,
               radii=None) -> complex:
    """Unreduced integrand (every dbar acting on its cutoff) on the full polar grid.

    For eps > 0 the integrand is bounded, so plain Gauss-Legendre quadrature
    applies; used as an independent check of :func:`reg_integral`.
    """
    if isinstance(cutoffs, CutoffSpec):
        cutoffs = (cutoffs,) * chart.m
    eps = tuple(float(x) for x in eps)
    if any(e <= 0 for e in eps):
        raise ValueError("direct evaluation needs eps in the open octant")
    b = chart.b
    total = 0j
    for co, _, c, d, kinds in expand_direct(chart, t, "regularize"):
        factors = []
        for j, (a, kind) in enumerate(zip(chart.exponents, kinds)):
            vs = tuple(_support(a))
            f = cutoffs[j].chi if kind == "plain" else cutoffs[j].chitilde

            def K(*Z, f=f, a=a, vs=vs, e=eps[j]):
                x = 1.0
                for z, k in zip(Z, vs):
                    x = x * np.abs(z) ** (2 * a[k])
                return f(x / e)

            factors.append((vs, K))
        for k in range(chart.n):
            if b[k] or c[k]:
                factors.append(((k,), lambda z, k=k, ck=c[k]: z ** (-b[k]) * np.conj(z) ** (-ck)))
        total += co * direct_field_integral(d, factors, spec, radii)
    return total


# ---------------------------------------------------------------------------
# Extrapolation and sweeps
# ---------------------------------------------------------------------------


def aitken(values: Sequence[complex]) -> list:
    """Aitken delta-squared transform of a sequence (entries where it is undefined are dropped)."""
    v = list(values)
    out = []
    for a, b, c in zip(v, v[1:], v[2:]):
        den = (c - b) - (b - a)
        if abs(den) < 1e-300 or abs(den) < 1e-14 * max(abs(a), abs(b), abs(c), 1e-300):
            out.append(c)
        else:
            out.append(c - (c - b) ** 2 / den)
    return out


def extrapolate(values: Sequence[complex], rel_tol: float = 1e-2) -> tuple:
    """Limit of a sequence sampled on a geometric grid.

    Returns ``(limit, error, converged)``.  The limit is the last Aitken
    iterate.  The error is the spread of the last Aitken iterates, and never
    less than the last raw increment scaled by the observed contraction.
    """
    v = list(values)
    if len(v) < 3:
        raise ValueError("need at least three samples to extrapolate")
    diffs = [abs(b - a) for a, b in zip(v, v[1:])]
    scale = max(abs(x) for x in v) or 1.0
    if diffs[-1] <= 1e-11 * scale:
        return v[-1], diffs[-1], True
    A = aitken(v)
    if len(A) >= 2:
        lim, err = A[-1], abs(A[-1] - A[-2])
    else:
        lim, err = A[-1], diffs[-1]
    contracting = len(diffs) < 3 or diffs[-1] <= diffs[-3] * 1.05
    converged = contracting and err <= rel_tol * scale
    return lim, err, converged


class Sweeper:
    """Runs epsilon paths for one :class:`Regularization`."""

    def __init__(self, reg: Regularization):
        self.reg = reg
        self.m = reg.chart.m

    def _val(self, eps):
        return self.reg.value(eps, with_error=True)

    def sweep(self, path: EpsPath) -> SweepResult:
        cert = None
        res = detect_resonance(self.reg.chart)
        if res.resonant:
            cert = res.certificate
        if path.kind in ("parabolic", "line"):
            samples = []
            for d in path.deltas:
                eps = path.point(d, self.m)
                v, e = self._val(eps)
                samples.append((d, eps, v, e))
            lim, err, ok = extrapolate([s[2] for s in samples])
            err = err + max(s[3] for s in samples[-3:])
            return SweepResult(samples, lim if ok else None, err, ok, path, certificate=cert)
        return self._iterated(path, cert)

    def _iterated(self, path: EpsPath, cert) -> SweepResult:
        order = tuple(path.order[: self.m])
        if sorted(order) != list(range(self.m)):
            raise PathError("iterated order must be a permutation of the factors")
        ok_all = [True]
        errs = [0.0]

        def limit(stage: int, fixed: dict):
            """Limit over eps_{order[stage]} -> 0 with outer variables fixed."""
            j = order[stage]
            vals = []
            for d in path.deltas:
                f = dict(fixed)
                f[j] = d
                if stage == 0:
                    eps = tuple(f[i] for i in range(self.m))
                    v, _ = self.reg.value(eps, with_error=False)
                else:
                    v = limit(stage - 1, f)
                vals.append(v)
            lim, err, ok = extrapolate(vals)
            if not ok:
                ok_all[0] = False
            errs[0] = max(errs[0], err)
            return lim

        # outermost stage is recorded as the sample sequence
        samples = []
        j_out = order[-1]
        for d in path.deltas:
            fixed = {j_out: d}
            v = limit(self.m - 2, fixed) if self.m > 1 else self._val((d,))[0]
            eps = tuple(d if i == j_out else 0.0 for i in range(self.m))
            samples.append((d, eps, v, errs[0]))
        lim, err, ok = extrapolate([s[2] for s in samples])
        ok = ok and ok_all[0]
        return SweepResult(samples, lim if ok else None, err + errs[0], ok, path, certificate=cert)


def sweep(chart_or_reg, t: TestForm | None = None, cutoffs=None, path: EpsPath | None = None,
          spec: QuadratureSpec | None = None, radii=None) -> SweepResult:
    """Values along ``path`` and the extrapolated limit."""
    reg = chart_or_reg if isinstance(chart_or_reg, Regularization) else Regularization(
        chart_or_reg, t, cutoffs, spec, radii)
    return Sweeper(reg).sweep(path)


# ---------------------------------------------------------------------------
# Hölder exponent
# ---------------------------------------------------------------------------


@dataclass
class HolderFit:
    gamma: float
    ci: tuple
    residual: float
    constant: float
    usable_range: tuple
    n_used: int
    warnings: list = field(default_factory=list)


def holder_estimate(samples, reference: complex | None = None, min_samples: int = 8, min_decades: float = 3.0,
                    residual_threshold: float = 0.15) -> HolderFit:
    """Fit ``log|I(eps) - I*| = log C + gamma log|eps - eps*|``.

    ``samples`` is a :class:`SweepResult` or a sequence of ``(distance, value)``.
    Points whose difference is at roundoff level are discarded.  ``gamma`` is
    an empirical fit only.
    """
    if isinstance(samples, SweepResult):
        if reference is None:
            reference = samples.limit
        pts = [(float(np.linalg.norm(s[1])), s[2]) for s in samples.samples]
    else:
        pts = [(float(d), complex(v)) for d, v in samples]
    if reference is None:
        raise ValueError("a reference value is required")
    dist = np.array([p[0] for p in pts])
    diff = np.array([abs(p[1] - reference) for p in pts])
    scale = max(abs(reference), 1e-300)
    keep = (dist > 0) & (diff > 1e-13 * scale)
    dist, diff = dist[keep], diff[keep]
    if len(dist) < min_samples:
        raise InsufficientRangeError(f"{len(dist)} usable samples, need {min_samples}")
    decades = math.log10(dist.max() / dist.min())
    if decades < min_decades:
        raise InsufficientRangeError(f"samples span {decades:.2f} decades, need {min_decades}")
    x, y = np.log(dist), np.log(diff)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    gamma, c0 = coef
    resid = y - A @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    dof = max(len(x) - 2, 1)
    s2 = float(np.sum(resid ** 2) / dof)
    se = math.sqrt(s2 / max(np.sum((x - x.mean()) ** 2), 1e-300))
    warn = []
    # drift of the local slope hints at a logarithmic factor
    half = len(x) // 2
    if half >= 3:
        g1 = np.polyfit(x[:half], y[:half], 1)[0]
        g2 = np.polyfit(x[half:], y[half:], 1)[0]
        if abs(g1 - g2) > 0.02:
            warn.append(f"local slope drifts from {g2:.3f} to {g1:.3f}: possible logarithmic factor")
    if rms > residual_threshold:
        warn.append(f"fit residual {rms:.3f} above threshold {residual_threshold}")
    for w in warn:
        warnings.warn(w, RuntimeWarning, stacklevel=2)
    return HolderFit(float(gamma), (float(gamma - 2 * se), float(gamma + 2 * se)), rms, float(math.exp(c0)),
                     (float(dist.min()), float(dist.max())), int(len(dist)), warn)
