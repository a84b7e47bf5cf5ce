"""Layered decomposition of a holomorphic form along a squarefree monomial divisor.

Given ``tau = z_r ... z_s`` with index set ``I``, a form ``alpha`` splits as

    alpha = head + sum over layers + tail

where ``head`` is ``alpha`` restricted to ``V_I`` and extended constantly,
the layer indexed by ``J`` (``J`` a proper subset of ``I``) vanishes on
``Z_J = union_{i in I \\ J} {z_i = 0}``, and ``tail`` vanishes on ``Z_tau``.
Dropping the tail gives a correction ``alpha'`` with ``d sigma ^ alpha' = 0``
whenever ``d sigma ^ alpha`` vanishes on ``Z_tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

from .forms import (
    DivisorSpec,
    ExteriorForm,
    SparsePoly,
    all_subsets,
    exterior_d,
    restrict_extend,
    vanishes_on,
    wedge,
)


class PreconditionError(ValueError):
    """The input form does not satisfy the hypothesis of the correction construction."""

    def __init__(self, message: str, witness_index: int | None = None):
        super().__init__(message)
        self.witness_index = witness_index


@dataclass(frozen=True)
class IndexFamily:
    """The index set ``I`` and, per level j, the subsets with j elements removed."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        if not idx:
            raise ValueError("index set must be nonempty")
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return len(self.indices)

    def level(self, j: int) -> list[tuple]:
        """All subsets of I with exactly j elements fewer, lexicographic."""
        return all_subsets(self.indices, self.size - j)

    def level_sizes(self) -> list[int]:
        return [comb(self.size, j) for j in range(self.size + 1)]

    def divisor_of(self, J: Sequence[int], n: int) -> DivisorSpec:
        """``Z_J``: the union of ``{z_i = 0}`` for i in I but not in J."""
        return DivisorSpec.of_indices(n, set(self.indices) - set(J))


@dataclass
class Decomposition:
    head: ExteriorForm
    layers: dict = field(default_factory=dict)  # level j -> {J: form}
    tail: ExteriorForm | None = None
    family: IndexFamily | None = None

    def total(self) -> ExteriorForm:
        out = self.head
        for lvl in self.layers.values():
            for f in lvl.values():
                out = out + f
        return out + self.tail

    def correction(self) -> ExteriorForm:
        """Head plus all layers; the tail is dropped."""
        return self.total() - self.tail


def prop9_decompose(a: ExteriorForm, family: IndexFamily | Iterable[int], order: Sequence[tuple] | None = None) -> Decomposition:
    """Recursive decomposition; ``order`` optionally permutes the per-level subset order."""
    if not isinstance(family, IndexFamily):
        family = IndexFamily(tuple(family))
    if any(not 0 <= i < a.n for i in family.indices):
        raise ValueError("index set outside the ambient coordinates")
    head = restrict_extend(a, family.indices)
    current = a - head
    layers: dict = {}
    for j in range(1, family.size):
        subsets = family.level(j)
        if order is not None:
            subsets = [J for J in order if len(J) == family.size - j] or subsets
        lvl = {J: restrict_extend(current, J) for J in subsets}
        layers[j] = lvl
        for f in lvl.values():
            current = current - f
    return Decomposition(head=head, layers=layers, tail=current, family=family)


@dataclass
class Check:
    name: str
    passed: bool
    witness: str = ""


@dataclass
class Report:
    checks: list

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "checks": [{"name": c.name, "passed": c.passed, "witness": c.witness} for c in self.checks],
        }


def verify_decomposition(d: Decomposition, a: ExteriorForm, family: IndexFamily | Iterable[int]) -> Report:
    if not isinstance(family, IndexFamily):
        family = IndexFamily(tuple(family))
    checks = []
    residual = a - d.total()
    checks.append(Check("reconstruction", residual.is_zero(), "" if residual.is_zero() else f"residual {residual!r}"))
    for j, lvl in sorted(d.layers.items()):
        for J, f in lvl.items():
            Z = family.divisor_of(J, a.n)
            ok = vanishes_on(f, Z)
            name = "layer %d %s vanishes on Z%s" % (j, _fmt(J), _fmt(Z.components))
            checks.append(Check(name, ok, "" if ok else _witness(f, Z)))
    Ztau = DivisorSpec.of_indices(a.n, family.indices)
    ok = vanishes_on(d.tail, Ztau)
    checks.append(Check("tail vanishes on Z_tau", ok, "" if ok else _witness(d.tail, Ztau)))
    return Report(checks)


def _fmt(idx) -> str:
    return "{" + ",".join(str(i + 1) for i in idx) + "}"


def _witness(f: ExteriorForm, Z: DivisorSpec) -> str:
    for i in Z.components:
        r = restrict_extend(f, {i})
        if not r.is_zero():
            return f"restriction to z{i + 1}=0 is {r!r}"
    return ""


def d_monomial(sigma: Sequence[int]) -> ExteriorForm:
    return exterior_d(ExteriorForm.function(SparsePoly.monomial(sigma)))


def lemma7_correct(a: ExteriorForm, sigma: Sequence[int], tau: Iterable[int]) -> ExteriorForm:
    """Return ``alpha'`` with ``d sigma ^ alpha' = 0``, ``alpha'`` vanishing on ``Z_sigma``
    and ``a - alpha'`` vanishing on ``Z_tau``.

    ``tau`` is an index set (the squarefree monomial ``prod z_i``); it must be
    disjoint from the support of ``sigma``.  Coordinates are not renumbered:
    every step is symmetric under permutations, so the normal position of the
    hypothesis is only validated.
    """
    sigma = tuple(int(x) for x in sigma)
    tau = tuple(sorted(set(tau)))
    if len(sigma) != a.n:
        raise ValueError("sigma exponent vector has the wrong length")
    if not any(sigma):
        raise ValueError("sigma must be a non-constant monomial")
    if not tau:
        raise ValueError("tau must contain at least one index")
    overlap = [i for i in tau if sigma[i]]
    if overlap:
        raise PreconditionError(f"z{overlap[0] + 1} divides both sigma and tau", overlap[0])
    ds_a = wedge(d_monomial(sigma), a)
    for i in tau:
        r = restrict_extend(ds_a, {i})
        if not r.is_zero():
            raise PreconditionError(
                f"d sigma ^ alpha does not vanish on z{i + 1}=0 (restriction {r!r})", i
            )
    return prop9_decompose(a, tau).correction()


def verify_lemma7(a: ExteriorForm, sigma: Sequence[int], tau: Iterable[int], a_prime: ExteriorForm) -> Report:
    tau = tuple(sorted(set(tau)))
    ds = d_monomial(sigma)
    checks = []
    w = wedge(ds, a_prime)
    checks.append(Check("d sigma ^ alpha' = 0", w.is_zero(), "" if w.is_zero() else repr(w)))
    Zs = DivisorSpec(tuple(sigma))
    ok = vanishes_on(a_prime, Zs)
    checks.append(Check("alpha' vanishes on Z_sigma", ok, "" if ok else _witness(a_prime, Zs)))
    Zt = DivisorSpec.of_indices(a.n, tau)
    diff = a - a_prime
    ok = vanishes_on(diff, Zt)
    checks.append(Check("alpha - alpha' vanishes on Z_tau", ok, "" if ok else _witness(diff, Zt)))
    return Report(checks)
