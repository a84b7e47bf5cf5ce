"""Random exact forms for the symbolic tests (numpy-seeded and hypothesis flavours)."""

from itertools import combinations

import numpy as np
from hypothesis import strategies as st

from residue_lab.decompose import d_monomial
from residue_lab.forms import QI, ExteriorForm, SparsePoly, wedge


def random_poly(rng, n, max_deg=4, max_terms=3, zero_ok=True):
    terms = {}
    for _ in range(rng.integers(0 if zero_ok else 1, max_terms + 1)):
        deg = rng.integers(0, max_deg + 1)
        e = [0] * n
        for _ in range(deg):
            e[rng.integers(0, n)] += 1
        c = QI(int(rng.integers(-3, 4)), int(rng.integers(-2, 3)))
        terms[tuple(e)] = terms.get(tuple(e), QI(0)) + c
    return SparsePoly(n, terms)


def random_form(rng, n, k, max_deg=4, max_terms=3, density=0.6):
    comps = {}
    for K in combinations(range(n), k):
        if rng.random() < density:
            comps[K] = random_poly(rng, n, max_deg, max_terms)
    return ExteriorForm(n, k, comps)


def random_instance(rng, n_max=5, max_deg=4):
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(0, max(n - 1, 0) + 1))
    return random_form(rng, n, k, max_deg)


def correction_instance(rng, n_max=5, max_deg=4, nontrivial=True):
    """``(a, sigma, tau)`` with the correction precondition built in.

    Components without tau-differentials pick up every tau-variable; components
    containing some tau-differentials pick up the remaining tau-variables.  That
    part already vanishes on ``Z_tau``, so (for k >= 1) a random ``d sigma ^ beta``
    is added as well -- it is killed by ``d sigma ^ .`` and makes the correction
    non-trivial.
    """
    n = int(rng.integers(2, n_max + 1))
    k = int(rng.integers(0, n))
    idx = rng.permutation(n)
    n_tau = int(rng.integers(1, n))
    tau = tuple(sorted(int(i) for i in idx[:n_tau]))
    rest = [int(i) for i in idx[n_tau:]]
    sigma = [0] * n
    for i in rest:
        if rng.random() < 0.7:
            sigma[i] = int(rng.integers(1, 3))
    if not any(sigma):
        sigma[rest[0]] = 1
    raw = random_form(rng, n, k, max_deg=max(0, max_deg - n_tau))
    comps = {}
    for K, p in raw.components.items():
        mult = [0] * n
        for j in tau:
            if j not in K:
                mult[j] = 1
        comps[K] = p * SparsePoly.monomial(mult)
    a = ExteriorForm(n, k, comps)
    if nontrivial and k >= 1:
        beta = random_form(rng, n, k - 1, max_deg=2, max_terms=2)
        a = a + wedge(d_monomial(sigma), beta)
    return a, tuple(sigma), tau


@st.composite
def forms(draw, n=None, k=None, max_deg=3):
    n = draw(st.integers(1, 4)) if n is None else n
    k = draw(st.integers(0, n)) if k is None else k
    comps = {}
    for K in combinations(range(n), k):
        terms = draw(st.lists(st.tuples(st.lists(st.integers(0, max_deg), min_size=n, max_size=n),
                                        st.integers(-3, 3), st.integers(-2, 2)), max_size=3))
        comps[K] = SparsePoly(n, {tuple(e): QI(a, b) for e, a, b in terms if sum(e) <= max_deg})
    return ExteriorForm(n, k, comps)


def seeds(count, base=0):
    return [np.random.default_rng(base + i) for i in range(count)]
