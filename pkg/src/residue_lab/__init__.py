"""residue_lab: exact exterior algebra and numerical experiments for
codimension-three residue currents (Mellin continuation and regularized
residue integrals on normal-crossings charts)."""

__version__ = "0.1.0"

from .forms import (  # noqa: E402
    DivisorSpec,
    ExteriorForm,
    MonomialMap,
    PolyMap,
    SparsePoly,
    parse_form,
    pullback,
    serialize,
    wedge,
)
from .decompose import lemma7_correct, prop9_decompose, verify_decomposition, verify_lemma7  # noqa: E402
from .testforms import Field, Profile1D, TestForm, gaussian_bump, poly_bump, pullback_test  # noqa: E402
from .integrate import QuadratureSpec, cauchy_pompeiu, quad1d, quad_nested  # noqa: E402
from .mellin import ChartSpec, Continuation, MeromorphicValue, continue_eval, detect_resonance, mellin_direct  # noqa: E402
from .regularize import CutoffSpec, EpsPath, Regularization, holder_estimate, make_cutoff, sweep  # noqa: E402

__all__ = [
    "ChartSpec", "Continuation", "CutoffSpec", "DivisorSpec", "EpsPath", "ExteriorForm", "Field", "MeromorphicValue",
    "MonomialMap", "PolyMap", "Profile1D", "QuadratureSpec", "Regularization", "SparsePoly", "TestForm",
    "cauchy_pompeiu", "continue_eval", "detect_resonance", "gaussian_bump", "holder_estimate", "lemma7_correct",
    "make_cutoff", "mellin_direct", "parse_form", "poly_bump", "prop9_decompose", "pullback", "pullback_test",
    "quad1d", "quad_nested", "serialize", "sweep", "verify_decomposition", "verify_lemma7", "wedge",
]
