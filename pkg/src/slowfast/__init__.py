"""Slow-fast Hamiltonian systems with one fast and one slow degree of freedom.

Hamiltonians ``H(x, y, u, v)`` are parsed from text, differentiated with
truncated Taylor jets, and analysed near the fold and cusp points of their
slow manifold, where the blown-up dynamics reduce to Painlevé I and II.
"""

from .dynamics import (PhasePoint, Trajectory, integrate, integrate_fast_layer,
                       step_implicit_midpoint, vector_field_full)
from .errors import *  # noqa: F401,F403
from .hamiltonian import (HamiltonianModel, ModelFamily, cusp_canonical, eval_jet,
                          fold_canonical, load_model, parse_hamiltonian)
from .jets import Jet, extract_partial, implicit_jets, jet_constant, jet_variable
from .painleve import (LimitTrajectory, StandardForm, integrate_painleve_i,
                       integrate_painleve_ii, to_standard_form)
from .reduction import (Branch, CuspLimitSystem, FoldLimitSystem, ReducedSystem,
                        SingularTrace, cusp_coefficients, fold_coefficients,
                        isoenergetic_reduce, normal_shift, singular_trace_on_level)
from .slow_manifold import (Classification, SingularPointRecord, SmChart,
                            classify_singular_point, delta, slow_hamiltonian,
                            slow_vector_field, sm_chart, solve_critical_point,
                            trace_singular_curve)
from .verify import (FormDeterminantReport, RescaleParams, StudyKind, StudyResult,
                     blowup_rescale, convergence_study, form_determinants)

__version__ = "0.1.0"
