"""Almost-periodicity diagnostics and singular-kernel convolutions on sampled functions."""

__version__ = "0.1.0"

from .specfun import (DomainError, KernelSpec, envelope_check, g_kernel, gamma_fn,  # noqa: E402
                      mittag_leffler, resolvent_kernel, solution_family)
from .funcspace import (SampledFunction, SeminormEstimate, besicovitch_seminorm,  # noqa: E402
                        half_line, make_trig_polynomial, make_vanishing, read_csv, shift,
                        stepanov_norm, whole_line, write_csv)
from .apanalysis import (BDReport, ClassifyConfig, DossReport, bd_condition,  # noqa: E402
                         bp_continuity_modulus, classify, doss_defect, montenegro_check,
                         period_scan)
from .convops import (ConvolutionConfig, admissibility, caputo, finite_convolution,  # noqa: E402
                      infinite_convolution, weyl_liouville, zeta_constant)
from .harness import (TheoremReport, solve_dfp, solve_relaxation,  # noqa: E402
                      verify_bd_invariance, verify_doss_invariance, verify_perturbation)
