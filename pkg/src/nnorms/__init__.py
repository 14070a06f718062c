"""Standard n-norms, multilinear functionals and their dual norms."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AXIOM_TOLERANCES,
    Frame,
    InnerProductSpace,
    NormIndex,
    SubsetTerm,
    Vector,
    as_index,
    check_frame_independent,
    check_inner_axioms,
    check_norm_axioms,
    derived_norm,
    frame_conditioning,
    gram_matrix,
    inner_product,
    random_spd_metric,
    standard_n_inner,
    standard_n_norm,
    subset_family,
    term_operators,
)
from .functionals import (  # noqa: E402
    AnchoredFunctional,
    FrameFunctional,
    ProductDomain,
    TensorFunctional,
    check_multilinearity,
    closed_form_norm,
    evaluate,
    fact1_witness,
    fact2_witness,
    fact3_witness,
    frame_as_anchored,
    scaled,
    to_tensor,
)
from .estimation import (  # noqa: E402
    EstimatorConfig,
    NormEstimate,
    equivalence_constant,
    estimate_inf_norm_ratio,
    estimate_sup_norm,
    slot_maximize,
    verify_corollary,
    verify_fact,
    verify_lemma_equality,
    verify_sandwich,
)
from .continuity import (  # noqa: E402
    ContinuityCertificate,
    ContinuityQuery,
    find_delta,
    lipschitz_modulus,
    probe_continuity,
    product_star_norm,
)
from .report import CheckRecord, VerificationReport  # noqa: E402
