"""Stagewise contracting systems on the plane.

Build systems whose map family may change at every stage, enumerate their
pieces, certify pointwise thinness of the limit set with separating-annulus
certificates, classify escape under stagewise quadratic dynamics, and drive
it all from a JSON-configured command line.
"""

from .errors import (
    AtlasError,
    BranchCutError,
    ConfigError,
    ContainmentError,
    DegenerateAnnulusError,
    DomainError,
    EvalError,
    HorizonError,
    HypothesisError,
    ModeError,
    NoValidCError,
    ParameterError,
    ParseError,
    SizeCapError,
)
from .geometry import (
    ClosedDisk,
    DiskDomain,
    Enclosure,
    RealInterval,
    RoundAnnulus,
    annulus_modulus,
    annulus_separates,
    best_separating_annulus_search,
    boundary_distance_lower,
    extremal_distances,
    hyperbolic_distance,
    piece_side,
    set_distance_lower,
)
from .maps import (
    AffineMap,
    AnchoredEvaluator,
    ConformalMapExpr,
    SqrtBranch,
    apply,
    as_expr,
    compose,
    compose_chain,
    derivative_sup_bound,
    identity_map,
    image_disk,
    image_enclosure,
    image_interval,
)
from .nifs import (
    InvarianceReport,
    PieceEnclosure,
    Stage,
    SystemSpec,
    Word,
    assemble_system,
    attractor_sample,
    collapsed_word_map,
    combine_stages,
    invariance_check,
    pieces,
    project,
    shifted,
    stage_of,
)
from .certify import (
    CertificateEntry,
    SeparationReport,
    StageDiagnostic,
    ThinnessCertificate,
    VerificationResult,
    build_certificate,
    certificate_json,
    default_c,
    pushforward_annulus,
    separation_report,
    verify_certificate,
)
from .julia import (
    DichotomyReport,
    EscapeGrid,
    HypothesisReport,
    PolySeqSpec,
    RandomSeqSpec,
    SampleSummary,
    SequenceRecord,
    branch_separation_floor,
    check_hypotheses,
    dichotomy_report,
    forward_classify,
    inverse_ifs,
    make_poly_seq,
    render,
    sample_sequences,
    summary_json,
)
from .seqlang import (
    ConstantRule,
    ExprRule,
    ListRule,
    OverrideRule,
    SeqRule,
    evaluate,
    evaluate_rule,
    expr_rule,
    parse,
    rule_from_config,
    rule_to_config,
    to_source,
)
from .families import (
    cantor_system,
    explicit_system,
    gapped_system,
    system_from_descriptor,
)

__version__ = "0.1.0"
