"""Multipartite correlation boxes: modeling, certified class membership,
protocol transformations, and Bell functional optimization."""

from .bell import BellFunctional, chsh, evaluate, grouped_local_bound, gyni, local_bound, max_over_set
from .membership import (
    BL,
    GROUPED_TOBL,
    LOCAL,
    MEMBER,
    NON_MEMBER,
    NSBL,
    TOBL,
    UNDECIDED,
    check_bl,
    check_local,
    check_nsbl,
    check_tobl,
    check_tobl_general,
    classify_bl_certificate,
    inclusion_chain,
    reconstruct,
    reconstruction_residual,
)
from .model import (
    Box,
    BoxError,
    ModeMismatchError,
    Partition,
    Relabeling,
    Scenario,
    SignallingError,
    is_no_signalling,
    marginal,
    mix,
    rationalize,
    relabel,
    tensor,
    validate_box,
)
from .quantum import BinaryMeasurement, PureState, born_box, ghz_state, paper_ghz_box
from .reproduce import run_reproduce
from .wiring import (
    PostselectStep,
    Protocol,
    SequentialWiring,
    WiringPlan,
    apply_sequential_wiring,
    enumerate_wirings,
    paper_broadcast_protocol,
    paper_fig1b_wiring,
    postselect,
    run_protocol,
    wiring_matrix,
)

__version__ = "1.0.0"
