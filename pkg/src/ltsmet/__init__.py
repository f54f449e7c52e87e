"""Behavioural equivalences, preorders and exact behavioural metrics on
finite metric labelled transition systems."""

from .core import (
    ONE,
    ZERO,
    FixpointError,
    FixpointReport,
    UnitValue,
    directed_hausdorff,
    hausdorff,
    kleene_fix,
    relation_lift,
    unit,
    unit_arith,
)
from .lts import (
    LabelMetric,
    Mts,
    MtsError,
    MtsParseError,
    bounded_traces,
    make_mts,
    model_digest,
    parse_mts,
    successors,
    to_text,
    trace_distance,
)
from .qualitative import (
    RelationTable,
    bisimilarity,
    decorated_base,
    decorated_trace_related,
    similarity,
    state_equivalence,
    trace_equivalent,
    trace_step,
)
from .quantitative import (
    DirectedMetricTable,
    PowersetMetricTable,
    bet_step,
    bisim_metric,
    decorated_d0,
    decorated_trace_metric,
    dir_sim_metric,
    dir_trace_metric,
    eps_characterization,
    kernel,
)
from .logic import (
    Formula,
    FragmentError,
    HmReport,
    alpha,
    eval_formula,
    hm_cross_check,
    logic_saturate,
    parse_formula,
)
from .game import GameResult, game_value, solve_game
from .oracle import omega_oracle, trace_hausdorff_oracle

__version__ = "0.1.0"
