"""Architecture search over tabular benchmarks with advisor loops.

The package splits into: search spaces and keys (space), an analytic
FLOPs model (flops), benchmark tables (bench), proposal advisors
(advisor), the search loop and baselines (engine), and run reporting
(report). The `llmnas` command exposes the whole pipeline.
"""

from .advisor import (
    API_KEY_ENV,
    Advisor,
    AdvisorSession,
    ArchProposal,
    ChatAdvisor,
    ChatCompletionsClient,
    HillClimbAdvisor,
    History,
    HistoryRecord,
    NO_IMPROVEMENT_TEXT,
    NoImprovement,
    Proposal,
    RandomAdvisor,
    ReplayAdvisor,
    ScriptedAdvisor,
    corrective_prompt,
    encode_problem,
    feedback_prompt,
    flops_violation_prompt,
    parse_proposal,
    proposal_text,
    reply_digest,
    retry_feedback_prompt,
)
from .bench import (
    BenchmarkTable,
    Metrics,
    SynthModel,
    load_benchmark,
    save_benchmark,
    synth_benchmark,
)
from .engine import (
    BaselineResult,
    Evaluator,
    FunctionEvaluator,
    IterationRecord,
    RunConfig,
    TableEvaluator,
    Trace,
    TraceStatus,
    best_of_trace,
    enforce_flops,
    exact_best_of_k_expectation,
    random_baseline,
    run_search,
    run_trials,
)
from .errors import (
    AdvisorFailed,
    ConstraintUnsatisfied,
    DimensionError,
    DuplicateKey,
    EmptyTrace,
    FormatError,
    InvalidArchitecture,
    KeyParseError,
    LlmnasError,
    MixedRuns,
    ParseError,
    SpaceTooLarge,
    TransportError,
    UnknownArchitecture,
)
from .flops import (
    DEFAULT_PLAN,
    DEFAULT_RESOLUTION,
    FlopsTable,
    StagePlan,
    build_flops_table,
    conv_macs,
    fixed_flops,
    fixed_params,
    layer_flops,
    layer_params,
    slot_shape,
    total_flops,
    total_params,
)
from .report import (
    ExperimentLog,
    export_plot_csv,
    read_trace_jsonl,
    summary_table,
    write_trace_jsonl,
)
from .space import (
    Architecture,
    Choice,
    ChoicePosition,
    SearchSpace,
    SpaceKind,
    canonical_key,
    cell_space,
    channel_space,
    enumerate_space,
    is_valid,
    macro_space,
    mobilenet_v2_space,
    mutate,
    normalize,
    parse_key,
    random_arch,
    space_cardinality,
    validate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
