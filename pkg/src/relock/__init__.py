"""Gate-level sequential logic encryption with sporadic re-authentication."""

from .bench import (
    BenchError,
    CircuitStats,
    CompiledCircuit,
    DanglingNetWarning,
    Gate,
    Netlist,
    emit_bench,
    eval_comb,
    load_bench,
    parse_bench,
    save_bench,
)
from .lfsr import MAXIMAL_TAPS, Lfsr, new_lfsr, period, sequence, step
from .encrypt import (
    DEFAULT_SEED,
    EncFsmSpec,
    EncryptConfig,
    EncryptedDesign,
    EncryptReport,
    KeySchedule,
    XorSite,
    build_enc_fsm,
    derive_sbj,
    encrypt,
    insert_xor,
    load_config,
    load_schedule,
    save_config,
    save_schedule,
)
from .sim import (
    AuthWindow,
    Stimulus,
    Trace,
    authentication_schedule,
    hamming_distance,
    simulate,
    trusted_user_stimulus,
    workload_cycle_mask,
    workload_stimulus,
    write_columnar,
    write_vcd,
)
from .evaluate import (
    Case,
    HdReport,
    OverheadReport,
    brute_force_effort,
    cycle_delay_overhead,
    cycle_delay_sweep,
    overhead_report,
    run_case,
    write_hd_csv,
)
from .unroll import (
    Cnf,
    CnfBuilder,
    UnrolledCircuit,
    eval_unrolled,
    to_cnf,
    to_dimacs,
    unroll,
)
from .sat import SAT, UNKNOWN, UNSAT, Solver, SolveResult, solve
from .attack import (
    STATUS_BUDGET,
    STATUS_NO_KEY,
    STATUS_RECOVERED,
    STATUS_VERIFY_FAILED,
    AttackResult,
    SequenceOracle,
    WindowRecovery,
    derive_window_starts,
    recover_key_sequences,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
