"""Command line front end.

One executable, six subcommands: netlist statistics, encryption, trace
simulation, output-corruption measurement, key-sequence recovery, and the
closed-form security/overhead models.  Every subcommand is deterministic
for fixed flags; seeds default to fixed values so published runs reproduce
byte for byte.

Exit codes: 0 success, 1 usage error, 2 bad input, 3 resource budget
exhausted.  Diagnostics go to stderr, results to stdout.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from decimal import Decimal
from pathlib import Path

from .attack import (
    STATUS_BUDGET,
    SequenceOracle,
    derive_window_starts,
    recover_key_sequences,
)
from .bench import BenchError, load_bench, save_bench
from .encrypt import EncryptConfig, KeySchedule, encrypt, load_config, load_schedule, save_schedule
from .evaluate import (
    Case,
    brute_force_effort,
    cycle_delay_overhead,
    cycle_delay_sweep,
    run_case,
    write_hd_csv,
)
from .sim import (
    Stimulus,
    simulate,
    trusted_user_stimulus,
    workload_stimulus,
    write_columnar,
    write_vcd,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3

DEFAULT_CLI_SEED = 0


class _InputError(Exception):
    pass


def _fail(msg: str) -> "_InputError":
    return _InputError(msg)


def _load_bench(path: str):
    try:
        return load_bench(path)
    except OSError as e:
        raise _fail(f"cannot read '{path}': {e.strerror or e}") from e
    except BenchError as e:
        raise _fail(f"{path}: {e}") from e


def _load_schedule(path: str) -> KeySchedule:
    try:
        return load_schedule(path)
    except OSError as e:
        raise _fail(f"cannot read '{path}': {e.strerror or e}") from e
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        raise _fail(f"{path}: bad key schedule: {e}") from e


def sci(value: int, digits: int = 3) -> str:
    """Short scientific rendering of an exact integer, e.g. 5.93e+79."""
    d = Decimal(value)
    exp = d.adjusted()
    mant = d.scaleb(-exp).quantize(Decimal(1).scaleb(1 - digits))
    return f"{mant}e{exp:+d}"


def _cmd_stats(args) -> int:
    nl = _load_bench(args.bench)
    s = nl.stats()
    print(f"{nl.name}: {s.n_inputs}/{s.n_outputs}/{s.n_dffs}/{s.n_gates} (inputs/outputs/dffs/gates)")
    return EXIT_OK


def _cmd_encrypt(args) -> int:
    nl = _load_bench(args.bench)
    if args.config is not None:
        try:
            cfg = load_config(args.config)
        except OSError as e:
            raise _fail(f"cannot read '{args.config}': {e.strerror or e}") from e
        except (ValueError, KeyError, TypeError) as e:
            raise _fail(f"{args.config}: bad config: {e}") from e
    else:
        cfg = EncryptConfig()
    try:
        design = encrypt(nl, cfg)
    except ValueError as e:
        raise _fail(f"encrypt failed: {e}") from e
    save_bench(design.netlist, args.out)
    save_schedule(design.schedule, args.keys)
    r = design.report
    print(
        f"{nl.name}: +{r.added_gates} gates, +{r.added_dffs} DFFs, "
        f"{len(r.sites)} corrupted nets (coverage {r.achieved_coverage:.4f}) -> {args.out}"
    )
    return EXIT_OK


def _case_stimulus(sched: KeySchedule, case: Case, cycles: int, rng: random.Random):
    n_in = sched.n_inputs
    if case is Case.TRUSTED:
        workload = [rng.getrandbits(n_in) for _ in range(cycles)]
        return trusted_user_stimulus(sched, workload, cycles)
    if case is Case.UNKEYED:
        return workload_stimulus(rng.getrandbits(n_in) for _ in range(cycles))
    first = sched.key_table[0]
    vectors = list(first[: min(sched.key_len, cycles)])
    vectors += [rng.getrandbits(n_in) for _ in range(cycles - len(vectors))]
    tags: list[int | None] = [None] * min(sched.key_len, cycles)
    tags += range(cycles - len(tags))
    return Stimulus(tuple(vectors), tuple(tags))


def _cmd_simulate(args) -> int:
    nl = _load_bench(args.bench)
    if (args.keys is None) != (args.case is None):
        raise _fail("--keys and --case must be given together")
    rng = random.Random(f"{args.seed}/cli/simulate")
    if args.keys is not None:
        sched = _load_schedule(args.keys)
        if sched.n_inputs != len(nl.inputs):
            raise _fail(
                f"schedule is for {sched.n_inputs} inputs, netlist has {len(nl.inputs)}"
            )
        stim = _case_stimulus(sched, Case(args.case), args.cycles, rng)
    else:
        stim = workload_stimulus(rng.getrandbits(len(nl.inputs)) for _ in range(args.cycles))
    trace = simulate(nl, stim, cycles=args.cycles)
    write_columnar(trace, sys.stdout)
    if args.vcd is not None:
        with open(args.vcd, "w", newline="\n") as fh:
            write_vcd(trace, fh, design=nl.name)
    return EXIT_OK


def _cmd_eval_hd(args) -> int:
    orig = _load_bench(args.orig)
    enc = _load_bench(args.enc)
    sched = _load_schedule(args.keys)
    try:
        cases = [Case(int(tok)) for tok in args.cases.split(",") if tok]
    except ValueError as e:
        raise _fail(f"bad --cases '{args.cases}': {e}") from e
    if not cases:
        raise _fail("no cases requested")
    reports = []
    for case in cases:
        try:
            rep = run_case(orig, (enc, sched), case, n_vectors=args.vectors, cycles=args.cycles, seed=args.seed)
        except ValueError as e:
            raise _fail(f"eval-hd failed: {e}") from e
        reports.append(rep)
        print(f"case {int(case)}: mean HD {rep.mean_hd:.6f} over {rep.mask_size} workload cycles x {rep.n_vectors} vectors")
    if args.csv is not None:
        with open(args.csv, "w", newline="") as fh:
            write_hd_csv(reports, fh)
    return EXIT_OK


def _load_timing(args, key_len_hint: int | None):
    """Window starts and key length from --keys-timing / --keys flags."""
    spec = args.keys_timing
    if spec == "derive":
        if args.keys is None:
            raise _fail("--keys-timing derive needs --keys <schedule file>")
        sched = _load_schedule(args.keys)
        return derive_window_starts(sched, args.max_seq), sched.key_len, sched
    path = Path(spec)
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise _fail(f"cannot read '{spec}': {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise _fail(f"{spec}: bad JSON: {e}") from e
    if isinstance(doc, dict) and "key_table" in doc:
        sched = _load_schedule(spec)
        return derive_window_starts(sched, args.max_seq), sched.key_len, sched
    if isinstance(doc, dict) and "starts" in doc:
        starts = doc["starts"]
        c = doc.get("c", key_len_hint)
        if c is None:
            raise _fail(f"{spec}: timing file needs a 'c' entry (patterns per window)")
        return tuple(int(s) for s in starts), int(c), None
    raise _fail(f"{spec}: expected a key schedule or an object with 'starts'")


def _cmd_attack(args) -> int:
    enc = _load_bench(args.enc)
    orig = _load_bench(args.oracle)
    starts, key_len, _sched = _load_timing(args, None)
    oracle = SequenceOracle(orig)
    try:
        result = recover_key_sequences(
            enc,
            oracle,
            starts,
            key_len,
            args.max_seq,
            conflict_budget=args.budget,
            seed=args.seed,
        )
    except ValueError as e:
        raise _fail(f"attack failed: {e}") from e
    sys.stdout.write(result.report())
    if result.status == STATUS_BUDGET:
        print("conflict budget exhausted; attack truncated", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def _cmd_model(args) -> int:
    if args.model == "brute-force":
        effort = brute_force_effort(args.i, args.c, args.n)
        bits = effort.bit_length() - 1
        print(f"expected tries: 2^{bits} = {sci(effort)}")
        return EXIT_OK
    if args.sweep:
        print("t_a n overhead")
        for t_a, n, frac in cycle_delay_sweep():
            print(f"{t_a} {n} {float(frac) * 100:.6g}%")
        return EXIT_OK
    if args.ta is None or args.n is None:
        print("relock model cycle-delay: error: --ta and --n are required without --sweep", file=sys.stderr)
        return EXIT_USAGE
    frac = cycle_delay_overhead(args.ta, args.n)
    print(f"t_a={args.ta} n={args.n}: overhead {float(frac) * 100:.6g}%")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage problems exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relock", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stats", help="print circuit inventory", description="Print input/output/DFF/gate counts of a .bench netlist.")
    sp.add_argument("bench")
    sp.set_defaults(func=_cmd_stats)

    sp = sub.add_parser("encrypt", help="lock a netlist", description="Insert the authentication state machine and corruption network into a netlist.")
    sp.add_argument("bench")
    sp.add_argument("--config", help="JSON encryption parameters (defaults used when omitted)")
    sp.add_argument("--out", required=True, help="locked .bench output path")
    sp.add_argument("--keys", required=True, help="key schedule JSON output path")
    sp.set_defaults(func=_cmd_encrypt)

    sp = sub.add_parser("simulate", help="run a netlist and dump its trace", description="Cycle-accurate simulation from reset; with --keys/--case the stimulus follows the chosen access level.")
    sp.add_argument("bench")
    sp.add_argument("--keys", help="key schedule JSON (with --case)")
    sp.add_argument("--case", type=int, choices=(1, 2, 3), help="1 trusted, 2 no keys, 3 single authentication")
    sp.add_argument("--cycles", type=int, default=100)
    sp.add_argument("--seed", type=int, default=DEFAULT_CLI_SEED)
    sp.add_argument("--vcd", help="also dump a VCD waveform to this path")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("eval-hd", help="measure output corruption", description="Mean output Hamming distance between locked and original designs per access case.")
    sp.add_argument("orig")
    sp.add_argument("enc")
    sp.add_argument("--keys", required=True)
    sp.add_argument("--cases", default="1,2,3", help="comma list from {1,2,3}")
    sp.add_argument("--vectors", type=int, default=1000)
    sp.add_argument("--cycles", type=int, default=500)
    sp.add_argument("--seed", type=int, default=DEFAULT_CLI_SEED)
    sp.add_argument("--csv", help="write per-case rows to this CSV path")
    sp.set_defaults(func=_cmd_eval_hd)

    sp = sub.add_parser("attack", help="recover key sequences", description="Oracle-guided SAT recovery of the first windows' key sequences.")
    sp.add_argument("enc")
    sp.add_argument("--oracle", required=True, help="unlocked .bench the oracle runs")
    sp.add_argument(
        "--keys-timing",
        required=True,
        help="window timing: a schedule JSON, a JSON file with 'starts' (and 'c'), or 'derive' with --keys",
    )
    sp.add_argument("--keys", help="schedule JSON for --keys-timing derive")
    sp.add_argument("--max-seq", type=int, default=3, help="windows to recover")
    sp.add_argument("--budget", type=int, default=2_000_000, help="conflict budget per solver call")
    sp.add_argument("--seed", type=int, default=DEFAULT_CLI_SEED)
    sp.set_defaults(func=_cmd_attack)

    sp = sub.add_parser("model", help="closed-form security and delay models")
    msub = sp.add_subparsers(dest="model", required=True)
    mp = msub.add_parser("brute-force", help="expected blind-guess effort")
    mp.add_argument("--i", type=int, required=True, help="primary input count")
    mp.add_argument("--c", type=int, required=True, help="patterns per window")
    mp.add_argument("--n", type=int, required=True, help="PRNG register width")
    mp.set_defaults(func=_cmd_model)
    mp = msub.add_parser("cycle-delay", help="re-authentication time overhead")
    mp.add_argument("--ta", type=int, help="cycles spent per authentication")
    mp.add_argument("--n", type=int, help="PRNG register width")
    mp.add_argument("--sweep", action="store_true", help="print the full table instead")
    mp.set_defaults(func=_cmd_model)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except _InputError as e:
        print(f"relock: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"relock: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
