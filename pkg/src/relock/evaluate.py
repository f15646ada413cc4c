"""Output-corruption and cost analyses for encrypted designs.

``run_case`` measures output Hamming distance between an encrypted design and
the original under three access levels:

* TRUSTED: the key manager authenticates on schedule and the workload runs in
  functional mode only.  The distance is exactly zero by construction.
* UNKEYED: no key is ever applied; the workload streams from reset and the
  design stays encrypted.
* SINGLE_AUTH: only the first chain is applied, then pure workload.  The
  first functional stretch is clean, after which the design back-jumps and
  never recovers, so the distance lands strictly below UNKEYED.

Comparison is index for index against the uninterrupted original: cycle
``t`` of the encrypted run carries workload vector ``j`` whenever ``t`` is
the ``j``-th non-authentication cycle, and is compared to cycle ``j`` of the
original.  All workloads run lane parallel (one bit per workload in a big
int), so a hundred independent runs cost one pass.

The closed-form cost helpers are exact: ``brute_force_effort`` returns a big
int and ``cycle_delay_overhead`` a Fraction.
"""

from __future__ import annotations

import csv
import enum
import random
from dataclasses import dataclass
from fractions import Fraction

from .bench import Netlist
from .encrypt import EncryptedDesign
from .sim import authentication_schedule, workload_cycle_mask


class Case(enum.IntEnum):
    TRUSTED = 1
    UNKEYED = 2
    SINGLE_AUTH = 3


@dataclass(frozen=True)
class HdReport:
    circuit: str
    case: Case
    n_vectors: int
    cycles: int
    mask_size: int
    mean_hd: float
    per_run: tuple[float, ...]
    seed: int
    coverage: float
    config: dict

    def as_dict(self) -> dict:
        return {
            "circuit": self.circuit,
            "case": int(self.case),
            "n_vectors": self.n_vectors,
            "cycles": self.cycles,
            "mask_size": self.mask_size,
            "mean_hd": self.mean_hd,
            "per_run": list(self.per_run),
            "seed": self.seed,
            "coverage": self.coverage,
            "config": self.config,
        }


def _packed_outputs(nl: Netlist, vectors: list[list[int]], width: int) -> list[tuple[int, ...]]:
    """Run ``nl`` from reset over per-cycle per-input lane words."""
    cc = nl.compiled
    state = (0,) * len(nl.dffs)
    outs: list[tuple[int, ...]] = []
    for words in vectors:
        o, state = cc.eval(words, state, width=width)
        outs.append(o)
    return outs


def _popcount(x: int) -> int:
    return bin(x).count("1")


def run_case(
    orig: Netlist,
    enc: EncryptedDesign,
    case: Case | int,
    n_vectors: int = 100,
    cycles: int = 500,
    seed: int = 0,
) -> HdReport:
    """Mean output Hamming distance for one access level.

    Draws ``n_vectors`` independent random workloads, runs them lane parallel
    through both the encrypted and the original design, and averages the
    per-workload Hamming distance over the workload-cycle mask.  ``enc`` is
    an EncryptedDesign or a plain ``(netlist, schedule)`` pair, e.g. when
    both were loaded from files.
    """
    case = Case(case)
    if isinstance(enc, EncryptedDesign):
        enc_nl, sched, coverage = enc.netlist, enc.schedule, enc.report.achieved_coverage
    else:
        enc_nl, sched = enc
        coverage = sched.config.coverage
    if orig.name != sched.circuit:
        raise ValueError(f"schedule is for '{sched.circuit}', netlist is '{orig.name}'")
    if tuple(orig.inputs) != tuple(enc_nl.inputs):
        raise ValueError("original and encrypted netlists disagree on inputs")
    if tuple(orig.outputs) != tuple(enc_nl.outputs):
        raise ValueError("original and encrypted netlists disagree on outputs")
    if n_vectors < 1:
        raise ValueError("n_vectors must be >= 1")
    n_in = len(orig.inputs)
    c = sched.key_len
    mask = workload_cycle_mask(sched, cycles)
    if not mask:
        raise ValueError(f"no workload cycles in a {cycles}-cycle horizon")
    n_workload = len(mask)

    rng = random.Random(f"{seed}/hd/{int(case)}")
    # wl[j][b]: lane word for workload vector j, input bit b
    wl = [[rng.getrandbits(n_vectors) for _b in range(n_in)] for _j in range(cycles)]

    # the golden run always consumes exactly the workload history the device
    # saw, so the distance isolates corruption from stream misalignment;
    # pairs maps each sampled device cycle to its golden cycle
    full = (1 << n_vectors) - 1
    if case is Case.TRUSTED:
        windows = authentication_schedule(sched, cycles)
        key_at = {}
        for w in windows:
            for k in range(c):
                key_at[w.start + k] = sched.key_table[w.chain][k]
        enc_in: list[list[int]] = []
        j = 0
        for t in range(cycles):
            if t in key_at:
                kw = key_at[t]
                enc_in.append([full if (kw >> b) & 1 else 0 for b in range(n_in)])
            else:
                enc_in.append(wl[j])
                j += 1
        gold_in = [wl[j] for j in range(n_workload)]
        pairs = list(enumerate(mask))  # golden rank j <-> device cycle t
    elif case is Case.UNKEYED:
        enc_in = [wl[t] for t in range(cycles)]
        gold_in = enc_in
        pairs = [(t, t) for t in mask]
    else:  # SINGLE_AUTH: first chain, then pure workload
        first = sched.key_table[0]
        enc_in = [[full if (first[k] >> b) & 1 else 0 for b in range(n_in)] for k in range(c)]
        enc_in += [wl[t] for t in range(cycles - c)]
        gold_in = [wl[t] for t in range(cycles - c)]
        pairs = [(t - c, t) for t in mask]  # window 0 covers [0, c)

    enc_out = _packed_outputs(enc_nl, enc_in, n_vectors)
    gold_out = _packed_outputs(orig, gold_in, n_vectors)

    width = len(orig.outputs)
    counts = [0] * n_vectors
    for j, t in pairs:
        eo = enc_out[t]
        go = gold_out[j]
        for o in range(width):
            d = eo[o] ^ go[o]
            while d:
                counts[(d & -d).bit_length() - 1] += 1
                d &= d - 1
    denom = width * n_workload
    per_run = tuple(cnt / denom for cnt in counts)
    mean_hd = sum(counts) / (n_vectors * denom)
    return HdReport(
        circuit=orig.name,
        case=case,
        n_vectors=n_vectors,
        cycles=cycles,
        mask_size=n_workload,
        mean_hd=mean_hd,
        per_run=per_run,
        seed=seed,
        coverage=coverage,
        config=sched.config.to_dict(),
    )


def write_hd_csv(reports, fh) -> None:
    """Flat CSV for sweep plots: one row per (circuit, coverage, case) report."""
    w = csv.writer(fh)
    w.writerow(["circuit", "coverage", "case", "n_vectors", "cycles", "mask_size", "mean_hd"])
    for r in reports:
        w.writerow([r.circuit, f"{r.coverage:.4f}", int(r.case), r.n_vectors, r.cycles, r.mask_size, f"{r.mean_hd:.6f}"])


def brute_force_effort(n_inputs: int, key_len: int, lfsr_width: int) -> int:
    """Expected patterns an attacker must try to hit one full chain blind.

    The chain is ``key_len`` patterns of ``n_inputs`` bits, and the chain
    index depends on the PRNG state, one of ``2**lfsr_width`` possibilities:
    ``2**lfsr_width * 2**(n_inputs * key_len - 1)`` tries on average.  Exact
    big-int arithmetic; this overflows any float for realistic sizes.
    """
    if n_inputs < 1:
        raise ValueError("n_inputs must be >= 1")
    if key_len < 1:
        raise ValueError("key_len must be >= 1")
    if lfsr_width < 0:
        raise ValueError("lfsr_width must be >= 0")
    return 1 << (lfsr_width + n_inputs * key_len - 1)


def cycle_delay_overhead(auth_cycles: int, lfsr_width: int) -> Fraction:
    """Re-authentication time cost relative to functional time.

    One authentication costs ``auth_cycles``; functional stretches average
    ``2**(lfsr_width - 1)`` cycles, so the overhead is their exact ratio.
    """
    if auth_cycles < 0:
        raise ValueError("auth_cycles must be >= 0")
    if lfsr_width < 1:
        raise ValueError("lfsr_width must be >= 1")
    return Fraction(auth_cycles, 1 << (lfsr_width - 1))


def cycle_delay_sweep(auth_cycles=(8, 16, 64, 128), widths=range(5, 16)):
    """Overhead table over authentication costs and PRNG widths."""
    return [
        (t_a, n, cycle_delay_overhead(t_a, n))
        for t_a in auth_cycles
        for n in widths
    ]


@dataclass(frozen=True)
class OverheadReport:
    circuit: str
    orig_gates: int
    enc_gates: int
    orig_dffs: int
    enc_dffs: int
    n_sites: int
    requested_coverage: float
    achieved_coverage: float

    @property
    def gate_overhead(self) -> float:
        return (self.enc_gates - self.orig_gates) / self.orig_gates

    @property
    def dff_overhead(self) -> float:
        return (self.enc_dffs - self.orig_dffs) / self.orig_dffs if self.orig_dffs else float("inf")

    def as_dict(self) -> dict:
        return {
            "circuit": self.circuit,
            "orig_gates": self.orig_gates,
            "enc_gates": self.enc_gates,
            "gate_overhead": self.gate_overhead,
            "orig_dffs": self.orig_dffs,
            "enc_dffs": self.enc_dffs,
            "dff_overhead": self.dff_overhead if self.orig_dffs else None,
            "n_sites": self.n_sites,
            "requested_coverage": self.requested_coverage,
            "achieved_coverage": self.achieved_coverage,
        }


def overhead_report(orig: Netlist, enc: EncryptedDesign) -> OverheadReport:
    """Structural cost of encryption: gate and flip-flop growth."""
    return OverheadReport(
        circuit=orig.name,
        orig_gates=len(orig.gates),
        enc_gates=len(enc.netlist.gates),
        orig_dffs=len(orig.dffs),
        enc_dffs=len(enc.netlist.dffs),
        n_sites=len(enc.report.sites),
        requested_coverage=enc.report.requested_coverage,
        achieved_coverage=enc.report.achieved_coverage,
    )
