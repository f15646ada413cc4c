"""Key recovery attack on a deliberately small locked design.

The toy target is s27 locked with a 3-bit PRNG and 2-cycle windows, small
enough that every candidate key sequence can be enumerated and checked
against the black-box oracle, so the attack's answers are provably the
only consistent ones.
"""

import itertools
import random

import pytest

from relock import (
    STATUS_BUDGET,
    STATUS_NO_KEY,
    STATUS_RECOVERED,
    EncryptConfig,
    SequenceOracle,
    derive_window_starts,
    encrypt,
    recover_key_sequences,
    simulate,
    workload_stimulus,
)
from relock.sim import authentication_schedule

TOY_CFG = EncryptConfig(
    lfsr_width=3,
    lfsr_taps=(3, 1),
    enc_out_width=3,
    key_len=2,
    sbj_bits=1,
    coverage=0.5,
    master_seed=24302,
)
N_WINDOWS = 3


@pytest.fixture(scope="module")
def toy(s27):
    enc = encrypt(s27, TOY_CFG)
    starts = derive_window_starts(enc.schedule, N_WINDOWS)
    wins = authentication_schedule(enc.schedule, starts[-1] + TOY_CFG.key_len)
    truth = tuple(enc.schedule.key_table[w.chain] for w in wins[:N_WINDOWS])
    return s27, enc, starts, truth


@pytest.fixture()
def run_toy(toy):
    nl, enc, starts, _ = toy

    def run(**kw):
        kw.setdefault("seed", 0)
        oracle = SequenceOracle(nl)
        res = recover_key_sequences(
            enc.netlist, oracle, starts, TOY_CFG.key_len, N_WINDOWS, **kw
        )
        return res, oracle

    return run


# -- soundness ---------------------------------------------------------------

def test_recovers_the_scheduled_keys(toy, run_toy):
    _, _, _, truth = toy
    res, _ = run_toy()
    assert res.status == STATUS_RECOVERED
    assert res.keys == truth
    assert all(w.status == STATUS_RECOVERED for w in res.windows)


def test_replay_verification_passes(run_toy):
    res, _ = run_toy(verify_vectors=1000)
    assert res.verified
    assert res.verify_comparisons >= 1000


def test_window_timing_echoed_in_result(toy, run_toy):
    _, _, starts, _ = toy
    res, _ = run_toy()
    assert tuple(w.start for w in res.windows) == starts[:N_WINDOWS]
    gaps = tuple(b - (a + TOY_CFG.key_len) for a, b in zip(starts, starts[1:]))
    assert tuple(w.gap for w in res.windows) == gaps


def test_exhaustive_candidate_sweep_leaves_only_the_truth(toy):
    """Brute force every key pair per window; the survivor set must be
    exactly the schedule's answer, so recovery is unique, not just valid."""
    nl, enc, starts, truth = toy
    c = TOY_CFG.key_len
    n_in = len(nl.inputs)

    def window_of(t):
        for q, s in enumerate(starts[:N_WINDOWS]):
            if s <= t < s + c:
                return q, t - s
        return None

    rng = random.Random(99)
    for q in range(N_WINDOWS):
        horizon = starts[q + 1]
        trials = [[rng.randrange(1 << n_in) for _ in range(horizon)] for _ in range(6)]

        def consistent(cand, wl):
            # earlier windows get the true keys so the device reaches window q
            stream, gaps = [], []
            for t in range(horizon):
                w = window_of(t)
                if w is None:
                    gaps.append(t)
                    stream.append(wl[t])
                elif w[0] < q:
                    stream.append(truth[w[0]][w[1]])
                else:
                    stream.append(cand[w[1]])
            dev = simulate(enc.netlist, workload_stimulus(stream))
            gold = simulate(nl, workload_stimulus([wl[t] for t in gaps]))
            return all(dev.outputs[t] == gold.outputs[r] for r, t in enumerate(gaps))

        alive = [
            cand
            for cand in itertools.product(range(1 << n_in), repeat=c)
            if all(consistent(cand, wl) for wl in trials)
        ]
        assert alive == [truth[q]], f"window {q}: {alive}"


def test_shifted_window_starts_admit_no_consistent_key(toy):
    """Scanning with the wrong phase must fail loudly, not hallucinate keys."""
    nl, enc, starts, _ = toy
    for delta in (1, 2):
        oracle = SequenceOracle(nl)
        res = recover_key_sequences(
            enc.netlist,
            oracle,
            [s + delta for s in starts],
            TOY_CFG.key_len,
            N_WINDOWS,
            seed=0,
        )
        assert res.status == STATUS_NO_KEY
        assert len(res.keys) < N_WINDOWS
        assert not res.verified


# -- effort accounting ---------------------------------------------------------

def test_conflicts_grow_with_window_depth(run_toy):
    res, _ = run_toy()
    conflicts = [w.conflicts for w in res.windows]
    assert all(a < b for a, b in zip(conflicts, conflicts[1:])), conflicts


def test_effort_counters_are_deterministic(run_toy):
    a, _ = run_toy()
    b, _ = run_toy()
    key = lambda r: [
        (w.iterations, w.solver_calls, w.conflicts, w.decisions, w.propagations)
        for w in r.windows
    ]
    assert key(a) == key(b)
    assert a.keys == b.keys


def test_report_text_omits_wall_time(run_toy):
    a, _ = run_toy()
    b, _ = run_toy()
    assert a.report() == b.report()
    assert "q=2" in a.report()


def test_oracle_queries_are_counted(run_toy):
    res, oracle = run_toy()
    assert oracle.queries > 0
    assert res.oracle_queries == oracle.queries


def test_budget_exhaustion_is_reported(run_toy):
    res, _ = run_toy(conflict_budget=10)
    assert res.status == STATUS_BUDGET
    assert len(res.keys) < N_WINDOWS
    assert res.windows[-1].status == STATUS_BUDGET


# -- oracle and input validation ---------------------------------------------------

def test_oracle_rejects_oversized_vectors(s27):
    oracle = SequenceOracle(s27)
    with pytest.raises(ValueError, match="does not fit"):
        oracle.query([1 << len(s27.inputs)])


def test_oracle_empty_query(s27):
    oracle = SequenceOracle(s27)
    assert oracle.query([]) == ()
    assert oracle.queries == 1


def test_oracle_width_mismatch_raises(toy, s298):
    _, enc, starts, _ = toy
    with pytest.raises(ValueError, match="width mismatch"):
        recover_key_sequences(
            enc.netlist, SequenceOracle(s298), starts, TOY_CFG.key_len, N_WINDOWS
        )


def test_timing_must_cover_one_extra_window(toy):
    nl, enc, starts, _ = toy
    with pytest.raises(ValueError):
        recover_key_sequences(
            enc.netlist, SequenceOracle(nl), starts[:N_WINDOWS], TOY_CFG.key_len, N_WINDOWS
        )


@pytest.mark.parametrize("kw", [{"key_len": 0}, {"max_seq": 0}])
def test_degenerate_arguments_raise(toy, kw):
    nl, enc, starts, _ = toy
    args = {"key_len": TOY_CFG.key_len, "max_seq": N_WINDOWS}
    args.update(kw)
    with pytest.raises(ValueError):
        recover_key_sequences(
            enc.netlist, SequenceOracle(nl), starts, args["key_len"], args["max_seq"]
        )


def test_derive_window_starts_matches_controller_replay(toy):
    _, enc, starts, _ = toy
    wins = authentication_schedule(enc.schedule, starts[-1] + 1)
    assert starts == tuple(w.start for w in wins[: N_WINDOWS + 1])
    assert all(a < b for a, b in zip(starts, starts[1:]))
