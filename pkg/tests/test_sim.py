"""Sequential simulation, stimulus construction, and trace utilities."""

import io
import random

import pytest

from relock import (
    EncryptConfig,
    Stimulus,
    Trace,
    authentication_schedule,
    encrypt,
    hamming_distance,
    new_lfsr,
    parse_bench,
    sequence,
    simulate,
    trusted_user_stimulus,
    workload_cycle_mask,
    workload_stimulus,
    write_columnar,
    write_vcd,
)

TOGGLE_TEXT = "OUTPUT(y)\nq = DFF(y)\ny = NOT(q)"

TOY_CFG = EncryptConfig(
    lfsr_width=3,
    lfsr_taps=(3, 2),
    enc_out_width=2,
    key_len=2,
    sbj_bits=1,
    coverage=0.5,
    master_seed=24302,
)


@pytest.fixture(scope="module")
def toy(s27):
    return encrypt(s27, TOY_CFG)


# -- stimulus type ------------------------------------------------------------

def test_stimulus_lengths_must_match():
    with pytest.raises(ValueError, match="equal length"):
        Stimulus((1, 2), (None,))


def test_stimulus_workload_indices_consecutive():
    Stimulus((1, 2, 3), (None, 0, 1))
    with pytest.raises(ValueError, match="consecutive"):
        Stimulus((1, 2, 3), (None, 1, 2))
    with pytest.raises(ValueError, match="consecutive"):
        Stimulus((1, 2, 3), (0, 0, 1))


def test_workload_stimulus_tags_every_cycle():
    stim = workload_stimulus([5, 6, 7])
    assert stim.tags == (0, 1, 2)
    assert stim.n_workload == 3


# -- simulate ------------------------------------------------------------------

def test_toggle_register_alternates():
    nl = parse_bench(TOGGLE_TEXT, name="toggle")
    tr = simulate(nl, Stimulus((0,) * 6, tuple(range(6))))
    assert tr.outputs == (1, 0, 1, 0, 1, 0)
    assert tr.states == (0, 1, 0, 1, 0, 1)


def test_simulate_starts_from_all_zero_state(s27):
    tr = simulate(s27, workload_stimulus([0]))
    assert tr.states[0] == 0


def test_simulate_is_deterministic(s27):
    rng = random.Random(1)
    stim = workload_stimulus([rng.getrandbits(4) for _ in range(40)])
    assert simulate(s27, stim) == simulate(s27, stim)


def test_simulate_agrees_with_manual_stepping(s27):
    # fold eval_comb by hand and compare against the packed trace
    from relock import eval_comb

    rng = random.Random(17)
    vectors = [rng.getrandbits(4) for _ in range(30)]
    tr = simulate(s27, workload_stimulus(vectors))
    state = [0, 0, 0]
    for t, word in enumerate(vectors):
        bits = [(word >> b) & 1 for b in range(4)]
        outs, nxt = eval_comb(s27, bits, state)
        assert tr.outputs[t] == outs[0]
        assert tr.states[t] == sum(s << k for k, s in enumerate(state))
        state = list(nxt)


def test_simulate_rejects_short_stimulus(s27):
    stim = workload_stimulus([0, 1])
    with pytest.raises(ValueError, match="stimulus has 2"):
        simulate(s27, stim, cycles=3)


def test_simulate_rejects_wide_vectors(s27):
    with pytest.raises(ValueError, match="does not fit"):
        simulate(s27, workload_stimulus([1 << 4]))


# -- scheduled authentication ----------------------------------------------------

def test_schedule_first_window_starts_at_reset(toy):
    windows = authentication_schedule(toy.schedule, 50)
    assert windows[0].start == 0
    assert windows[0].chain == 0


def test_schedule_t_func_replays_the_prng(toy):
    sched = toy.schedule
    windows = authentication_schedule(sched, 60)
    states = sequence(new_lfsr(sched.lfsr_width, sched.lfsr_taps, 0), 80)
    c = sched.key_len
    for w in windows:
        assert w.t_func == max(states[w.start + c], 1)


def test_schedule_windows_tile_the_horizon(toy):
    sched = toy.schedule
    cycles = 90
    windows = authentication_schedule(sched, cycles)
    t = 0
    for w in windows:
        assert w.start == t
        t = w.start + sched.key_len + w.t_func
    assert t >= cycles


def test_workload_mask_is_the_window_complement(toy):
    sched = toy.schedule
    cycles = 90
    mask = set(workload_cycle_mask(sched, cycles))
    in_window = set()
    for w in authentication_schedule(sched, cycles):
        in_window.update(range(w.start, w.start + sched.key_len))
    assert mask == set(range(cycles)) - in_window


def test_trusted_stimulus_opens_with_first_chain(toy):
    sched = toy.schedule
    stim = trusted_user_stimulus(sched, [0] * 100, 100)
    c = sched.key_len
    assert stim.vectors[:c] == sched.key_table[0]
    assert stim.tags[:c] == (None,) * c


def test_trusted_stimulus_rejects_short_workload(toy):
    with pytest.raises(ValueError, match="workload has"):
        trusted_user_stimulus(toy.schedule, [0] * 3, 60)


def test_trusted_stimulus_rejects_wide_workload(toy):
    with pytest.raises(ValueError, match="does not fit"):
        trusted_user_stimulus(toy.schedule, [1 << 8] * 60, 60)


def test_first_backjump_cycle_matches_offline_replay(s27, toy):
    """Corruption returns exactly at the replayed back-jump cycle.

    The offline schedule predicts the design leaves functional mode at
    start + c + t_func of window 0.  From that cycle on, the trusted
    stimulus plays window-1 patterns, so golden equality must hold for
    every workload cycle before it and fail somewhere after it if the
    window-1 patterns are replaced by workload.
    """
    sched = toy.schedule
    rng = random.Random(5)
    cycles = 40
    workload = [rng.getrandbits(4) for _ in range(cycles)]
    stim = trusted_user_stimulus(sched, workload, cycles)
    w0 = authentication_schedule(sched, cycles)[0]
    jump = w0.start + sched.key_len + w0.t_func
    # workload cycles strictly before the jump behave golden even when all
    # later authentications are spoiled
    spoiled = tuple(
        v ^ 1 if (tag is None and t >= jump) else v
        for t, (v, tag) in enumerate(zip(stim.vectors, stim.tags))
    )
    tr = simulate(toy.netlist, Stimulus(spoiled, stim.tags))
    golden = simulate(s27, workload_stimulus(workload))
    for t, tag in enumerate(stim.tags):
        if tag is None or t >= jump:
            continue
        assert tr.outputs[t] == golden.outputs[tag]


def test_restore_resumes_the_pre_jump_state(s27, toy):
    """Original flip-flops continue from where the last functional span ended."""
    sched = toy.schedule
    rng = random.Random(6)
    cycles = 80
    workload = [rng.getrandbits(4) for _ in range(cycles)]
    stim = trusted_user_stimulus(sched, workload, cycles)
    tr = simulate(toy.netlist, stim)
    golden = simulate(s27, workload_stimulus(workload))
    # the encrypted design's first DFFs are the original ones, same names
    orig_qs = [q for q, _ in s27.dffs]
    for t, tag in enumerate(stim.tags):
        if tag is None:
            continue
        got = tuple(tr.state_bit(t, q) for q in orig_qs)
        want = tuple(golden.state_bit(tag, q) for q in orig_qs)
        assert got == want


# -- hamming distance -------------------------------------------------------------

def _mini_trace(outputs, width=2):
    n = len(outputs)
    return Trace(
        input_names=("a",),
        output_names=tuple(f"y{k}" for k in range(width)),
        state_names=(),
        inputs=(0,) * n,
        outputs=tuple(outputs),
        states=(0,) * n,
    )


def test_hd_identical_traces():
    a = _mini_trace([1, 2, 3])
    assert hamming_distance(a, a, range(3)) == 0.0


def test_hd_complement_traces():
    a = _mini_trace([0b00, 0b01, 0b10])
    b = _mini_trace([0b11, 0b10, 0b01])
    assert hamming_distance(a, b, range(3)) == 1.0


def test_hd_half():
    a = _mini_trace([0b00, 0b00])
    b = _mini_trace([0b01, 0b10])
    assert hamming_distance(a, b, [0, 1]) == 0.5


def test_hd_mask_selects_cycles():
    a = _mini_trace([0b00, 0b11, 0b00])
    b = _mini_trace([0b00, 0b00, 0b00])
    assert hamming_distance(a, b, [0, 2]) == 0.0
    assert hamming_distance(a, b, [1]) == 1.0


def test_hd_errors():
    a = _mini_trace([0, 1])
    b = _mini_trace([0, 1], width=3)
    with pytest.raises(ValueError, match="different output"):
        hamming_distance(a, b, [0])
    with pytest.raises(ValueError, match="empty"):
        hamming_distance(a, a, [])
    with pytest.raises(ValueError, match="out of range"):
        hamming_distance(a, a, [5])


# -- exports -----------------------------------------------------------------------

def test_columnar_export(s27):
    tr = simulate(s27, workload_stimulus([3, 8, 14]))
    buf = io.StringIO()
    write_columnar(tr, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# cycle")
    assert len(lines) == 4
    assert lines[1].split() == ["0", "3", "1", "0"]


def test_vcd_export(s27):
    tr = simulate(s27, workload_stimulus([3, 8, 14]))
    buf = io.StringIO()
    write_vcd(tr, buf, design="s27")
    text = buf.getvalue()
    assert "$scope module s27 $end" in text
    assert "$enddefinitions" in text
    assert text.count("#") >= 3  # one timestamp per cycle
