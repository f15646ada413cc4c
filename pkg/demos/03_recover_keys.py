"""Break a deliberately tiny lock with the bundled SAT attack.

Locks s27 with a 3-bit PRNG and 2-cycle windows, hands the attacker the
locked netlist, black-box access to an unlocked chip, and the window
timing, then recovers the first three key sequences and checks them
against the secret schedule.

The effort counters are the interesting part: every extra window deepens
the unrolled formula, so the solver works strictly harder for each key
even at this scale.

Run from the repository root:

    python demos/03_recover_keys.py
"""

from relock import (
    EncryptConfig,
    SequenceOracle,
    derive_window_starts,
    encrypt,
    load_bench,
    recover_key_sequences,
)
from relock.sim import authentication_schedule

TOY = EncryptConfig(
    lfsr_width=3,
    lfsr_taps=(3, 1),
    enc_out_width=3,
    key_len=2,
    sbj_bits=1,
    coverage=0.5,
    master_seed=24302,
)


def main() -> None:
    orig = load_bench("benchmarks/s27.bench")
    design = encrypt(orig, TOY)

    # the attacker's knowledge: locked netlist, oracle, window timing
    oracle = SequenceOracle(orig)
    starts = derive_window_starts(design.schedule, 3)
    print(f"attacking {orig.name}: windows of {TOY.key_len} cycles starting at "
          f"{', '.join(str(s) for s in starts[:3])}\n")

    result = recover_key_sequences(
        design.netlist, oracle, starts, TOY.key_len, 3, seed=0
    )
    print(result.report())

    wins = authentication_schedule(design.schedule, starts[-1] + TOY.key_len)
    truth = tuple(design.schedule.key_table[w.chain] for w in wins[:3])
    for q, (got, want) in enumerate(zip(result.keys, truth)):
        ok = "ok" if got == want else "WRONG"
        print(f"window {q}: recovered {[hex(p) for p in got]} "
              f"schedule says {[hex(p) for p in want]} -> {ok}")
    assert result.keys == truth
    print("\nall three sequences match the secret schedule")


if __name__ == "__main__":
    main()
