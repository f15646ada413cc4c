"""How wrong do the outputs get for each kind of user?

Locks s27 at several coverages and measures the mean output Hamming
distance against the original design for three access levels:

  case 1: trusted user, replays every scheduled key sequence
  case 2: no keys at all
  case 3: a single stolen authentication, then nothing

Case 1 must be exactly zero.  Cases 2 and 3 are averaged over several
independently seeded locks because each instance parks the controller in
a different corruption-table row; the single authentication shows up as a
reliably smaller average, not a per-instance guarantee.

Run from the repository root:

    python demos/02_measure_corruption.py
"""

from relock import Case, EncryptConfig, encrypt, load_bench, run_case

SEEDS = 8
CYCLES = 80  # covers three jumps back into encrypted mode
VECTORS = 100


def cell(orig, coverage: float, case: Case) -> float:
    total = 0.0
    for k in range(SEEDS):
        cfg = EncryptConfig(coverage=coverage, master_seed=1000 + k)
        enc = encrypt(orig, cfg)
        total += run_case(orig, enc, case, n_vectors=VECTORS, cycles=CYCLES,
                          seed=1000 + k).mean_hd
    return total / SEEDS


def main() -> None:
    orig = load_bench("benchmarks/s27.bench")
    print(f"mean output Hamming distance on {orig.name}, "
          f"{VECTORS} workloads x {CYCLES} cycles, {SEEDS} locks per cell\n")
    print(f"{'coverage':>8}  {'trusted':>8}  {'no keys':>8}  {'one auth':>8}")
    for coverage in (0.10, 0.20, 0.40):
        row = [cell(orig, coverage, case)
               for case in (Case.TRUSTED, Case.UNKEYED, Case.SINGLE_AUTH)]
        print(f"{coverage:>8.0%}  {row[0]:>8.4f}  {row[1]:>8.4f}  {row[2]:>8.4f}")
    print("\ntrusted use is perfectly clean; everyone else computes garbage,")
    print("and a stolen session only helps until the design jumps back")


if __name__ == "__main__":
    main()
