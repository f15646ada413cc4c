"""Shared fixtures: benchmark paths and small canned netlists."""

from pathlib import Path

import pytest

from relock import load_bench

BENCH_DIR = Path(__file__).resolve().parent.parent / "benchmarks"

# published input/output/dff/gate counts for the seven stock circuits
BENCH_STATS = {
    "s27": (4, 1, 3, 10),
    "s298": (3, 6, 14, 119),
    "s1238": (14, 14, 18, 508),
    "s9234": (36, 39, 211, 5597),
    "s15850": (77, 150, 534, 9772),
    "s35932": (35, 320, 1728, 16065),
    "s38584": (38, 304, 1426, 19253),
}


def bench_path(name):
    return BENCH_DIR / f"{name}.bench"


@pytest.fixture(scope="session")
def s27():
    return load_bench(bench_path("s27"))


@pytest.fixture(scope="session")
def s298():
    return load_bench(bench_path("s298"))


@pytest.fixture(scope="session")
def s1238():
    return load_bench(bench_path("s1238"))
