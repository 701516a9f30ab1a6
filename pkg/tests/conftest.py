import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zacf import MultiChannelSignal, make_problem

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_signal(rng, K, N, M=1):
    return MultiChannelSignal(rng.normal(size=(K, N, M)))


def random_problem(rng, *, K=1, N=4, M=1, L=2, pad=None, fft_size=None, labels=None, delta=0.0, C=1.0):
    training = [random_signal(rng, K, N, M) for _ in range(L)]
    return make_problem(training, labels, fft_size=fft_size, pad=pad, delta=delta, C=C)


def small_instance(rng, *, min_L=1, max_L=4, cap=64):
    """A random problem with ``K * N_F * M_F <= cap`` and a non-empty tail."""
    while True:
        K = int(rng.integers(1, 3))
        two_d = rng.random() < 0.5
        N = int(rng.integers(2, 5))
        M = int(rng.integers(2, 4)) if two_d else 1
        NF = N + int(rng.integers(1, N))
        MF = M + (int(rng.integers(1, M)) if M > 1 else 0)
        if K * NF * MF <= cap:
            break
    lo = max(min_L, K)
    L = int(rng.integers(lo, max(lo, min(max_L, K * N * M)) + 1))
    training = [random_signal(rng, K, N, M) for _ in range(L)]
    return training, (NF, MF)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def report(number, name, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
