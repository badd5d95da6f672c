import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from polardimer.model import MU_LICS, MorseParams, morse_pair, synthetic_lics

# criterion number -> (passed, detail), filled by the acceptance suite
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# LiCs-like Morse well used for grid and eigen oracles
MORSE = MorseParams(D_e=0.026768, a=0.3834, R_e=6.93)


@pytest.fixture(scope="session")
def morse_curve():
    return morse_pair(MORSE, MU_LICS)


@pytest.fixture(scope="session")
def scaled_curve():
    return synthetic_lics(16)


@pytest.fixture(scope="session")
def lics_curve():
    return synthetic_lics()


def random_orthonormal(rng, n, k):
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q
