import numpy as np
import pytest

from hmch.spectral import PeriodicField


def band_limited(rng, N, kmax, decay=1.0, mean=None):
    """Random real field with modes |k| <= kmax and amplitudes ~ k^-decay."""
    k = np.arange(1, kmax + 1)
    amp = k.astype(float) ** (-decay)
    c = (rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)) * amp
    uh = np.zeros(N // 2 + 1, dtype=complex)
    uh[1:kmax + 1] = c * N / 2
    uh[0] = (rng.standard_normal() if mean is None else mean) * N
    return PeriodicField(np.fft.irfft(uh, n=N))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
