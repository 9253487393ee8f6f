import numpy as np
import pytest

from stegarmor.corpus import synthetic_corpus, synthetic_image
from stegarmor.jpeg import CoeffImage, compress, ijg_quant_table


@pytest.fixture(scope="session")
def small_covers():
    """Ten 64x64 covers at QF 75, one of each synthetic kind twice."""
    return synthetic_corpus(10, size=64, q_cover=75, seed=100)


@pytest.fixture(scope="session")
def covers_256():
    return synthetic_corpus(20, size=256, q_cover=75, seed=0)


@pytest.fixture(scope="session")
def cover_128():
    return compress(synthetic_image(1, 128, "texture"), 75)


def random_coeff_image(rng, max_blocks=4, qf=None) -> CoeffImage:
    bh, bw = rng.integers(1, max_blocks + 1, size=2)
    coeffs = rng.integers(-60, 61, size=(8 * bh, 8 * bw)).astype(np.int32)
    sparse = rng.random(coeffs.shape) < 0.6
    coeffs[sparse] = 0
    dc = coeffs[::8, ::8]
    dc[:] = rng.integers(-200, 201, size=dc.shape)
    width = int(8 * bw - rng.integers(0, 8))
    height = int(8 * bh - rng.integers(0, 8))
    table = ijg_quant_table(int(qf if qf is not None else rng.integers(1, 101)))
    return CoeffImage(width, height, coeffs, table)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
