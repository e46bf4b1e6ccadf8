import numpy as np
import pytest

from recolordetect.imagecore import RgbImage


def random_image(rng, h=16, w=16) -> RgbImage:
    return RgbImage(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))


def smooth_image(rng, h=32, w=32) -> RgbImage:
    """Photo-like raster: low-frequency color field plus mild noise."""
    yy, xx = np.mgrid[0:h, 0:w]
    chans = []
    for _ in range(3):
        fx, fy, ph = rng.uniform(0.02, 0.15), rng.uniform(0.02, 0.15), rng.uniform(0, 6.3)
        base = 128 + 90 * np.sin(fx * xx + ph) * np.cos(fy * yy)
        chans.append(base + rng.normal(0, 4, size=(h, w)))
    return RgbImage(np.clip(np.rint(np.stack(chans, -1)), 0, 255).astype(np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Criterion number -> one-line verdict, filled in by test_acceptance.py.
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num])
