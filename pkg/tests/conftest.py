import numpy as np
import pytest

from lowmach.spectral import SpectralField, StateU, TorusGrid, hermitian_part


def random_coeffs(grid, rng, ncomp=1, decay=0.5, band=True):
    shape = (ncomp,) + grid.shape
    c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.exp(-decay * np.sqrt(grid.ksq))
    if band:
        c = np.where(grid.dealias_mask, c, 0.0)
    return hermitian_part(grid, c)


def random_field(grid, rng, **kw):
    return SpectralField(grid, random_coeffs(grid, rng, 1, **kw)[0])


def random_state(grid, rng, eps=1.0, **kw):
    return StateU.from_stack(grid, random_coeffs(grid, rng, 1 + grid.d, **kw), eps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid2():
    return TorusGrid(2, 32)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            lines += [text for name, text in getattr(rep, "user_properties", ()) if name == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for text in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(text)
