import os

import numpy as np
import pytest
from hypothesis import settings

from nlparab.exterior import heat_kernel_exterior, zero_exterior
from nlparab.geometry import Grid, SpaceTimeField
from nlparab.kernels import KernelSpec
from nlparab.oracles import fractional_heat_kernel
from nlparab.solver import SolveSpec, solve

settings.register_profile("suite", max_examples=50, deadline=None)
settings.register_profile("stress", max_examples=2000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "suite"))


@pytest.fixture(scope="session")
def frac_kernel():
    return KernelSpec.fractional_laplacian(1, 0.5)


@pytest.fixture(scope="session")
def unit_kernel():
    return KernelSpec.constant_multiple(1, 0.5)


@pytest.fixture(scope="session")
def ones_field():
    grid = Grid(1, 4.0, 129)
    times = np.linspace(0.0, 2.0, 65)
    return SpaceTimeField(grid=grid, times=times,
                          values=np.ones((65, grid.n_points)), order_s=0.5)


@pytest.fixture(scope="session")
def heat_field_pair(frac_kernel):
    """Sampled closed-form evolution on coarse and fine grids (exact global
    solution injected as initial plus exterior data)."""
    out = []
    for n, m in ((129, 33), (257, 65)):
        grid = Grid(1, 8.0, n)
        times = np.linspace(1.0, 2.0, m)
        vals = np.array([fractional_heat_kernel(1, 0.5, grid.axis_nodes, t)
                         for t in times])
        out.append(SpaceTimeField(grid=grid, times=times, values=vals,
                                  order_s=0.5))
    return tuple(out)


@pytest.fixture(scope="session")
def solved_bump(frac_kernel):
    """One genuine solver run reused by residual/verification tests."""
    grid = Grid(1, 4.0, 128)
    xs = grid.axis_nodes
    init = np.exp(-(xs / 0.8) ** 2) + 0.6 * np.exp(-((xs - 1.0) / 0.5) ** 2)
    spec = SolveSpec(kernel=frac_kernel, grid=grid, initial=init,
                     exterior=zero_exterior(), t_span=(0.0, 2.0),
                     dt=1.0 / 32.0)
    return spec, solve(spec)


@pytest.fixture(scope="session")
def solved_heat(frac_kernel):
    """Solver run tracking the closed-form kernel (initial + exterior)."""
    grid = Grid(1, 8.0, 256)
    init = fractional_heat_kernel(1, 0.5, grid.axis_nodes, 1.0)
    spec = SolveSpec(kernel=frac_kernel, grid=grid, initial=init,
                     exterior=heat_kernel_exterior(1.0),
                     t_span=(0.0, 1.0), dt=1.0 / 64.0)
    return spec, solve(spec)
