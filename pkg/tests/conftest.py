import numpy as np
import pytest

from thzbem import _kernels
from thzbem.geometry import CurveSpec, build_mesh


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    _kernels.warmup()


@pytest.fixture(scope="session")
def circle64():
    return build_mesh(CurveSpec("circle", 2 * np.pi, 64))


@pytest.fixture(scope="session")
def circle128():
    return build_mesh(CurveSpec("circle", 2 * np.pi, 128))


@pytest.fixture(scope="session")
def ellipse_2pi():
    return build_mesh(CurveSpec("ellipse", 2 * np.pi, 256, aspect_ratio=1.5))
