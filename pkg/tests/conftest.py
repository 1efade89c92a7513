import numpy as np
import pytest

from qsd import _kernels_py, kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["cython", "python"])
def backend(request, monkeypatch):
    """Run a test once per interpreter backend."""
    if request.param == "cython":
        if kernels.BACKEND != "cython":
            pytest.skip("compiled extension not built")
        from qsd import _kernels

        monkeypatch.setattr(kernels, "run_program", _kernels.run_program)
    else:
        monkeypatch.setattr(kernels, "run_program", _kernels_py.run_program)
    return request.param
