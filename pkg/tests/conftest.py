import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _strict_float_errors():
    # surface genuine 0/0 or inf-inf bugs; underflow is routine (sigmoid tails)
    with np.errstate(divide="raise", invalid="raise", over="raise", under="ignore"):
        yield
