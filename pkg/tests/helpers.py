import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vectors(d):
    return arrays(np.float64, (d,), elements=finite)
