import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))


def reference_negacyclic(ac, bc, n, q):
    """Independent double-loop oracle: full convolution by definition,
    then the wrap rule c_{d-n} -= c_d, then mod q."""
    conv = [0] * (2 * n - 1)
    for i in range(n):
        for j in range(n):
            conv[i + j] += ac[i] * bc[j]
    out = [0] * n
    for d in range(2 * n - 1):
        if d < n:
            out[d] += conv[d]
        else:
            out[d - n] -= conv[d]
    return tuple(v % q for v in out)
