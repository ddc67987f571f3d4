import numpy as np
import pytest

# nine-run, four-factor, three-level array of strength two, with one OA-based LHD built from it
OA9_TEXT = """9 4 3 2
1 1 1 1
1 2 2 3
1 3 3 2
2 1 2 2
2 2 3 1
2 3 1 3
3 1 3 3
3 2 1 2
3 3 2 1
"""

OA9_LHD = np.array([
    [3, 3, 3, 2], [2, 6, 6, 7], [1, 7, 7, 6], [6, 2, 4, 4], [5, 4, 9, 1],
    [4, 9, 2, 9], [8, 1, 8, 8], [7, 5, 1, 5], [9, 8, 5, 3],
])

# a 7 x 3 Latin hypercube and its jittered realisation (three decimals)
L7 = np.array([[4, 4, 6], [5, 1, 2], [3, 5, 5], [2, 7, 7], [1, 2, 4], [7, 6, 1], [6, 3, 3]])
X7 = np.array([
    [0.521, 0.555, 0.803], [0.663, 0.057, 0.172], [0.392, 0.638, 0.648], [0.237, 0.953, 0.882],
    [0.054, 0.217, 0.487], [0.972, 0.773, 0.001], [0.806, 0.335, 0.348],
])


def oa81_text():
    """81 runs, 4 factors at 9 levels, strength 2: columns a, b, a+b, a+2b (mod 9)."""
    a, b = np.meshgrid(np.arange(9), np.arange(9), indexing="ij")
    a, b = a.ravel(), b.ravel()
    rows = np.column_stack([a, b, (a + b) % 9, (a + 2 * b) % 9]) + 1
    return "81 4 9 2\n" + "\n".join(" ".join(map(str, r)) for r in rows) + "\n"


@pytest.fixture
def oa9_text():
    return OA9_TEXT
