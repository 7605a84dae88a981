"""Independent reference implementations shared by the test modules."""
import math

import numpy as np

from lipone.lipest import GridFunction


def brute(f: GridFunction, x, radii):
    """All-pairs enumeration with plain loops."""
    pts = list(np.ndindex(*f.shape))

    def dist(p, q):
        if f.dim == 1:
            return abs(p[0] - q[0]) * f.spacing[0]
        a = (p[0] - q[0]) * f.spacing[0]
        b = (p[1] - q[1]) * f.spacing[1]
        return math.sqrt(a * a + b * b)

    out = []
    for r in radii:
        ball = [p for p in pts if dist(p, x) <= r]
        v = [float(f.values[p]) for p in ball]
        llip = max(abs(v[i] - v[j]) / dist(ball[i], ball[j])
                   for i in range(len(ball)) for j in range(len(ball)) if i != j)
        fx = float(f.values[x])
        big = max(abs(f.values[p] - fx) / dist(p, x) for p in ball if p != x)
        little = max(abs(f.values[p] - fx) for p in ball) / r
        out.append((llip, big, little))
    return np.array(out)
