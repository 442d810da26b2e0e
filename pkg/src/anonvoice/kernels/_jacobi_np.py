"""Cyclic Jacobi rotation sweeps for symmetric eigendecomposition, numpy path.

Column updates are vectorized but apply exactly the same per-element
arithmetic as the compiled loop, so both backends agree bit for bit.
"""

import math


def jacobi_sweeps(a, v, abs_tol, max_sweeps):
    """Run cyclic Jacobi sweeps in place on symmetric `a`.

    `v` accumulates the rotations (columns end up as eigenvectors).
    Rotations are applied while any off-diagonal magnitude exceeds
    `abs_tol`. Returns the number of sweeps used, or -1 if `max_sweeps`
    was reached before convergence.
    """
    n = a.shape[0]
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= abs_tol:
                    continue
                rotated = True
                app = a[p, p]
                aqq = a[q, q]
                diff = aqq - app
                if abs(diff) + 100.0 * abs(apq) == abs(diff):
                    t = apq / diff
                else:
                    theta = 0.5 * diff / apq
                    t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                delta = t * apq
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                newp = colp - s * (colq + colp * tau)
                newq = colq + s * (colp - colq * tau)
                a[:, p] = newp
                a[p, :] = newp
                a[:, q] = newq
                a[q, :] = newq
                a[p, p] = app - delta
                a[q, q] = aqq + delta
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp - s * (vq + vp * tau)
                v[:, q] = vq + s * (vp - vq * tau)
        if not rotated:
            return sweep
    return -1
