"""Nondegeneracy of the slow-fast form restricted to SM.

At regular points the restricted form ``eps dx^dy + du^dv`` has determinant
``f0 + f1 eps + f2 eps^2`` with ``f0 = 1`` and ``f1 = 2 J``, ``J`` being the
fast area spanned by the lifts of d/du and d/dv.  For
``v + u x + x^3 + y^2/2 + y v`` the slow manifold is ``y = -v``,
``x = sqrt(-u/3)``, so ``J = 1/(6x)``.

    python3 demos/form_check.py
"""

import numpy as np

from slowfast import form_determinants, parse_hamiltonian
from slowfast.verify import random_sm_points

model = parse_hamiltonian("v + u*x + x^3 + y^2/2 + y*v")
rng = np.random.default_rng(0)
print("      x         u         v        f0        f1     1/(3x)        f2")
for p in random_sm_points(model, 8, rng, center=(1.0, 0.0, -3.0, 0.0), radius=0.5):
    f = form_determinants(model, p, 1e-3).coefficients
    print(f"{p[0]:9.4f} {p[2]:9.4f} {p[3]:9.4f} {f[0]:9.6f} {f[1]:9.6f} {1 / (3 * p[0]):9.6f}"
          f" {f[2]:9.6f}")
