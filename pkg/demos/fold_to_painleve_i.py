"""Fold point to Painlevé I, end to end.

Classifies the fold of ``v + u x + x^3 + q x^4 + y^2/2``, extracts the
limit constants, maps them to ``W'' = 6 W^2 + zeta`` and runs the
eps-convergence study of blown-up full trajectories.

    python3 demos/fold_to_painleve_i.py [q]
"""

import math
import sys

from slowfast import (classify_singular_point, convergence_study, fold_canonical,
                      fold_coefficients, integrate_painleve_i, to_standard_form)

q = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
model = fold_canonical(q=q)
print(f"model: {model.to_source()}  {model.params}")

rec = classify_singular_point(model, (0, 0, 0, 0))
print(f"origin: {rec.classification.value}; g_xx={rec.margins['g_xx']:g}, "
      f"transversality={rec.margins['transversality']:g}")

sys0 = fold_coefficients(model, 0.0)
std = to_standard_form(sys0)
print(f"alpha_c={sys0.alpha_c:g} gamma_c={sys0.gamma_c:g} s1={sys0.s1:g}; "
      f"lam_X={std.lam_x:.6g} lam_Z={std.lam_z:.6g}")

pole = integrate_painleve_i(sys0, (0.0, 0.0, -5.0), 5.0).pole
print(f"limit solution from (0, 0) at Z=-5 blows up near Z={pole['z_est']:.8f}")

init = (math.sqrt(1 / 3), 0.0)
res = convergence_study(model, 0.0, [1e-2, 1e-3, 1e-4], (-1.0, 1.0), init, kind="Fold")
print("\n  epsilon        r          sup|X - X_PI|   q_fit")
for e, r, dev, qf in res.rows:
    print(f"  {e:8.0e}  {r:10.6f}  {dev:14.6e}  {qf:7.3f}")
print(f"strictly decreasing: {res.strictly_decreasing()}")
