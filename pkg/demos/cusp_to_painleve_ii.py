"""Cusp point to Painlevé II, with the constant arbitration.

The blow-up of the cusp of ``u + u x + v x^2/2 + a4 x^4/4 + H1 y^2`` is
compared with the limit system for both choices of the X' constant (rho,
sigma) and both readings of beta.  The choice that is right converges as
eps decreases; the others stall at a plateau.

    python3 demos/cusp_to_painleve_ii.py [H1]
"""

import sys

from slowfast import convergence_study, cusp_canonical, cusp_coefficients

h1 = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
model = cusp_canonical(H1=h1)
print(f"model: {model.to_source()}  {model.params}")

c = cusp_coefficients(model)
print(f"rho={c.rho:g} sigma={c.sigma:g} beta={c.beta:g} (literal {c.beta_literal:g}) "
      f"alpha={c.alpha:g}")

res = convergence_study(model, None, [1e-2, 1e-3, 1e-4], (-1.0, 1.0), (1.0, 0.0), kind="Cusp")
print("\n  variant          sup deviations                    last q   converges")
for name, v in res.manifest["variants"].items():
    devs = "  ".join(f"{d:9.3e}" for d in v["sup_dev"])
    print(f"  {name:14s}  {devs}   {v['q_fit'][-1]:6.3f}   {v['converges']}")
