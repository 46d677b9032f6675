import numpy as np

from cyframe.grid import GridSpec, trig_field
from cyframe.structures import (HermitianMetric, TwoForm, build_acs,
                                metric_from_taming, standard_symplectic_form)
from cyframe import forms
from cyframe import identities as ident

MODES4 = [
    (0, 1, (1, 0, 0, 0), 0.9, "cos"),
    (0, 2, (0, 1, 0, 1), 0.6, "sin"),
    (1, 3, (0, 0, 1, 0), 0.8, "cos"),
    (2, 3, (1, 0, 0, 1), 0.5, "sin"),
    (0, 0, (0, 1, 1, 0), 0.7, "cos"),
]

g = GridSpec(n=2, N=16)
acs = build_acs(g, "generic", 0.1, MODES4)
om = standard_symplectic_form(g)
met = metric_from_taming(om, acs)

for a1, a2 in ((0.1, 0.08), (0.05, 0.04), (0.08, 0.05)):
    alpha = np.zeros((4,) + g.shape)
    alpha[0] = trig_field(g, [((0, 1, 0, 0), a1, "cos")])
    alpha[2] = trig_field(g, [((0, 0, 0, 1), a2, "sin")])
    om_new = TwoForm(g, om.omega + forms.exterior_derivative(alpha, g))
    met2 = metric_from_taming(om_new, acs)
    r = ident.check_frame_independence(met, met2, acs)
    print(f"  d-alpha amps {a1}/{a2}: {r.residual:.3e}")

# conformal + perturbation mix
alpha = np.zeros((4,) + g.shape)
alpha[0] = trig_field(g, [((0, 1, 0, 0), 0.05, "cos")])
alpha[2] = trig_field(g, [((0, 0, 0, 1), 0.04, "sin")])
om_new = TwoForm(g, om.omega + forms.exterior_derivative(alpha, g))
conf = np.exp(trig_field(g, [((1, 0, 0, 1), 0.2, "cos")]))
met3 = HermitianMetric(g, metric_from_taming(om_new, acs).g * conf)
r = ident.check_frame_independence(met, met3, acs)
print(f"  mixed conformal+exact: {r.residual:.3e}")
