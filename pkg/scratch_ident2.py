import numpy as np

from cyframe.grid import GridSpec, trig_field
from cyframe.structures import (HermitianMetric, UnitaryCoframe, build_acs,
                                metric_from_taming, standard_complex_structure,
                                standard_symplectic_form)
from cyframe import forms
from cyframe import identities as ident

MODES4 = [
    (0, 1, (1, 0, 0, 0), 0.9, "cos"),
    (0, 2, (0, 1, 0, 1), 0.6, "sin"),
    (1, 3, (0, 0, 1, 0), 0.8, "cos"),
    (2, 3, (1, 0, 0, 1), 0.5, "sin"),
    (0, 0, (0, 1, 1, 0), 0.7, "cos"),
]


def bundle(family, eps, N):
    g = GridSpec(n=2, N=N)
    acs = build_acs(g, family, eps, MODES4)
    om = standard_symplectic_form(g)
    met = metric_from_taming(om, acs)
    return ident.build_bundle(met, acs), acs, met, om


print("== hessian symmetry vs eps / N ==")
for family, eps, N in (("symplectic", 0.05, 16), ("symplectic", 0.1, 32),
                       ("generic", 0.05, 16)):
    b, acs, met, om = bundle(family, eps, N)
    f = ident.default_probe_function(b.grid)
    lp = ident.check_laplacian_lemmas(b, f)
    print(f"  {family} eps={eps} N={N}: routes {lp[0].residual:.3e} "
          f"lc {lp[1].residual:.3e} hess {lp[2].residual:.3e}")

print("== flat ==")
g = GridSpec(n=2, N=16)
acs0 = standard_complex_structure(g)
om0 = standard_symplectic_form(g)
met0 = metric_from_taming(om0, acs0)
b0 = ident.build_bundle(met0, acs0)
f0 = trig_field(g, [((1, 0, 0, 0), 1.0, "sin"), ((0, 0, 1, 0), 1.0, "sin")])
for r in (ident.check_first_bianchi(b0) + ident.check_second_bianchi(b0)
          + ident.check_quasi_kahler_set(b0)
          + ident.check_laplacian_lemmas(b0, f0)):
    print(f"  {r.name:45s} {r.residual:10.3e}")

print("== frame independence ==")
bG, acsG, metG, omG = bundle("generic", 0.1, 16)
# same object
r_same = ident.check_frame_independence(metG, metG, acsG)
print(f"  identical:  {r_same.residual:.3e}")
# scaled
met2 = HermitianMetric(g, 2.0 * metG.g)
r_scale = ident.check_frame_independence(metG, met2, acsG)
print(f"  doubled:    {r_scale.residual:.3e}")
# genuinely different: metric induced by a perturbed taming form
alpha = np.zeros((4,) + g.shape)
alpha[0] = trig_field(g, [((0, 1, 0, 0), 0.2, "cos")])
alpha[2] = trig_field(g, [((0, 0, 0, 1), 0.15, "sin")])
om_pert = omG.omega + forms.exterior_derivative(alpha, g)
from cyframe.structures import TwoForm
om_new = TwoForm(g, om_pert)
met3 = metric_from_taming(om_new, acsG)
r_indep = ident.check_frame_independence(metG, met3, acsG)
print(f"  perturbed:  {r_indep.residual:.3e}")
# conformal rescale
conf = np.exp(trig_field(g, [((1, 0, 0, 1), 0.3, "cos")]))
met4 = HermitianMetric(g, metG.g * conf)
r_conf = ident.check_frame_independence(metG, met4, acsG)
print(f"  conformal:  {r_conf.residual:.3e}")

print("== phase rotation invariance ==")
bS, acsS, metS, omS = bundle("symplectic", 0.1, 16)
alpha = 0.73
cf = bS.conn.coframe
cf_rot = UnitaryCoframe(g, P=np.exp(1j * alpha) * cf.P,
                        Q=np.exp(-1j * alpha) * cf.Q,
                        pivots=cf.pivots, condition=cf.condition)
b_rot = ident.bundle_from_coframe(cf_rot, acs=acsS, metric=metS)
base = (ident.check_first_bianchi(bS) + ident.check_second_bianchi(bS)
        + ident.check_quasi_kahler_set(bS))
rot = (ident.check_first_bianchi(b_rot) + ident.check_second_bianchi(b_rot)
       + ident.check_quasi_kahler_set(b_rot))
worst = max(abs(a.residual - c.residual) for a, c in zip(base, rot))
print(f"  worst residual drift: {worst:.3e}")

print("== refinement order, first bianchi, generic 8->16 ==")
b8, *_ = bundle("generic", 0.1, 8)
b16, *_ = bundle("generic", 0.1, 16)
fb8 = ident.check_first_bianchi(b8)
fb16 = ident.check_first_bianchi(b16)
for r in ident.attach_refinement(fb8, fb16):
    print(f"  {r.name:30s} coarse {r.residual:.3e} order {r.order:.2f}")
