import time

import numpy as np

from cyframe.grid import GridSpec, trig_field
from cyframe.structures import (build_acs, metric_from_taming,
                                standard_symplectic_form,
                                standard_complex_structure)
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
    return ident.build_bundle(met, acs)


def show(tag, reports):
    for r in reports:
        extra = "" if r.applicable else "  [n/a]"
        print(f"  {tag} {r.name:45s} {r.residual:10.3e}  tol {r.tolerance:g}"
              f"{extra}  {r.note}")


for family, eps in (("symplectic", 0.1), ("generic", 0.1)):
    t0 = time.time()
    b16 = bundle(family, eps, 16)
    print(f"== {family} eps={eps} N=16  (build {time.time()-t0:.1f}s) "
          f"supT={b16.torsion_sup():.3e}")
    t0 = time.time()
    fb = ident.check_first_bianchi(b16)
    show("FB", fb)
    print(f"  first bianchi {time.time()-t0:.1f}s")
    t0 = time.time()
    sb = ident.check_second_bianchi(b16)
    show("SB", sb)
    print(f"  second bianchi {time.time()-t0:.1f}s")
    if family == "symplectic":
        t0 = time.time()
        qk = ident.check_quasi_kahler_set(b16)
        show("QK", qk)
        print(f"  qk set {time.time()-t0:.1f}s")
    f = ident.default_probe_function(b16.grid)
    t0 = time.time()
    lp = ident.check_laplacian_lemmas(b16, f)
    show("LL", lp)
    print(f"  laplacians {time.time()-t0:.1f}s")
