"""Diagrams of one small graph and how the kernels compare them with a fake copy."""
import numpy as np

from pdperm.diagrams import bottleneck, permute_diagram, wasserstein_p
from pdperm.filtration import compute_filtration
from pdperm.graphio import sbm
from pdperm.kernels import KernelSpec, gram
from pdperm.persistence import extended_pd

g = sbm(8, 8, 0.6, 0.1, seed=4)
d = extended_pd(g, compute_filtration("degree", g))
fake = permute_diagram(d, 0)

np.set_printoptions(precision=3, suppress=True)
print(f"{len(d)} points; first five (birth, death), true then fake:")
print(np.c_[d.points[:5], fake.points[:5]])
print(f"bottleneck {bottleneck(d.points, fake.points):.3f}, W1 {wasserstein_p(d.points, fake.points, 1):.3f}")

specs = [KernelSpec("sw", sigma=1.0), KernelSpec("pss", t=0.5), KernelSpec("pwg", rho=1.0, K_w=1.0, tau=1.0),
         KernelSpec("pf", t=1.0, tau=0.5)]
for spec in specs:
    k = gram([d, fake], spec).values
    print(f"{spec.name:>4}: k(true, fake) = {k[0, 1]:.4f}   k(true, true) = {k[0, 0]:.4f}")
