"""
Mutual information as a projection distance
===========================================

On a discrete joint, I(X;Z) is the KL divergence from the joint to the
nearest product distribution, and that nearest point is exactly the pair
of marginals.  The divergence to any *other* product then splits into
"information + excess" with nothing crossed over.  The same quantity at
sample level is what the KSG estimator recovers from raw points.
"""

import numpy as np

from geoib.discrete_info import (
    i_projection,
    ib_projection_value,
    kl_discrete,
    kl_to_product,
    marginals,
    mutual_information,
)
from geoib.mi import mi_knn
from geoib.rng import Rng

# --- a small joint and its projection -------------------------------------

p = np.array([[0.32, 0.08],
              [0.12, 0.48]])
px, pz = marginals(p)
print("joint:\n", p)
print("marginals:", px, pz)
print(f"I(X;Z) = {mutual_information(p):.6f} nats")

q_star, r_star = i_projection(p)
print("i-projection returns the marginals:",
      bool(np.array_equal(q_star, px) and np.array_equal(r_star, pz)))

# --- the Pythagorean split ------------------------------------------------

# Against an arbitrary full-support product reference (q, r):
q = np.array([0.7, 0.3])
r = np.array([0.45, 0.55])
total = kl_to_product(p, q, r)
excess = kl_discrete(px, q) + kl_discrete(pz, r)
print(f"\nKL(p || q x r)          = {total:.6f}")
print(f"I(X;Z) + KL(marginals)  = {mutual_information(p) + excess:.6f}")
print(f"residual                = {total - mutual_information(p) - excess:.2e}")

# --- the bottleneck reading -----------------------------------------------

# beta * compression - prediction, both terms projection distances.  At
# beta = 0 only the predictive side remains.
pxz = p
pyz = np.array([[0.40, 0.00],
                [0.04, 0.56]])  # z nearly determines y
for beta in (0.0, 0.5, 2.0):
    print(f"beta={beta:<4} objective value ="
          f" {ib_projection_value(pxz, pyz, beta):.6f}")

# --- the same quantity from samples ---------------------------------------

# Correlated Gaussians with rho=0.9: I = -0.5 ln(1-rho^2) ~ 0.830 nats.
rng = Rng(3)
n = 8000
x = rng.normal(n)
z = 0.9 * x + np.sqrt(1 - 0.81) * rng.normal(n)
est = mi_knn(x, z, k=5)
print(f"\nKSG on rho=0.9 Gaussian pairs: {est:.3f} nats"
      f"  (closed form {-0.5 * np.log(0.19):.3f})")

# Invariant under monotone reparameterization of either argument:
est2 = mi_knn(x**3 + x, np.exp(z), k=5)
print(f"after monotone maps of both sides: {est2:.3f} nats")
