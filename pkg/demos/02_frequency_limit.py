"""Gaussian limit of type frequencies for a large starting population.

With N independent ancestors, the vector of type fractions concentrates on the
mean proportions p(t), and sqrt(N) times the deviation becomes Gaussian.  For
two types the whole story is one variance, S^2(t; N).
"""

from branchfreq.asymptotics import delta_distribution, s_squared_example2
from branchfreq.moments import moment_table
from branchfreq.process_model import example2_spec

p1, p2, N = 0.40, 0.35, 1000
spec = example2_spec(1 - p1 - p2, p1, p2)

print("t   mean of delta_1   S^2 generic        S^2 closed form")
for t in range(1, 11):
    g = delta_distribution(moment_table(spec, t, N), N)
    print(f"{t:<3} {g.mean[0]:<17.6f} {g.cov_delta[0, 0]:<18.6e} {s_squared_example2(p1, p2, t, N):.6e}")

# The spread shrinks like 1/N, and grows in t because the progenitor pool is
# subcritical (2 p1 < 1): fewer cells remain to average over.
full = delta_distribution(moment_table(spec, 5, N), N, k=2)
print("\nfull limit covariance D at t = 5 (rows sum to zero):")
print(full.cov_limit)
