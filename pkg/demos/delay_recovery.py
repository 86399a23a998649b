"""
Recovering a known influence delay from a simulated pair
========================================================

Builds a source series with a level drop, decay, and late growth, plus a
target series that follows the source at a 10-step delay through a noisy
linear coupling. Then estimates that delay from the data alone and
compares the calibrated pipeline against the raw one.
"""

from lagte import PipelineConfig, estimate_delay
from lagte.simulate import SimSpec, generate_pair, mae

# One seeded draw of the coupled pair: true delay 10, unit noise.
spec = SimSpec(u0=10, noise_sigma=1.0, length=120, seed=0)
source, target = generate_pair(spec)
print(f"simulated pair: length={spec.length} true delay={spec.u0}")

# Full pipeline with the sliding-window calibration on. A smaller
# bootstrap count than the default keeps the demo quick.
config = PipelineConfig(boot_reps=60)
sample = estimate_delay(source, target, config)
print("\ncalibrated run (norm_method='nonlinear'):")
print(f"  mu_hat     = {sample.mu_hat:.3f}")
print(f"  sigma2_hat = {sample.sigma2_hat:.3f}")
print(f"  ci95       = ({sample.ci95[0]:.3f}, {sample.ci95[1]:.3f})")
print(f"  mae        = {mae(sample.lags, spec.u0):.3f}")

# Same data, same seeds, calibration off. The lag histogram spreads out
# and the error grows: the nonstationary level shifts leak into the
# symbol stream unless each point is judged against its local window.
raw = estimate_delay(source, target, config.with_overrides(norm_method="none"))
print("\nraw run (norm_method='none'):")
print(f"  mu_hat     = {raw.mu_hat:.3f}")
print(f"  sigma2_hat = {raw.sigma2_hat:.3f}")
print(f"  mae        = {mae(raw.lags, spec.u0):.3f}")

# The histogram shows where the bootstrap replicates landed.
print("\ncalibrated lag histogram:")
for lag, count in sample.histogram(config.lag_min, config.lag_max):
    if count:
        print(f"  lag {lag:2d}: {'#' * count}")
