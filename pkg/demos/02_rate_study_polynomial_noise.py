"""Monte Carlo rate study for polynomially ill-posed (exponential) noise.

Sweeps the sample size, injects mixture estimates at the canonical error
level a_n = n^{-1/2}, deconvolves with the theory's bandwidth schedule,
and compares the fitted error exponent against the prediction
q~/(q~ + beta + 1/2) = 2/3.5.
"""

from mixdeconv import StudyConfig, run_study, write_study

config = StudyConfig(
    model="exponential",
    target="spline(qtilde=2.0)",
    mode="oracle_inject",
    n_grid=tuple(2**k for k in range(10, 24, 2)),
    replicates=3,
    u=2.0,
    master_seed=11,
)

result = run_study(config, workers=4)

print(f"{'n':>10} {'median error':>14} {'bound a^0.571':>14} {'ratio':>8}")
for sm in result.summaries:
    print(f"{sm.n:10.0f} {sm.median:14.5g} {sm.bound:14.5g} {sm.ratio:8.3f}")

print(f"\nfitted exponent : {result.slope:.4f} +/- {result.slope_se:.4f}")
print(f"predicted       : {result.predicted_exponent:.4f} ({result.predicted_scale})")
print(f"bound check     : {'ok' if result.passed else 'FAILED'}")

paths = write_study(result, "rate_study_out")
print(f"\nwrote {paths['results']} and {paths['summary']}")
