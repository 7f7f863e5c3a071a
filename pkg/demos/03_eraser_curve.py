"""
Quantum eraser: visibility versus the analyzer angle
====================================================

HWP0 in one arm marks the path in the polarization.  HWP1 and the PBS in
front of the detectors decide how much of that marking is erased.  This
script sweeps 2*theta_HWP1 and compares simulated visibilities with theory.

The budget here is small so the script finishes in seconds; the
acceptance tests use 10^6 events per phase.
"""
from eventeraser import harness

for preset in ("fig3a-pureV-45", "fig3b-mixed"):
    spec = harness.spec_for_preset(preset, two_theta1_grid=[0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0],
                                   events_per_point=32 * 100_000)
    points = harness.run_sweep(spec)
    print(f"\n{preset}:  2theta1   v_sim   v_theory")
    for p in points:
        print(f"{'':14s}{p.two_theta1:6.1f}   {p.v_sim:.3f}   {p.v_oracle:.3f}")
    print(harness.compare_report(points, 0.05).summary())
