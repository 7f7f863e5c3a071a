"""
A Mach-Zehnder interferometer, one messenger at a time
======================================================

Two adaptive beam splitters and a phase shifter.  No messenger ever meets
another, yet the detector counts build the sin^2(phi/2) fringe.
"""
import numpy as np

from eventeraser import oracle
from eventeraser.messages import PureLinear, SourceSpec
from eventeraser.network import MziSettings, RunConfig, build_bare_mzi, detector_fraction, run_events

n_events = 200_000
print(" phi   N0/N    sin^2(phi/2)")
for phi in np.arange(0, 361, 30):
    cfg = RunConfig(n_events, gamma=0.99, seed=3, source=SourceSpec(PureLinear(90.0)),
                    settings=MziSettings(phi0=float(phi), phi1=0.0))
    ds = run_events(build_bare_mzi(cfg), cfg)
    print(f"{phi:4.0f}  {detector_fraction(ds):.4f}  {oracle.mzi_probs(phi, 0.0)[0]:.4f}")

# In the first events the units have not learned yet; a short transient.
cfg = RunConfig(2000, seed=3, settings=MziSettings(0.0, 0.0))
ds = run_events(build_bare_mzi(cfg), cfg)
first = ds.outcomes[:200]
print("D0 clicks in events 1-200 at phi=0:", int(np.sum(first == 0)),
      "| in events 1001-2000:", int(np.sum(ds.outcomes[1000:] == 0)))
