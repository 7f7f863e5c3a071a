"""
Messengers and processing units
===============================

A messenger carries two phase clocks (one per polarization component) and a
polarization vector.  Beam splitters are adaptive units: a small learning
machine remembers the last message seen on each input port and keeps a
running estimate ``x`` of how often each port is used.
"""
import numpy as np

from eventeraser.dlm import dlm_init
from eventeraser.messages import emit_pure
from eventeraser.optics import bs_process, bs_transform, hwp_apply, pbs_process, qwp_apply, sq_norms

# a vertically polarized messenger; the unused H clock sits at (1, 0)
v = emit_pure(90.0)
print("pure V message:", v.as_vector())
print("diagonal message:", emit_pure(45.0).as_vector().round(6))

# waveplates act on the equivalent complex pair and re-encode the message
print("HWP at 45 deg turns V into H:", hwp_apply(v, 45.0).as_vector().round(6))
print("QWP at 45 deg makes H circular:", qwp_apply(emit_pure(0.0), 45.0).as_vector().round(6))

# The learning stage: feed channel 0 only, x0 creeps up to 1.
state = dlm_init(0.99)
for n in range(1, 501):
    state.update(0, v)
    if n in (1, 10, 100, 500):
        print(f"after {n:3d} events on port 0: x = ({state.x[0]:.5f}, {state.x[1]:.5f})")

# once converged, both output candidates carry half the weight: a 50/50 splitter
s2, t2 = sq_norms(*bs_transform(state))
print(f"converged BS: s2^2 = {s2:.6f}, t2^2 = {t2:.6f} (sum 2)")

# run many messengers through a fresh BS and count the exits
rng = np.random.default_rng(1)
state = dlm_init(0.99)
exits = [bs_process(state, 0, v, rng).out_channel for _ in range(20000)]
print("BS channel-0 fraction:", np.mean(np.array(exits) == 0))

# the PBS passes H and reflects V, whatever the random draw
state = dlm_init(0.99)
for _ in range(2000):
    pbs_process(state, 0, emit_pure(0.0), rng)
print("PBS, H input -> channel", pbs_process(state, 0, emit_pure(0.0), rng).out_channel)
state = dlm_init(0.99)
for _ in range(2000):
    pbs_process(state, 0, v, rng)
print("PBS, V input -> channel", pbs_process(state, 0, v, rng).out_channel)
