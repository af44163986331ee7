import sys
import time

import numpy as np

import dendrite2d as d
from dendrite2d.diagnostics import interface_radius_modes
from dendrite2d.stepper import advance, initial_state

kw = {}
for arg in sys.argv[1:]:
    k, v = arg.split("=")
    kw[k] = float(v) if k not in ("nx", "ny") else int(v)
steps = int(kw.pop("steps", 600))
every = int(kw.pop("every", 100))
params = d.Params(seed_x=0.5, seed_y=0.5, linear_tol=1e-8, **kw).resolve()
model = params.build_model()
s = initial_state(model.mesh, model)
t0 = time.time()
for k in range(1, steps + 1):
    s = advance(s, model)
    if k % every == 0:
        try:
            amps = interface_radius_modes(s.u, (params.seed_x, params.seed_y))
            msg = f"r={amps[0]:.4f} m1-6: " + " ".join(f"{a:.4f}" for a in amps[1:7])
        except ValueError as e:
            msg = f"modes failed: {e}"
        print(
            f"t={s.t:.3f}: {msg}  u:[{s.u.values.min():.3f},{s.u.values.max():.3f}]"
            f" c:[{s.c.values.min():.3f},{s.c.values.max():.3f}]",
            flush=True,
        )
print(f"{time.time()-t0:.0f}s", flush=True)
