"""Pure-Python integrators, used when the compiled core is unavailable.

Keep the arithmetic in the same order as ``_ckernels.pyx``.
"""

import math

import numpy as np


def ct_integrate(force, baseline, mass, stiffness, damping, dt, substeps):
    n = len(force)
    pos = np.empty(n)
    vel = np.empty(n)
    x = 0.0
    v = 0.0
    forces = np.asarray(force, dtype=np.float64).tolist()
    for i in range(n):
        pos[i] = x
        vel[i] = v
        f = forces[i] - baseline
        for _ in range(substeps):
            a = (f - stiffness * x - damping * v) / mass
            v = v + dt * a
            x = x + dt * v
        if not (math.isfinite(x) and math.isfinite(v)):
            return pos, vel, i
    return pos, vel, -1


def ksfr_integrate(opposing, v_start, v_intended, mass, gain, dt, substeps):
    n = len(opposing)
    pos = np.empty(n)
    vel = np.empty(n)
    x = 0.0
    v = float(v_start)
    opp = np.asarray(opposing, dtype=np.float64).tolist()
    for i in range(n):
        pos[i] = x
        vel[i] = v
        f = opp[i]
        for _ in range(substeps):
            drive = gain * (v_intended - v)
            if v > 0.0:
                vt = v + dt * (drive - f) / mass
                if vt < 0.0:
                    vt = 0.0
            elif v < 0.0:
                vt = v + dt * (drive + f) / mass
                if vt > 0.0:
                    vt = 0.0
            else:
                vt = v + dt * drive / mass
            v = vt
            x = x + dt * v
        if not (math.isfinite(x) and math.isfinite(v)):
            return pos, vel, i
    return pos, vel, -1
