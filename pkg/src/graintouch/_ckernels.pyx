# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integrators for the two device plants.

Arithmetic mirrors ``_pykernels`` operation for operation so both backends
produce bit-identical traces. Built with ``-ffp-contract=off``; do not add
fast-math flags.
"""

import numpy as np
from libc.math cimport isfinite


def ct_integrate(const double[::1] force, double baseline, double mass,
                 double stiffness, double damping, double dt, int substeps):
    cdef Py_ssize_t n = force.shape[0]
    pos_arr = np.empty(n, dtype=np.float64)
    vel_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] pos = pos_arr
    cdef double[::1] vel = vel_arr
    cdef double x = 0.0
    cdef double v = 0.0
    cdef double f, a
    cdef Py_ssize_t i
    cdef int s
    for i in range(n):
        pos[i] = x
        vel[i] = v
        f = force[i] - baseline
        for s in range(substeps):
            a = (f - stiffness * x - damping * v) / mass
            v = v + dt * a
            x = x + dt * v
        if not (isfinite(x) and isfinite(v)):
            return pos_arr, vel_arr, i
    return pos_arr, vel_arr, -1


def ksfr_integrate(const double[::1] opposing, double v_start, double v_intended,
                   double mass, double gain, double dt, int substeps):
    cdef Py_ssize_t n = opposing.shape[0]
    pos_arr = np.empty(n, dtype=np.float64)
    vel_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] pos = pos_arr
    cdef double[::1] vel = vel_arr
    cdef double x = 0.0
    cdef double v = v_start
    cdef double f, drive, vt
    cdef Py_ssize_t i
    cdef int s
    for i in range(n):
        pos[i] = x
        vel[i] = v
        f = opposing[i]
        for s in range(substeps):
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
        if not (isfinite(x) and isfinite(v)):
            return pos_arr, vel_arr, i
    return pos_arr, vel_arr, -1
