# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Langevin integrator.

Thin wrapper around the C loop in ``_langevin_core.h``. Each trajectory
carries its own xoshiro256** state (seeded by ``clborel._rng``); normals
use the ziggurat tables built there. Results match the numpy fallback bit
for bit.
"""

import numpy as np

from libc.math cimport sqrt
from libc.stdint cimport uint64_t


cdef extern from "_langevin_core.h" nogil:
    ctypedef struct clb_zig:
        const uint64_t* ki
        const double* wi
        const double* fi
    int CLB_LANES
    long long clb_run_block(uint64_t* states, long long n, const clb_zig* z, double cr, double ci,
                            int quartic, double sx, double sy, double delta, const double* ck,
                            long long nck, double* out, signed char* status)
    void clb_fill_normals(uint64_t* state, const clb_zig* z, double* out, long long count)

LANES = CLB_LANES


cdef int _tables(clb_zig* z, const uint64_t[::1] ki, const double[::1] wi,
                 const double[::1] fi) except -1:
    if ki.shape[0] != 256 or wi.shape[0] != 256 or fi.shape[0] != 256:
        raise ValueError("ziggurat tables must have 256 entries")
    z.ki = &ki[0]
    z.wi = &wi[0]
    z.fi = &fi[0]
    return 0


def run_block(uint64_t[:, ::1] states, const uint64_t[::1] ki, const double[::1] wi,
              const double[::1] fi, double cr, double ci, bint quartic, double a_r, double a_i,
              double delta, const double[::1] checkpoints, double[:, :, ::1] out,
              signed char[::1] status):
    """Integrate one trajectory per row of `states` (updated in place).

    out[i, j, :] receives (x, y) at checkpoint j; status[i] is 1 for a
    trajectory that left the finite range. Returns the total step count.
    """
    cdef Py_ssize_t n = states.shape[0]
    cdef Py_ssize_t nck = checkpoints.shape[0]
    if states.shape[1] != 4:
        raise ValueError("generator states must have shape (n, 4)")
    if out.shape[0] != n or out.shape[1] != nck or out.shape[2] != 2 or status.shape[0] != n:
        raise ValueError("output buffers do not match the block")
    if n == 0 or nck == 0:
        return 0
    cdef clb_zig z
    _tables(&z, ki, wi, fi)
    cdef double sx = sqrt(2.0 * a_r)
    cdef double sy = sqrt(2.0 * a_i)
    cdef long long steps
    with nogil:
        steps = clb_run_block(&states[0, 0], n, &z, cr, ci, quartic, sx, sy, delta,
                              &checkpoints[0], nck, &out[0, 0, 0], &status[0])
    return steps


def normals(uint64_t[::1] state, const uint64_t[::1] ki, const double[::1] wi,
            const double[::1] fi, Py_ssize_t count):
    """`count` ziggurat normals from one stream (state updated in place)."""
    if state.shape[0] != 4:
        raise ValueError("generator state must have 4 words")
    out = np.empty(count)
    cdef double[::1] o = out
    cdef clb_zig z
    _tables(&z, ki, wi, fi)
    if count > 0:
        with nogil:
            clb_fill_normals(&state[0], &z, &o[0], count)
    return out
