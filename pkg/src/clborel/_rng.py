"""Per-trajectory random streams shared by both Langevin backends.

Trajectory i of a run with master seed s owns a xoshiro256** state made
of the SplitMix64 outputs 4i+1 .. 4i+4 of a stream started at mix(s), so
its draws do not depend on how trajectories are grouped or scheduled.
Normals come from a 256-layer ziggurat whose tables are built here once
and handed to the compiled kernel; the numpy path below reproduces the
kernel's draws bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
ZIG_R = 3.6541528853610088
ZIG_INV_R = 1.0 / ZIG_R
ZIG_V = 4.92867323399e-3
_M52 = float(1 << 52)
_U53 = 1.0 / (1 << 53)


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK
    return z ^ (z >> 31)


def _ziggurat_tables():
    ki = np.zeros(256, dtype=np.uint64)
    wi = np.zeros(256)
    fi = np.zeros(256)
    dn = tn = ZIG_R
    q = ZIG_V / math.exp(-0.5 * dn * dn)
    ki[0] = int(dn / q * _M52)
    ki[1] = 0
    wi[0] = q / _M52
    wi[255] = dn / _M52
    fi[0] = 1.0
    fi[255] = math.exp(-0.5 * dn * dn)
    for i in range(254, 0, -1):
        dn = math.sqrt(-2.0 * math.log(ZIG_V / dn + math.exp(-0.5 * dn * dn)))
        ki[i + 1] = int(dn / tn * _M52)
        tn = dn
        fi[i] = math.exp(-0.5 * dn * dn)
        wi[i] = dn / _M52
    return ki, wi, fi


KI, WI, FI = _ziggurat_tables()
for _a in (KI, WI, FI):
    _a.flags.writeable = False
_KI = [int(v) for v in KI]
_WI = WI.tolist()
_FI = FI.tolist()


def seed_states(master_seed: int, start: int, count: int) -> np.ndarray:
    """xoshiro256** states for trajectories start .. start+count-1, shape (count, 4)."""
    if not 0 <= master_seed <= MASK:
        raise ValueError("master seed must fit in 64 bits")
    base = _mix64((master_seed + GOLDEN) & MASK)
    out = np.empty((count, 4), dtype=np.uint64)
    for r in range(count):
        i = start + r
        words = [_mix64((base + (4 * i + j + 1) * GOLDEN) & MASK) for j in range(4)]
        if not any(words):
            words[0] = 1
        out[r] = words
    return out


class ScalarStream:
    """One xoshiro256** stream with the ziggurat normal, in plain Python."""

    __slots__ = ("s",)

    def __init__(self, state):
        self.s = [int(v) for v in state]

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        r = s1 * 5 & MASK
        r = ((r << 7 | r >> 57) & MASK) * 9 & MASK
        t = s1 << 17 & MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = (s3 << 45 | s3 >> 19) & MASK
        self.s = [s0, s1, s2, s3]
        return r

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * _U53

    def normal(self) -> float:
        return _finish_normal(self, self.next_u64())

    def state(self):
        return np.array(self.s, dtype=np.uint64)


def _finish_normal(st: ScalarStream, r: int) -> float:
    """Ziggurat from a first draw r; identical control flow to the kernel."""
    while True:
        idx = r & 0xFF
        r >>= 8
        sign = r & 1
        rabs = (r >> 1) & 0x000FFFFFFFFFFFFF
        x = rabs * _WI[idx]
        if sign:
            x = -x
        if rabs < _KI[idx]:
            return x
        if idx == 0:
            while True:
                xx = -ZIG_INV_R * math.log1p(-st.next_double())
                yy = -math.log1p(-st.next_double())
                if yy + yy > xx * xx:
                    return -(ZIG_R + xx) if (rabs >> 8) & 1 else ZIG_R + xx
        if (_FI[idx - 1] - _FI[idx]) * st.next_double() + _FI[idx] < math.exp(-0.5 * x * x):
            return x
        r = st.next_u64()


_S5 = np.uint64(5)
_S9 = np.uint64(9)
_SH = {k: np.uint64(k) for k in (1, 7, 8, 11, 17, 19, 45, 57)}
_FF = np.uint64(0xFF)
_M = np.uint64(0x000FFFFFFFFFFFFF)


class VectorStreams:
    """Many independent streams advanced in lockstep; state shape (n, 4)."""

    def __init__(self, states: np.ndarray):
        self.s = np.array(states, dtype=np.uint64, copy=True)

    def next_u64(self) -> np.ndarray:
        s = self.s
        s0, s1, s2, s3 = s[:, 0], s[:, 1], s[:, 2], s[:, 3]
        r = s1 * _S5
        r = ((r << _SH[7]) | (r >> _SH[57])) * _S9
        t = s1 << _SH[17]
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s[:, 3] = (s3 << _SH[45]) | (s3 >> _SH[19])
        return r

    def normal(self) -> np.ndarray:
        r = self.next_u64()
        idx = (r & _FF).astype(np.intp)
        r = r >> _SH[8]
        sign = (r & np.uint64(1)).astype(bool)
        rabs = (r >> _SH[1]) & _M
        x = rabs.astype(np.float64) * WI[idx]
        x[sign] = -x[sign]
        slow = np.flatnonzero(~(rabs < KI[idx]))
        for i in slow:
            st = ScalarStream(self.s[i])
            x[i] = _slow_path(st, int(idx[i]), int(rabs[i]), float(x[i]))
            self.s[i] = st.s
        return x

    def compact(self, keep: np.ndarray) -> None:
        self.s = self.s[keep]


def _slow_path(st: ScalarStream, idx: int, rabs: int, x: float) -> float:
    # continue the ziggurat after a failed fast test
    if idx == 0:
        while True:
            xx = -ZIG_INV_R * math.log1p(-st.next_double())
            yy = -math.log1p(-st.next_double())
            if yy + yy > xx * xx:
                return -(ZIG_R + xx) if (rabs >> 8) & 1 else ZIG_R + xx
    if (_FI[idx - 1] - _FI[idx]) * st.next_double() + _FI[idx] < math.exp(-0.5 * x * x):
        return x
    return _finish_normal(st, st.next_u64())
