/* Hot loop of the compiled Langevin backend.
 *
 * Per-trajectory xoshiro256** streams, a 256-layer ziggurat for normals
 * (tables supplied by the caller) and the adaptive Euler-Maruyama step.
 * Up to CLB_LANES trajectories are stepped round-robin so that their
 * dependency chains overlap; each trajectory's arithmetic is identical to
 * the numpy fallback, expression by expression. Build without FMA
 * contraction (-ffp-contract=off) to keep that equivalence.
 */
#ifndef CLB_LANGEVIN_CORE_H
#define CLB_LANGEVIN_CORE_H

#include <math.h>
#include <stdint.h>
#include <string.h>

#define CLB_LANES 16
#define CLB_LIMIT 1e150
#define CLB_ZIG_R 3.6541528853610088
#define CLB_ZIG_INV_R (1.0 / 3.6541528853610088)

typedef struct {
    const uint64_t *ki;
    const double *wi;
    const double *fi;
} clb_zig;

static inline uint64_t clb_rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

static inline uint64_t clb_next(uint64_t *s)
{
    uint64_t r = clb_rotl(s[1] * 5, 7) * 9;
    uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = clb_rotl(s[3], 45);
    return r;
}

static inline double clb_u01(uint64_t r)
{
    return (double)(int64_t)(r >> 11) * (1.0 / 9007199254740992.0);
}

static inline double clb_normal(uint64_t *state, const clb_zig *z)
{
    uint64_t s[4], r, rabs, bits;
    double x, xx, yy;
    int idx;
    memcpy(s, state, sizeof s); /* keep the state in registers */
    for (;;) {
        r = clb_next(s);
        idx = (int)(r & 0xFF);
        r >>= 8;
        rabs = (r >> 1) & 0x000FFFFFFFFFFFFFULL;
        /* rabs < 2^52 converts exactly; flipping the sign bit equals negation */
        x = (double)(int64_t)rabs * z->wi[idx];
        memcpy(&bits, &x, sizeof bits);
        bits ^= (r & 1) << 63;
        memcpy(&x, &bits, sizeof x);
        if (__builtin_expect(rabs < z->ki[idx], 1))
            break;
        if (idx == 0) {
            for (;;) {
                xx = -CLB_ZIG_INV_R * log1p(-clb_u01(clb_next(s)));
                yy = -log1p(-clb_u01(clb_next(s)));
                if (yy + yy > xx * xx)
                    break;
            }
            x = ((rabs >> 8) & 1) ? -(CLB_ZIG_R + xx) : CLB_ZIG_R + xx;
            break;
        }
        if ((z->fi[idx - 1] - z->fi[idx]) * clb_u01(clb_next(s)) + z->fi[idx] < exp(-0.5 * x * x))
            break;
    }
    memcpy(state, s, sizeof s);
    return x;
}

static void clb_fill_normals(uint64_t *state, const clb_zig *z, double *out, long long count)
{
    uint64_t s[4];
    memcpy(s, state, sizeof s);
    for (long long i = 0; i < count; i++)
        out[i] = clb_normal(s, z);
    memcpy(state, s, sizeof s);
}

/* Integrate n trajectories from the origin. states: n x 4, out: n x nck x 2.
 * status[i] = 1 marks a trajectory that left |x|, |y| <= 1e150 (or became
 * non-finite); its remaining checkpoints are left untouched. Returns the
 * number of steps taken. */
static long long clb_run_block(uint64_t *states, long long n, const clb_zig *z, double cr, double ci,
                               int quartic, double sx, double sy, double delta, const double *ck,
                               long long nck, double *out, signed char *status)
{
    long long steps = 0;
    for (long long first = 0; first < n; first += CLB_LANES) {
        int nl = (int)((n - first) < CLB_LANES ? (n - first) : CLB_LANES);
        double x[CLB_LANES], y[CLB_LANES], t[CLB_LANES], tgt[CLB_LANES];
        long long j[CLB_LANES];
        uint64_t s[CLB_LANES][4];
        int live = 0;
        for (int k = 0; k < nl; k++) {
            long long i = first + k;
            x[k] = y[k] = t[k] = 0.0;
            j[k] = 0;
            memcpy(s[k], states + 4 * i, sizeof s[k]);
            status[i] = 0;
            while (j[k] < nck && !(t[k] < ck[j[k]])) { /* checkpoints at t <= 0 */
                out[(i * nck + j[k]) * 2] = 0.0;
                out[(i * nck + j[k]) * 2 + 1] = 0.0;
                j[k]++;
            }
            tgt[k] = j[k] < nck ? ck[j[k]] : 0.0;
            if (j[k] < nck)
                live++;
        }
        while (live > 0) {
            for (int k = 0; k < nl; k++) {
                if (j[k] >= nck)
                    continue;
                double xk = x[k], yk = y[k];
                double x2 = xk * xk, y2 = yk * yk, u, v;
                if (quartic) {
                    u = xk * (x2 - 3.0 * y2);
                    v = yk * (3.0 * x2 - y2);
                } else {
                    u = xk;
                    v = yk;
                }
                double fx = cr * u - ci * v;
                double fy = cr * v + ci * u;
                double dt = delta / (1.0 + fabs(fx) + fabs(fy));
                double sdt = sqrt(dt);
                double xi = clb_normal(s[k], z);
                xk = xk + (fx * dt + (sx * sdt) * xi);
                if (sy != 0.0) {
                    double eta = clb_normal(s[k], z);
                    yk = yk + (fy * dt + (sy * sdt) * eta);
                } else {
                    yk = yk + fy * dt;
                }
                t[k] = t[k] + dt;
                x[k] = xk;
                y[k] = yk;
                steps++;
                if (!(fabs(xk) <= CLB_LIMIT && fabs(yk) <= CLB_LIMIT)) {
                    status[first + k] = 1;
                    j[k] = nck;
                    live--;
                    continue;
                }
                if (!(t[k] < tgt[k])) {
                    long long i = first + k;
                    while (j[k] < nck && !(t[k] < ck[j[k]])) {
                        out[(i * nck + j[k]) * 2] = xk;
                        out[(i * nck + j[k]) * 2 + 1] = yk;
                        j[k]++;
                    }
                    if (j[k] == nck)
                        live--;
                    else
                        tgt[k] = ck[j[k]];
                }
            }
        }
        for (int k = 0; k < nl; k++)
            memcpy(states + 4 * (first + k), s[k], sizeof s[k]);
    }
    return steps;
}

#endif
