#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "fedsched/kernels.hpp"

// AVX2+FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// is only entered after a runtime CPU check. Lane accumulation follows the
// contract in kernels.hpp, so results are bit-identical to the scalar
// reference: element i of a reduction lands in partial sum i mod 4, and
// per-element chains are vectorized across outputs, never reassociated.

namespace fedsched::kern {
namespace {

double dot_avx2(const double* a, const double* b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    for (; i < n; ++i) s[i & 3] = std::fma(a[i], b[i], s[i & 3]);
    return (s[0] + s[2]) + (s[1] + s[3]);
}

double sum_avx2(const double* a, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    for (; i < n; ++i) s[i & 3] += a[i];
    return (s[0] + s[2]) + (s[1] + s[3]);
}

void axpy_avx2(double* y, double alpha, const double* x, size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void relu_avx2(double* y, const double* x, size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_avx2(double* dx, const double* x, const double* dy, size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(dx + i, _mm256_and_pd(mask, _mm256_loadu_pd(dy + i)));
    }
    for (; i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

// y[0..n) = fma(alpha, x[0..n), y[0..n)) without the dispatch indirection
inline void row_fma(double* y, double alpha, const double* x, int n) {
    const __m256d av = _mm256_set1_pd(alpha);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

// One block of R output rows for channel oc, accumulators held in registers
// across the whole (ic,ky,kx) reduction. Per element the chain order matches
// the scalar reference: bias first, then (ic,ky,kx).
template <int R>
inline void fwd_row_block(double* out, const double* in, const double* wc, double b,
                          const ConvDims& d, int oc, int oy) {
    const int oh = d.out_h(), ow = d.out_w(), k = d.kernel;
    const __m256d bv = _mm256_set1_pd(b);
    double* orow[R];
    for (int r = 0; r < R; ++r)
        orow[r] = out + (static_cast<size_t>(oc) * oh + (oy + r)) * ow;
    int ox = 0;
    for (; ox + 8 <= ow; ox += 8) {
        __m256d a0[R], a1[R];
        for (int r = 0; r < R; ++r) {
            a0[r] = bv;
            a1[r] = bv;
        }
        for (int ic = 0; ic < d.in_ch; ++ic) {
            const double* iplane = in + static_cast<size_t>(ic) * d.in_h * d.in_w;
            for (int ky = 0; ky < k; ++ky) {
                const double* wrow = wc + (static_cast<size_t>(ic) * k + ky) * k;
                const double* ibase = iplane + static_cast<size_t>(oy + ky) * d.in_w + ox;
                for (int kx = 0; kx < k; ++kx) {
                    const __m256d wv = _mm256_set1_pd(wrow[kx]);
                    for (int r = 0; r < R; ++r) {
                        const double* ip = ibase + static_cast<size_t>(r) * d.in_w + kx;
                        a0[r] = _mm256_fmadd_pd(wv, _mm256_loadu_pd(ip), a0[r]);
                        a1[r] = _mm256_fmadd_pd(wv, _mm256_loadu_pd(ip + 4), a1[r]);
                    }
                }
            }
        }
        for (int r = 0; r < R; ++r) {
            _mm256_storeu_pd(orow[r] + ox, a0[r]);
            _mm256_storeu_pd(orow[r] + ox + 4, a1[r]);
        }
    }
    for (; ox + 4 <= ow; ox += 4) {
        __m256d a0[R];
        for (int r = 0; r < R; ++r) a0[r] = bv;
        for (int ic = 0; ic < d.in_ch; ++ic) {
            const double* iplane = in + static_cast<size_t>(ic) * d.in_h * d.in_w;
            for (int ky = 0; ky < k; ++ky) {
                const double* wrow = wc + (static_cast<size_t>(ic) * k + ky) * k;
                const double* ibase = iplane + static_cast<size_t>(oy + ky) * d.in_w + ox;
                for (int kx = 0; kx < k; ++kx) {
                    const __m256d wv = _mm256_set1_pd(wrow[kx]);
                    for (int r = 0; r < R; ++r)
                        a0[r] = _mm256_fmadd_pd(
                            wv, _mm256_loadu_pd(ibase + static_cast<size_t>(r) * d.in_w + kx),
                            a0[r]);
                }
            }
        }
        for (int r = 0; r < R; ++r) _mm256_storeu_pd(orow[r] + ox, a0[r]);
    }
    for (; ox < ow; ++ox) {
        double acc[R];
        for (int r = 0; r < R; ++r) acc[r] = b;
        for (int ic = 0; ic < d.in_ch; ++ic) {
            const double* iplane = in + static_cast<size_t>(ic) * d.in_h * d.in_w;
            for (int ky = 0; ky < k; ++ky) {
                const double* wrow = wc + (static_cast<size_t>(ic) * k + ky) * k;
                const double* ibase = iplane + static_cast<size_t>(oy + ky) * d.in_w + ox;
                for (int kx = 0; kx < k; ++kx)
                    for (int r = 0; r < R; ++r)
                        acc[r] = std::fma(wrow[kx], ibase[static_cast<size_t>(r) * d.in_w + kx],
                                          acc[r]);
            }
        }
        for (int r = 0; r < R; ++r) orow[r][ox] = acc[r];
    }
}

void conv2d_fwd_avx2(double* out, const double* in, const double* w, const double* bias,
                     const ConvDims& d) {
    const int oh = d.out_h(), k = d.kernel;
    for (int oc = 0; oc < d.out_ch; ++oc) {
        const double* wc = w + static_cast<size_t>(oc) * d.in_ch * k * k;
        int oy = 0;
        for (; oy + 4 <= oh; oy += 4) fwd_row_block<4>(out, in, wc, bias[oc], d, oc, oy);
        for (; oy + 2 <= oh; oy += 2) fwd_row_block<2>(out, in, wc, bias[oc], d, oc, oy);
        for (; oy < oh; ++oy) fwd_row_block<1>(out, in, wc, bias[oc], d, oc, oy);
    }
}

// One block of R input rows sharing a ky window (callers pass the window).
// Works on a column-padded copy of dout (k-1 zero columns each side) so every
// input column runs the full kx range vectorized with accumulators in
// registers. Pad terms are fma(w, +-0, acc) == acc exactly: an accumulator
// chain started at +0 can never hold -0, so the chain value matches the
// clipped scalar reference bit for bit. The iw % 4 tail falls back to the
// scalar per-element chain on the unpadded dout.
template <int R>
inline void bwd_data_row_block(double* din, const double* dout, const double* pad, int pw,
                               const double* w, const ConvDims& d, int ic, int iy, int ky_lo,
                               int ky_hi) {
    const int oh = d.out_h(), ow = d.out_w(), k = d.kernel;
    const int iw = d.in_w;
    double* irow[R];
    for (int r = 0; r < R; ++r)
        irow[r] = din + (static_cast<size_t>(ic) * d.in_h + (iy + r)) * iw;
    const size_t wplane = static_cast<size_t>(d.in_ch) * k * k;
    const double* wic = w + static_cast<size_t>(ic) * k * k;
    int ix = 0;
    for (; ix + 4 <= iw; ix += 4) {
        __m256d acc[R];
        for (int r = 0; r < R; ++r) acc[r] = _mm256_setzero_pd();
        for (int oc = 0; oc < d.out_ch; ++oc) {
            const double* wc = wic + static_cast<size_t>(oc) * wplane;
            const double* pc = pad + static_cast<size_t>(oc) * oh * pw;
            for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                const double* wrow = wc + static_cast<size_t>(ky) * k;
                const double* pbase = pc + static_cast<size_t>(iy - ky) * pw + ix + (k - 1);
                for (int kx = 0; kx < k; ++kx) {
                    const __m256d wv = _mm256_set1_pd(wrow[kx]);
                    for (int r = 0; r < R; ++r)
                        acc[r] = _mm256_fmadd_pd(
                            wv, _mm256_loadu_pd(pbase + static_cast<size_t>(r) * pw - kx),
                            acc[r]);
                }
            }
        }
        for (int r = 0; r < R; ++r) _mm256_storeu_pd(irow[r] + ix, acc[r]);
    }
    for (; ix < iw; ++ix) {
        const int kx_lo = ix - ow + 1 > 0 ? ix - ow + 1 : 0;
        const int kx_hi = ix < k - 1 ? ix : k - 1;
        for (int r = 0; r < R; ++r) {
            double acc = 0.0;
            for (int oc = 0; oc < d.out_ch; ++oc) {
                const double* wc = wic + static_cast<size_t>(oc) * wplane;
                const double* dc = dout + static_cast<size_t>(oc) * oh * ow;
                for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                    const double* drow = dc + static_cast<size_t>(iy + r - ky) * ow;
                    const double* wrow = wc + static_cast<size_t>(ky) * k;
                    for (int kx = kx_lo; kx <= kx_hi; ++kx)
                        acc = std::fma(wrow[kx], drow[ix - kx], acc);
                }
            }
            irow[r][ix] = acc;
        }
    }
}

void conv2d_bwd_data_avx2(double* din, const double* dout, const double* w, const ConvDims& d) {
    const int oh = d.out_h(), ow = d.out_w(), k = d.kernel;
    const int ih = d.in_h;
    const int pw = ow + 2 * (k - 1);
    std::vector<double> pad(static_cast<size_t>(d.out_ch) * oh * pw, 0.0);
    for (int oc = 0; oc < d.out_ch; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            std::memcpy(pad.data() + (static_cast<size_t>(oc) * oh + oy) * pw + (k - 1),
                        dout + (static_cast<size_t>(oc) * oh + oy) * ow,
                        sizeof(double) * static_cast<size_t>(ow));
    for (int ic = 0; ic < d.in_ch; ++ic) {
        int iy = 0;
        const int int_lo = k - 1 < ih ? k - 1 : ih;  // first row with a full ky window
        for (; iy < int_lo; ++iy)
            bwd_data_row_block<1>(din, dout, pad.data(), pw, w, d, ic, iy,
                                  iy - oh + 1 > 0 ? iy - oh + 1 : 0, iy < k - 1 ? iy : k - 1);
        for (; iy + 4 <= oh; iy += 4)
            bwd_data_row_block<4>(din, dout, pad.data(), pw, w, d, ic, iy, 0, k - 1);
        for (; iy + 2 <= oh; iy += 2)
            bwd_data_row_block<2>(din, dout, pad.data(), pw, w, d, ic, iy, 0, k - 1);
        for (; iy < oh; ++iy)
            bwd_data_row_block<1>(din, dout, pad.data(), pw, w, d, ic, iy, 0, k - 1);
        for (; iy < ih; ++iy)
            bwd_data_row_block<1>(din, dout, pad.data(), pw, w, d, ic, iy, iy - oh + 1,
                                  iy < k - 1 ? iy : k - 1);
    }
}

// K weight-plane accumulators held in registers, each reduced with four
// partials over the flattened (oy,ox) plane; requires ow % 4 == 0 so the
// lane phase matches the scalar reference.
template <int K>
inline void wb_plane(double* wrow, const double* in, const double* dch, const ConvDims& d,
                     int ic, int ky) {
    const int oh = d.out_h(), ow = d.out_w();
    __m256d acc[K];
    for (int kx = 0; kx < K; ++kx) acc[kx] = _mm256_setzero_pd();
    for (int oy = 0; oy < oh; ++oy) {
        const double* drow = dch + static_cast<size_t>(oy) * ow;
        const double* irow = in + (static_cast<size_t>(ic) * d.in_h + (oy + ky)) * d.in_w;
        for (int ox = 0; ox + 4 <= ow; ox += 4) {
            const __m256d dv = _mm256_loadu_pd(drow + ox);
            for (int kx = 0; kx < K; ++kx)
                acc[kx] = _mm256_fmadd_pd(dv, _mm256_loadu_pd(irow + ox + kx), acc[kx]);
        }
    }
    alignas(32) double s[4];
    for (int kx = 0; kx < K; ++kx) {
        _mm256_store_pd(s, acc[kx]);
        wrow[kx] += (s[0] + s[2]) + (s[1] + s[3]);
    }
}

void conv2d_bwd_wb_avx2(double* dw, double* db, const double* in, const double* dout,
                        const ConvDims& d) {
    const int oh = d.out_h(), ow = d.out_w(), k = d.kernel;
    const bool plane_ok = ow % 4 == 0;
    for (int oc = 0; oc < d.out_ch; ++oc) {
        const double* dch = dout + static_cast<size_t>(oc) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) db[oc] += sum_avx2(dch + static_cast<size_t>(oy) * ow, ow);
        double* wc = dw + static_cast<size_t>(oc) * d.in_ch * k * k;
        for (int ic = 0; ic < d.in_ch; ++ic) {
            for (int ky = 0; ky < k; ++ky) {
                double* wrow = wc + (static_cast<size_t>(ic) * k + ky) * k;
                if (plane_ok && k == 5) {
                    wb_plane<5>(wrow, in, dch, d, ic, ky);
                    continue;
                }
                if (plane_ok && k == 3) {
                    wb_plane<3>(wrow, in, dch, d, ic, ky);
                    continue;
                }
                for (int kx = 0; kx < k; ++kx) {
                    double s[4] = {0.0, 0.0, 0.0, 0.0};
                    size_t i = 0;
                    for (int oy = 0; oy < oh; ++oy) {
                        const double* drow = dch + static_cast<size_t>(oy) * ow;
                        const double* irow =
                            in + (static_cast<size_t>(ic) * d.in_h + (oy + ky)) * d.in_w + kx;
                        for (int ox = 0; ox < ow; ++ox, ++i)
                            s[i & 3] = std::fma(drow[ox], irow[ox], s[i & 3]);
                    }
                    wrow[kx] += (s[0] + s[2]) + (s[1] + s[3]);
                }
            }
        }
    }
}

void dense_fwd_avx2(double* out, const double* in, const double* w, const double* bias, int in_dim,
                    int out_dim) {
    for (int j = 0; j < out_dim; ++j)
        out[j] = bias[j] + dot_avx2(w + static_cast<size_t>(j) * in_dim, in, in_dim);
}

void dense_bwd_data_avx2(double* din, const double* dout, const double* w, int in_dim,
                         int out_dim) {
    std::memset(din, 0, sizeof(double) * static_cast<size_t>(in_dim));
    for (int j = 0; j < out_dim; ++j)
        row_fma(din, dout[j], w + static_cast<size_t>(j) * in_dim, in_dim);
}

void dense_bwd_wb_avx2(double* dw, double* db, const double* in, const double* dout, int in_dim,
                       int out_dim) {
    for (int j = 0; j < out_dim; ++j) {
        row_fma(dw + static_cast<size_t>(j) * in_dim, dout[j], in, in_dim);
        db[j] += dout[j];
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t = {
        "avx2",
        dot_avx2,
        sum_avx2,
        axpy_avx2,
        relu_avx2,
        relu_bwd_avx2,
        conv2d_fwd_avx2,
        conv2d_bwd_data_avx2,
        conv2d_bwd_wb_avx2,
        dense_fwd_avx2,
        dense_bwd_data_avx2,
        dense_bwd_wb_avx2,
    };
    return t;
}

}  // namespace fedsched::kern

#endif  // x86_64
