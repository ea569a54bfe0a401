#include <cmath>
#include <cstring>

#include "fedsched/kernels.hpp"

// Scalar reference kernels. These define the numeric contract: four-lane
// reduction trees and fused multiply-adds, mirrored exactly by the SIMD
// backends.

namespace fedsched::kern {
namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s[0] = std::fma(a[i], b[i], s[0]);
        s[1] = std::fma(a[i + 1], b[i + 1], s[1]);
        s[2] = std::fma(a[i + 2], b[i + 2], s[2]);
        s[3] = std::fma(a[i + 3], b[i + 3], s[3]);
    }
    for (; i < n; ++i) s[i & 3] = std::fma(a[i], b[i], s[i & 3]);
    return (s[0] + s[2]) + (s[1] + s[3]);
}

double sum_scalar(const double* a, size_t n) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s[0] += a[i];
        s[1] += a[i + 1];
        s[2] += a[i + 2];
        s[3] += a[i + 3];
    }
    for (; i < n; ++i) s[i & 3] += a[i];
    return (s[0] + s[2]) + (s[1] + s[3]);
}

void axpy_scalar(double* y, double alpha, const double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void relu_scalar(double* y, const double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_scalar(double* dx, const double* x, const double* dy, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

// out[oc][oy][ox] = bias[oc] + sum over (ic,ky,kx) of w*in, accumulated in
// (ic,ky,kx) order per output element.
void conv2d_fwd_scalar(double* out, const double* in, const double* w, const double* bias,
                       const ConvDims& d) {
    const int oh = d.out_h(), ow = d.out_w(), k = d.kernel;
    for (int oc = 0; oc < d.out_ch; ++oc) {
        const double* wc = w + static_cast<size_t>(oc) * d.in_ch * k * k;
        for (int oy = 0; oy < oh; ++oy) {
            double* orow = out + (static_cast<size_t>(oc) * oh + oy) * ow;
            for (int ox = 0; ox < ow; ++ox) orow[ox] = bias[oc];
            for (int ic = 0; ic < d.in_ch; ++ic) {
                for (int ky = 0; ky < k; ++ky) {
                    const double* irow =
                        in + (static_cast<size_t>(ic) * d.in_h + (oy + ky)) * d.in_w;
                    const double* wrow = wc + (static_cast<size_t>(ic) * k + ky) * k;
                    for (int kx = 0; kx < k; ++kx) {
                        const double wv = wrow[kx];
                        const double* ishift = irow + kx;
                        for (int ox = 0; ox < ow; ++ox)
                            orow[ox] = std::fma(wv, ishift[ox], orow[ox]);
                    }
                }
            }
        }
    }
}

// din[ic][iy][ix] = sum over (oc, ky, kx) with (iy-ky, ix-kx) inside the
// output plane, accumulated per element in (oc, ky, kx) order.
void conv2d_bwd_data_scalar(double* din, const double* dout, const double* w, const ConvDims& d) {
    const int oh = d.out_h(), ow = d.out_w(), k = d.kernel;
    for (int ic = 0; ic < d.in_ch; ++ic) {
        for (int iy = 0; iy < d.in_h; ++iy) {
            const int ky_lo = iy - oh + 1 > 0 ? iy - oh + 1 : 0;
            const int ky_hi = iy < k - 1 ? iy : k - 1;
            double* irow = din + (static_cast<size_t>(ic) * d.in_h + iy) * d.in_w;
            for (int ix = 0; ix < d.in_w; ++ix) {
                const int kx_lo = ix - ow + 1 > 0 ? ix - ow + 1 : 0;
                const int kx_hi = ix < k - 1 ? ix : k - 1;
                double acc = 0.0;
                for (int oc = 0; oc < d.out_ch; ++oc) {
                    const double* wc =
                        w + (static_cast<size_t>(oc) * d.in_ch + ic) * k * k;
                    const double* dc = dout + static_cast<size_t>(oc) * oh * ow;
                    for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                        const double* drow = dc + static_cast<size_t>(iy - ky) * ow;
                        const double* wrow = wc + static_cast<size_t>(ky) * k;
                        for (int kx = kx_lo; kx <= kx_hi; ++kx)
                            acc = std::fma(wrow[kx], drow[ix - kx], acc);
                    }
                }
                irow[ix] = acc;
            }
        }
    }
}

void conv2d_bwd_wb_scalar(double* dw, double* db, const double* in, const double* dout,
                          const ConvDims& d) {
    const int oh = d.out_h(), ow = d.out_w(), k = d.kernel;
    for (int oc = 0; oc < d.out_ch; ++oc) {
        const double* dch = dout + static_cast<size_t>(oc) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) db[oc] += sum_scalar(dch + static_cast<size_t>(oy) * ow, ow);
        double* wc = dw + static_cast<size_t>(oc) * d.in_ch * k * k;
        for (int ic = 0; ic < d.in_ch; ++ic) {
            for (int ky = 0; ky < k; ++ky) {
                double* wrow = wc + (static_cast<size_t>(ic) * k + ky) * k;
                for (int kx = 0; kx < k; ++kx) {
                    // four partials over the flattened (oy,ox) plane, like dot
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

void dense_fwd_scalar(double* out, const double* in, const double* w, const double* bias,
                      int in_dim, int out_dim) {
    for (int j = 0; j < out_dim; ++j)
        out[j] = bias[j] + dot_scalar(w + static_cast<size_t>(j) * in_dim, in, in_dim);
}

void dense_bwd_data_scalar(double* din, const double* dout, const double* w, int in_dim,
                           int out_dim) {
    std::memset(din, 0, sizeof(double) * static_cast<size_t>(in_dim));
    for (int j = 0; j < out_dim; ++j)
        axpy_scalar(din, dout[j], w + static_cast<size_t>(j) * in_dim, in_dim);
}

void dense_bwd_wb_scalar(double* dw, double* db, const double* in, const double* dout, int in_dim,
                         int out_dim) {
    for (int j = 0; j < out_dim; ++j) {
        axpy_scalar(dw + static_cast<size_t>(j) * in_dim, dout[j], in, in_dim);
        db[j] += dout[j];
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable t = {
        "scalar",
        dot_scalar,
        sum_scalar,
        axpy_scalar,
        relu_scalar,
        relu_bwd_scalar,
        conv2d_fwd_scalar,
        conv2d_bwd_data_scalar,
        conv2d_bwd_wb_scalar,
        dense_fwd_scalar,
        dense_bwd_data_scalar,
        dense_bwd_wb_scalar,
    };
    return t;
}

}  // namespace fedsched::kern
