#pragma once

#include <cstddef>
#include <string>

// Numeric kernels behind the network engine, with a scalar reference
// implementation and an AVX2 variant selected at runtime.
//
// Every kernel obeys a fixed accumulation contract so that all backends
// produce bit-identical results:
//   - multiply-accumulate is fused (std::fma / vfmadd), one rounding per step
//   - reductions (dot, sum) keep four partial sums, element i feeding
//     partial i mod 4, combined at the end as (s0+s2) + (s1+s3)
//   - per-element accumulator chains (conv, dense, axpy) run in the same
//     loop order in every backend; vectorization is across independent
//     output elements only
//   - conv2d_bwd_data gathers: element (ic,iy,ix) is one chain over the
//     valid (oc,ky,kx) window, in that order
//   - conv2d_bwd_wb reduces each dw entry with four partial sums over the
//     flattened (oy,ox) output plane, like dot
// The equivalence test suite checks the backends bit for bit.

namespace fedsched::kern {

enum class Backend { Scalar, Avx2 };

// Square kernel, stride 1, no padding. One sample (no batch dimension);
// layouts are row-major: in (C,H,W), w (OC,IC,K,K), dense w (OUT,IN).
struct ConvDims {
    int in_ch = 0;
    int in_h = 0;
    int in_w = 0;
    int out_ch = 0;
    int kernel = 0;

    int out_h() const { return in_h - kernel + 1; }
    int out_w() const { return in_w - kernel + 1; }
};

struct KernelTable {
    const char* name;

    double (*dot)(const double* a, const double* b, size_t n);
    double (*sum)(const double* a, size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double* y, double alpha, const double* x, size_t n);
    void (*relu)(double* y, const double* x, size_t n);
    // dx[i] = x[i] > 0 ? dy[i] : 0
    void (*relu_bwd)(double* dx, const double* x, const double* dy, size_t n);

    // out assigned (initialized from bias)
    void (*conv2d_fwd)(double* out, const double* in, const double* w, const double* bias,
                       const ConvDims& d);
    // din assigned (every element written)
    void (*conv2d_bwd_data)(double* din, const double* dout, const double* w, const ConvDims& d);
    // dw/db accumulated into (caller zeroes once per batch)
    void (*conv2d_bwd_wb)(double* dw, double* db, const double* in, const double* dout,
                          const ConvDims& d);

    void (*dense_fwd)(double* out, const double* in, const double* w, const double* bias,
                      int in_dim, int out_dim);
    void (*dense_bwd_data)(double* din, const double* dout, const double* w, int in_dim,
                           int out_dim);
    void (*dense_bwd_wb)(double* dw, double* db, const double* in, const double* dout, int in_dim,
                         int out_dim);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif

bool backend_supported(Backend b);
Backend active_backend();
// Throws std::runtime_error if the backend is not supported on this CPU.
void set_backend(Backend b);
// name: "auto" | "scalar" | "avx2"
void select_backend(const std::string& name);
const char* backend_name(Backend b);

const KernelTable& active();

inline double dot(const double* a, const double* b, size_t n) { return active().dot(a, b, n); }
inline double sum(const double* a, size_t n) { return active().sum(a, n); }
inline void axpy(double* y, double alpha, const double* x, size_t n) {
    active().axpy(y, alpha, x, n);
}
inline void relu(double* y, const double* x, size_t n) { active().relu(y, x, n); }
inline void relu_bwd(double* dx, const double* x, const double* dy, size_t n) {
    active().relu_bwd(dx, x, dy, n);
}

}  // namespace fedsched::kern
