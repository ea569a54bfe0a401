#include <cstring>
#include <vector>
#include <string>

#include <doctest.h>

#include "fedsched/kernels.hpp"
#include "fedsched/rng.hpp"

using namespace fedsched;
using namespace fedsched::kern;

namespace {

std::vector<double> random_vec(size_t n, uint64_t key, double lo = -2.0, double hi = 2.0) {
    Rng rng(key);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

bool bits_same(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

bool bits_same(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

const std::vector<size_t> kSizes = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 32, 33, 64, 100, 1023};

struct ConvCase {
    ConvDims d;
    const char* label;
};

const ConvCase kConvCases[] = {
    {{1, 28, 28, 32, 5}, "input stage"},
    {{32, 12, 12, 64, 5}, "mid stage"},
    {{1, 5, 5, 2, 3}, "tiny"},
    {{3, 7, 9, 4, 3}, "non-square"},
    {{2, 6, 6, 3, 1}, "1x1 kernel"},
    {{4, 5, 5, 1, 5}, "full-window"},
    {{2, 10, 10, 3, 3}, "k3 aligned"},
    {{1, 8, 8, 2, 5}, "narrow aligned"},
    {{2, 16, 17, 3, 5}, "odd width"},
};

struct DenseCase {
    int in, out;
};

const DenseCase kDenseCases[] = {{1, 1}, {3, 5}, {17, 9}, {10, 3}, {1024, 512}, {512, 10}};

}  // namespace

TEST_CASE("scalar reduction kernels match hand values") {
    const double a[5] = {1, 2, 3, 4, 5};
    const double b[5] = {4, 5, 6, 7, 8};
    const KernelTable& t = scalar_table();
    CHECK(t.dot(a, b, 3) == 32.0);
    CHECK(t.dot(a, b, 5) == 32.0 + 28 + 40);
    CHECK(t.dot(a, b, 0) == 0.0);
    std::vector<double> ones(100, 1.0);
    CHECK(t.sum(ones.data(), 100) == 100.0);
    std::vector<double> seq(100);
    for (size_t i = 0; i < 100; ++i) seq[i] = static_cast<double>(i + 1);
    CHECK(t.sum(seq.data(), 100) == 5050.0);
}

TEST_CASE("scalar relu and axpy") {
    const KernelTable& t = scalar_table();
    const double x[4] = {-1.0, 0.0, 2.5, -0.0};
    double y[4];
    t.relu(y, x, 4);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 2.5);
    CHECK(y[3] == 0.0);

    const double dy[4] = {10, 20, 30, 40};
    double dx[4];
    t.relu_bwd(dx, x, dy, 4);
    CHECK(dx[0] == 0.0);
    CHECK(dx[1] == 0.0);  // derivative at exactly zero is zero
    CHECK(dx[2] == 30.0);
    CHECK(dx[3] == 0.0);

    double acc[3] = {1, 1, 1};
    const double v[3] = {1, 2, 3};
    t.axpy(acc, 2.0, v, 3);
    CHECK(acc[0] == 3.0);
    CHECK(acc[1] == 5.0);
    CHECK(acc[2] == 7.0);
}

TEST_CASE("backends exist and dispatch honors explicit selection") {
    CHECK(backend_supported(Backend::Scalar));
    set_backend(Backend::Scalar);
    CHECK(active_backend() == Backend::Scalar);
    CHECK(std::string(scalar_table().name) == "scalar");
    if (backend_supported(Backend::Avx2)) {
        select_backend("avx2");
        CHECK(active_backend() == Backend::Avx2);
    } else {
        CHECK_THROWS_AS(set_backend(Backend::Avx2), std::runtime_error);
    }
    CHECK_THROWS_AS(select_backend("neon"), std::runtime_error);
    select_backend("auto");
}

#if defined(__x86_64__) || defined(_M_X64)

TEST_CASE("avx2 reductions are bit-identical to scalar") {
    if (!backend_supported(Backend::Avx2)) return;
    const KernelTable& s = scalar_table();
    const KernelTable& v = avx2_table();
    for (size_t n : kSizes) {
        std::vector<double> a = random_vec(n, 11 * n + 1);
        std::vector<double> b = random_vec(n, 13 * n + 7, -3.0, 3.0);
        CAPTURE(n);
        CHECK(bits_same(s.dot(a.data(), b.data(), n), v.dot(a.data(), b.data(), n)));
        CHECK(bits_same(s.sum(a.data(), n), v.sum(a.data(), n)));

        std::vector<double> y1 = random_vec(n, 17 * n + 3);
        std::vector<double> y2 = y1;
        s.axpy(y1.data(), 0.37, b.data(), n);
        v.axpy(y2.data(), 0.37, b.data(), n);
        CHECK(bits_same(y1, y2));

        std::vector<double> r1(n), r2(n);
        s.relu(r1.data(), a.data(), n);
        v.relu(r2.data(), a.data(), n);
        CHECK(bits_same(r1, r2));

        s.relu_bwd(r1.data(), a.data(), b.data(), n);
        v.relu_bwd(r2.data(), a.data(), b.data(), n);
        CHECK(bits_same(r1, r2));
    }
}

TEST_CASE("avx2 conv kernels are bit-identical to scalar") {
    if (!backend_supported(Backend::Avx2)) return;
    const KernelTable& s = scalar_table();
    const KernelTable& v = avx2_table();
    for (const ConvCase& c : kConvCases) {
        CAPTURE(std::string(c.label));
        const ConvDims& d = c.d;
        size_t in_n = static_cast<size_t>(d.in_ch) * d.in_h * d.in_w;
        size_t w_n = static_cast<size_t>(d.out_ch) * d.in_ch * d.kernel * d.kernel;
        size_t out_n = static_cast<size_t>(d.out_ch) * d.out_h() * d.out_w();
        std::vector<double> in = random_vec(in_n, 101 + in_n);
        std::vector<double> w = random_vec(w_n, 211 + w_n, -0.5, 0.5);
        std::vector<double> bias = random_vec(d.out_ch, 307 + w_n);
        std::vector<double> dout = random_vec(out_n, 401 + out_n);

        std::vector<double> o1(out_n), o2(out_n);
        s.conv2d_fwd(o1.data(), in.data(), w.data(), bias.data(), d);
        v.conv2d_fwd(o2.data(), in.data(), w.data(), bias.data(), d);
        CHECK(bits_same(o1, o2));

        std::vector<double> di1(in_n), di2(in_n);
        s.conv2d_bwd_data(di1.data(), dout.data(), w.data(), d);
        v.conv2d_bwd_data(di2.data(), dout.data(), w.data(), d);
        CHECK(bits_same(di1, di2));

        std::vector<double> dw1 = random_vec(w_n, 877);  // nonzero: bwd_wb accumulates
        std::vector<double> dw2 = dw1;
        std::vector<double> db1 = random_vec(d.out_ch, 881);
        std::vector<double> db2 = db1;
        s.conv2d_bwd_wb(dw1.data(), db1.data(), in.data(), dout.data(), d);
        v.conv2d_bwd_wb(dw2.data(), db2.data(), in.data(), dout.data(), d);
        CHECK(bits_same(dw1, dw2));
        CHECK(bits_same(db1, db2));
    }
}

TEST_CASE("avx2 dense kernels are bit-identical to scalar") {
    if (!backend_supported(Backend::Avx2)) return;
    const KernelTable& s = scalar_table();
    const KernelTable& v = avx2_table();
    for (const DenseCase& c : kDenseCases) {
        CAPTURE(c.in);
        CAPTURE(c.out);
        size_t w_n = static_cast<size_t>(c.in) * c.out;
        std::vector<double> in = random_vec(c.in, 1009 + w_n);
        std::vector<double> w = random_vec(w_n, 2003 + w_n, -0.2, 0.2);
        std::vector<double> bias = random_vec(c.out, 3001 + w_n);
        std::vector<double> dout = random_vec(c.out, 4001 + w_n);

        std::vector<double> o1(c.out), o2(c.out);
        s.dense_fwd(o1.data(), in.data(), w.data(), bias.data(), c.in, c.out);
        v.dense_fwd(o2.data(), in.data(), w.data(), bias.data(), c.in, c.out);
        CHECK(bits_same(o1, o2));

        std::vector<double> di1(c.in), di2(c.in);
        s.dense_bwd_data(di1.data(), dout.data(), w.data(), c.in, c.out);
        v.dense_bwd_data(di2.data(), dout.data(), w.data(), c.in, c.out);
        CHECK(bits_same(di1, di2));

        std::vector<double> dw1 = random_vec(w_n, 5003);
        std::vector<double> dw2 = dw1;
        std::vector<double> db1 = random_vec(c.out, 6007);
        std::vector<double> db2 = db1;
        s.dense_bwd_wb(dw1.data(), db1.data(), in.data(), dout.data(), c.in, c.out);
        v.dense_bwd_wb(dw2.data(), db2.data(), in.data(), dout.data(), c.in, c.out);
        CHECK(bits_same(dw1, dw2));
        CHECK(bits_same(db1, db2));
    }
}

#endif  // x86_64
