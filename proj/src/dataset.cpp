#include "fedsched/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "fedsched/rng.hpp"

namespace fedsched {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::vector<unsigned char> read_all(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("idx: cannot open " + path);
    std::fseek(f.get(), 0, SEEK_END);
    long len = std::ftell(f.get());
    std::fseek(f.get(), 0, SEEK_SET);
    if (len < 0) throw std::runtime_error("idx: cannot read " + path);
    std::vector<unsigned char> buf(static_cast<size_t>(len));
    if (len > 0 && std::fread(buf.data(), 1, buf.size(), f.get()) != buf.size())
        throw std::runtime_error("idx: cannot read " + path);
    return buf;
}

uint32_t be32(const std::vector<unsigned char>& b, size_t off) {
    return (uint32_t(b[off]) << 24) | (uint32_t(b[off + 1]) << 16) | (uint32_t(b[off + 2]) << 8) |
           uint32_t(b[off + 3]);
}

void require_len(const std::vector<unsigned char>& b, size_t need, const std::string& path) {
    if (b.size() < need)
        throw std::runtime_error("idx: " + path + ": truncated (need " + std::to_string(need) +
                                 " bytes, have " + std::to_string(b.size()) + ")");
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::vector<unsigned char> img = read_all(images_path);
    std::vector<unsigned char> lab = read_all(labels_path);

    require_len(img, 16, images_path);
    require_len(lab, 8, labels_path);

    uint32_t img_magic = be32(img, 0);
    if (img_magic != 0x00000803u)
        throw std::runtime_error("idx: " + images_path + ": bad magic " +
                                 std::to_string(img_magic) + " (expected 2051)");
    uint32_t lab_magic = be32(lab, 0);
    if (lab_magic != 0x00000801u)
        throw std::runtime_error("idx: " + labels_path + ": bad magic " +
                                 std::to_string(lab_magic) + " (expected 2049)");

    size_t n_img = be32(img, 4);
    size_t rows = be32(img, 8);
    size_t cols = be32(img, 12);
    size_t n_lab = be32(lab, 4);
    if (n_img != n_lab)
        throw std::runtime_error("idx: image count " + std::to_string(n_img) +
                                 " != label count " + std::to_string(n_lab));
    require_len(img, 16 + n_img * rows * cols, images_path);
    require_len(lab, 8 + n_lab, labels_path);

    Dataset d;
    d.channels = 1;
    d.h = static_cast<int>(rows);
    d.w = static_cast<int>(cols);
    d.images.resize(n_img * rows * cols);
    d.labels.resize(n_lab);
    for (size_t i = 0; i < d.images.size(); ++i) d.images[i] = img[16 + i] / 255.0;
    int max_label = -1;
    for (size_t i = 0; i < n_lab; ++i) {
        d.labels[i] = lab[8 + i];
        max_label = std::max(max_label, d.labels[i]);
    }
    d.num_classes = max_label + 1;
    return d;
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Noise-free template value for class c at pixel (y, x).
double template_value(int c, int num_classes, int h, int w, int y, int x) {
    double theta = kTwoPi * c / num_classes;
    double cy = 0.5 * h + 0.28 * h * std::sin(theta);
    double cx = 0.5 * w + 0.28 * w * std::cos(theta);
    double sigma = std::max(h, w) / 8.0;
    double freq = 1.0 + c % 3;
    double wave = 0.25 + 0.25 * std::sin(kTwoPi * freq * x / w + theta);
    double dy = y - cy, dx = x - cx;
    double bump = 0.7 * std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
    return wave + bump;
}

}  // namespace

Dataset make_synthetic(size_t n, int num_classes, int h, int w, uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("synthetic: need >= 2 classes");
    if (h < 1 || w < 1) throw std::invalid_argument("synthetic: image dims must be positive");
    Dataset d;
    d.channels = 1;
    d.h = h;
    d.w = w;
    d.num_classes = num_classes;
    d.images.resize(n * d.image_size());
    d.labels.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int c = static_cast<int>(i % num_classes);
        d.labels[i] = c;
        Rng rng = Rng::stream(seed, {rng_tag::synthetic, static_cast<uint64_t>(i)});
        double* px = d.image(i);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double v = template_value(c, num_classes, h, w, y, x) + 0.15 * rng.normal();
                px[y * w + x] = std::clamp(v, 0.0, 1.0);
            }
    }
    return d;
}

double synthetic_class_margin(int num_classes, int h, int w) {
    double total = 0;
    int pairs = 0;
    for (int a = 0; a < num_classes; ++a)
        for (int b = a + 1; b < num_classes; ++b) {
            double s = 0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double diff = template_value(a, num_classes, h, w, y, x) -
                                  template_value(b, num_classes, h, w, y, x);
                    s += diff * diff;
                }
            total += std::sqrt(s);
            ++pairs;
        }
    return total / pairs;
}

}  // namespace fedsched
