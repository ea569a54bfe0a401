#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedsched {

// Labeled images, one channel, pixels in [0, 1], stored sample-major.
struct Dataset {
    int channels = 1;
    int h = 0;
    int w = 0;
    int num_classes = 0;
    std::vector<double> images;  // size() * image_size()
    std::vector<int> labels;

    size_t size() const { return labels.size(); }
    size_t image_size() const { return static_cast<size_t>(channels) * h * w; }
    const double* image(size_t i) const { return images.data() + i * image_size(); }
    double* image(size_t i) { return images.data() + i * image_size(); }
};

// Reads an IDX image/label file pair (the MNIST container format,
// big-endian). Bytes map to [0, 1] as value / 255. Throws std::runtime_error
// with distinct messages for a wrong magic number, a truncated file, and an
// image/label count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Deterministic synthetic corpus: class c is a Gaussian bump at a
// class-specific position over a class-specific sinusoid, plus clamped
// Gaussian pixel noise. Labels cycle 0..num_classes-1, so any prefix is
// nearly balanced; sample i depends only on (seed, i).
Dataset make_synthetic(size_t n, int num_classes, int h, int w, uint64_t seed);

// Mean L2 distance between noise-free class templates, used to sanity-check
// separability.
double synthetic_class_margin(int num_classes, int h, int w);

}  // namespace fedsched
