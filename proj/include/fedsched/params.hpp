#pragma once

#include <cstdint>
#include <vector>

#include "fedsched/arch.hpp"
#include "fedsched/tensor.hpp"

namespace fedsched {

struct LayerParams {
    std::string name;
    Tensor w;
    Tensor b;
};

// Weights and biases for the trainable layers of one architecture, in
// trainable order (base layers first, head last).
struct ParamSet {
    std::vector<LayerParams> layers;

    size_t num_layers() const { return layers.size(); }
    long long total_count() const;
    bool all_finite() const;
};

// Per-trainable-layer freeze state; trainable[i] == false means layer i is
// frozen (both weight and bias).
struct FreezeMask {
    std::vector<bool> trainable;

    static FreezeMask all(size_t n, bool value) { return FreezeMask{std::vector<bool>(n, value)}; }
    size_t size() const { return trainable.size(); }
    bool operator==(const FreezeMask& o) const { return trainable == o.trainable; }
    int count_trainable() const;
};

// Weights uniform in [-sqrt(1/fan_in), sqrt(1/fan_in)], biases zero; each
// layer draws from its own stream of `seed` so the values of one layer do
// not depend on the sizes of the others.
ParamSet init_params(const ModelArch& arch, uint64_t seed);

ParamSet zeros_like(const ParamSet& p);

bool bits_equal(const ParamSet& a, const ParamSet& b);

// Flat views used by the finite-difference checker.
std::vector<double*> param_entries(ParamSet& p);
std::vector<const double*> param_entries(const ParamSet& p);

}  // namespace fedsched
