#include "fedsched/params.hpp"

#include <cmath>

#include "fedsched/rng.hpp"

namespace fedsched {

long long ParamSet::total_count() const {
    long long n = 0;
    for (const LayerParams& l : layers) n += static_cast<long long>(l.w.size() + l.b.size());
    return n;
}

bool ParamSet::all_finite() const {
    for (const LayerParams& l : layers)
        if (!l.w.all_finite() || !l.b.all_finite()) return false;
    return true;
}

int FreezeMask::count_trainable() const {
    int n = 0;
    for (bool t : trainable) n += t ? 1 : 0;
    return n;
}

ParamSet init_params(const ModelArch& arch, uint64_t seed) {
    ParamSet p;
    for (size_t i = 0; i < arch.trainable.size(); ++i) {
        const LayerDesc& d = arch.layers[arch.trainable[i]];
        LayerParams l;
        l.name = d.name;
        size_t fan_in;
        if (d.kind == LayerKind::Conv) {
            fan_in = static_cast<size_t>(d.in_ch) * d.kernel * d.kernel;
            l.w = Tensor::zeros({static_cast<size_t>(d.out_ch), static_cast<size_t>(d.in_ch),
                                 static_cast<size_t>(d.kernel), static_cast<size_t>(d.kernel)});
            l.b = Tensor::zeros({static_cast<size_t>(d.out_ch)});
        } else {
            fan_in = static_cast<size_t>(d.in_dim);
            l.w = Tensor::zeros({static_cast<size_t>(d.out_dim), static_cast<size_t>(d.in_dim)});
            l.b = Tensor::zeros({static_cast<size_t>(d.out_dim)});
        }
        double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
        Rng rng = Rng::stream(seed, {rng_tag::init, static_cast<uint64_t>(i)});
        for (size_t k = 0; k < l.w.size(); ++k) l.w[k] = rng.uniform(-bound, bound);
        p.layers.push_back(std::move(l));
    }
    return p;
}

ParamSet zeros_like(const ParamSet& p) {
    ParamSet z;
    for (const LayerParams& l : p.layers)
        z.layers.push_back({l.name, Tensor::zeros(l.w.shape), Tensor::zeros(l.b.shape)});
    return z;
}

bool bits_equal(const ParamSet& a, const ParamSet& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (size_t i = 0; i < a.layers.size(); ++i)
        if (!bits_equal(a.layers[i].w, b.layers[i].w) || !bits_equal(a.layers[i].b, b.layers[i].b))
            return false;
    return true;
}

std::vector<double*> param_entries(ParamSet& p) {
    std::vector<double*> v;
    for (LayerParams& l : p.layers) {
        for (size_t k = 0; k < l.w.size(); ++k) v.push_back(&l.w[k]);
        for (size_t k = 0; k < l.b.size(); ++k) v.push_back(&l.b[k]);
    }
    return v;
}

std::vector<const double*> param_entries(const ParamSet& p) {
    std::vector<const double*> v;
    for (const LayerParams& l : p.layers) {
        for (size_t k = 0; k < l.w.size(); ++k) v.push_back(l.w.data() + k);
        for (size_t k = 0; k < l.b.size(); ++k) v.push_back(l.b.data() + k);
    }
    return v;
}

}  // namespace fedsched
