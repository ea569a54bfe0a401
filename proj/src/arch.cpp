#include "fedsched/arch.hpp"

#include <stdexcept>

namespace fedsched {

namespace {

const char* kind_str(LayerKind k) {
    switch (k) {
        case LayerKind::Conv: return "conv";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2: return "maxpool2";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
    }
    return "?";
}

[[noreturn]] void arch_error(size_t idx, const LayerDesc& d, const std::string& what) {
    std::string label = d.name.empty() ? kind_str(d.kind) : d.name;
    throw std::invalid_argument("arch: layer " + std::to_string(idx) + " (" + label + "): " +
                                what);
}

void index_trainable(ModelArch& a) {
    a.trainable.clear();
    for (size_t i = 0; i < a.layers.size(); ++i) {
        LayerKind k = a.layers[i].kind;
        if (k == LayerKind::Conv || k == LayerKind::Dense)
            a.trainable.push_back(static_cast<int>(i));
    }
    a.head_index = static_cast<int>(a.trainable.size()) - 1;
}

}  // namespace

LayerDesc LayerDesc::conv(std::string name, int in_ch, int out_ch, int kernel) {
    LayerDesc d;
    d.kind = LayerKind::Conv;
    d.name = std::move(name);
    d.in_ch = in_ch;
    d.out_ch = out_ch;
    d.kernel = kernel;
    return d;
}

LayerDesc LayerDesc::relu() {
    LayerDesc d;
    d.kind = LayerKind::Relu;
    return d;
}

LayerDesc LayerDesc::maxpool2() {
    LayerDesc d;
    d.kind = LayerKind::MaxPool2;
    return d;
}

LayerDesc LayerDesc::flatten() {
    LayerDesc d;
    d.kind = LayerKind::Flatten;
    return d;
}

LayerDesc LayerDesc::dense(std::string name, int in_dim, int out_dim) {
    LayerDesc d;
    d.kind = LayerKind::Dense;
    d.name = std::move(name);
    d.in_dim = in_dim;
    d.out_dim = out_dim;
    return d;
}

ModelArch ModelArch::reference(int num_classes, int in_channels, int in_h, int in_w) {
    ModelArch a;
    a.in_channels = in_channels;
    a.in_h = in_h;
    a.in_w = in_w;
    a.num_classes = num_classes;

    int h = in_h - 4, w = in_w - 4;  // 5x5 conv
    h /= 2;
    w /= 2;
    a.layers.push_back(LayerDesc::conv("conv1", in_channels, 32, 5));
    a.layers.push_back(LayerDesc::relu());
    a.layers.push_back(LayerDesc::maxpool2());
    h -= 4;
    w -= 4;
    h /= 2;
    w /= 2;
    a.layers.push_back(LayerDesc::conv("conv2", 32, 64, 5));
    a.layers.push_back(LayerDesc::relu());
    a.layers.push_back(LayerDesc::maxpool2());
    a.layers.push_back(LayerDesc::flatten());
    a.layers.push_back(LayerDesc::dense("fc1", 64 * h * w, 512));
    a.layers.push_back(LayerDesc::relu());
    a.layers.push_back(LayerDesc::dense("fc2", 512, num_classes));
    index_trainable(a);
    validate_arch(a);
    return a;
}

ModelArch ModelArch::dense_net(const std::vector<int>& dims, bool relu_between) {
    if (dims.size() < 2) throw std::invalid_argument("arch: dense_net needs >= 2 dims");
    ModelArch a;
    a.in_channels = 1;
    a.in_h = 1;
    a.in_w = dims.front();
    a.num_classes = dims.back();
    a.layers.push_back(LayerDesc::flatten());
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        a.layers.push_back(
            LayerDesc::dense("fc" + std::to_string(i + 1), dims[i], dims[i + 1]));
        if (relu_between && i + 2 < dims.size()) a.layers.push_back(LayerDesc::relu());
    }
    index_trainable(a);
    arch_shapes(a);
    return a;
}

ArchShapes arch_shapes(const ModelArch& arch) {
    if (arch.layers.empty()) throw std::invalid_argument("arch: no layers");
    if (arch.in_channels < 1 || arch.in_h < 1 || arch.in_w < 1)
        throw std::invalid_argument("arch: input shape must be positive");

    ArchShapes s;
    s.input = {arch.in_channels, arch.in_h, arch.in_w};
    LayerShape cur = s.input;
    for (size_t i = 0; i < arch.layers.size(); ++i) {
        const LayerDesc& d = arch.layers[i];
        switch (d.kind) {
            case LayerKind::Conv:
                if (d.in_ch < 1 || d.out_ch < 1 || d.kernel < 1)
                    arch_error(i, d, "conv dims must be positive");
                if (cur.c != d.in_ch)
                    arch_error(i, d,
                               "expects " + std::to_string(d.in_ch) + " channels, input has " +
                                   std::to_string(cur.c));
                if (cur.h < d.kernel || cur.w < d.kernel)
                    arch_error(i, d, "input smaller than kernel");
                cur = {d.out_ch, cur.h - d.kernel + 1, cur.w - d.kernel + 1};
                break;
            case LayerKind::Relu:
                break;
            case LayerKind::MaxPool2:
                if (cur.h < 2 || cur.w < 2) arch_error(i, d, "input smaller than 2x2 window");
                cur = {cur.c, cur.h / 2, cur.w / 2};
                break;
            case LayerKind::Flatten:
                cur = {1, 1, static_cast<int>(cur.count())};
                break;
            case LayerKind::Dense:
                if (d.in_dim < 1 || d.out_dim < 1)
                    arch_error(i, d, "dense dims must be positive");
                if (cur.count() != static_cast<size_t>(d.in_dim))
                    arch_error(i, d,
                               "expects " + std::to_string(d.in_dim) + " inputs, got " +
                                   std::to_string(cur.count()));
                cur = {1, 1, d.out_dim};
                break;
        }
        s.out.push_back(cur);
    }
    return s;
}

void validate_arch(const ModelArch& arch) {
    ArchShapes s = arch_shapes(arch);
    if (arch.trainable.empty()) throw std::invalid_argument("arch: no trainable layers");
    if (arch.head_index != static_cast<int>(arch.trainable.size()) - 1)
        throw std::invalid_argument("arch: head must be the last trainable layer");
    if (arch.base_layer_count() < 1)
        throw std::invalid_argument("arch: needs at least one base layer besides the head");
    const LayerDesc& head = arch.layers[arch.trainable.back()];
    int out = head.kind == LayerKind::Dense ? head.out_dim : head.out_ch;
    if (out != arch.num_classes)
        throw std::invalid_argument("arch: head outputs " + std::to_string(out) + ", expected " +
                                    std::to_string(arch.num_classes) + " classes");
    if (s.out.back().count() != static_cast<size_t>(arch.num_classes))
        throw std::invalid_argument("arch: final shape is not the class count");
}

ParamCensus count_params(const ModelArch& arch) {
    ParamCensus c;
    for (int idx : arch.trainable) {
        const LayerDesc& d = arch.layers[idx];
        LayerParamCount lc;
        lc.name = d.name;
        if (d.kind == LayerKind::Conv) {
            lc.weight = 1LL * d.out_ch * d.in_ch * d.kernel * d.kernel;
            lc.bias = d.out_ch;
        } else {
            lc.weight = 1LL * d.out_dim * d.in_dim;
            lc.bias = d.out_dim;
        }
        c.per_layer.push_back(lc.total());
        c.total += lc.total();
        c.layers.push_back(std::move(lc));
    }
    for (size_t i = 0; i < c.per_layer.size(); ++i) {
        if (static_cast<int>(i) == arch.head_index)
            c.head_total += c.per_layer[i];
        else
            c.base_total += c.per_layer[i];
    }
    return c;
}

}  // namespace fedsched
