#pragma once

#include <string>
#include <vector>

namespace fedsched {

enum class LayerKind { Conv, Relu, MaxPool2, Flatten, Dense };

struct LayerDesc {
    LayerKind kind = LayerKind::Relu;
    std::string name;  // set for trainable layers (Conv, Dense)

    // Conv: square kernel, stride 1, no padding
    int in_ch = 0, out_ch = 0, kernel = 0;
    // Dense
    int in_dim = 0, out_dim = 0;

    static LayerDesc conv(std::string name, int in_ch, int out_ch, int kernel);
    static LayerDesc relu();
    static LayerDesc maxpool2();  // 2x2, stride 2
    static LayerDesc flatten();
    static LayerDesc dense(std::string name, int in_dim, int out_dim);
};

// Feed-forward architecture plus the base/head split. Trainable layers are
// the Conv and Dense layers in order; the head is the last one, the K layers
// before it form the base.
struct ModelArch {
    std::vector<LayerDesc> layers;
    int in_channels = 1;
    int in_h = 28;
    int in_w = 28;
    int num_classes = 10;

    std::vector<int> trainable;  // indices into layers
    int head_index = -1;         // position of the head within `trainable`

    int num_trainable() const { return static_cast<int>(trainable.size()); }
    int base_layer_count() const { return num_trainable() - 1; }  // K
    bool empty() const { return layers.empty(); }

    // conv(C->32,5x5) relu pool conv(32->64,5x5) relu pool flatten
    // dense(.->512) relu dense(512->classes)
    static ModelArch reference(int num_classes = 10, int in_channels = 1, int in_h = 28,
                               int in_w = 28);

    // dims = {input, hidden..., classes}; relu between dense layers
    static ModelArch dense_net(const std::vector<int>& dims, bool relu_between = true);
};

struct LayerShape {
    int c = 0, h = 0, w = 0;
    size_t count() const { return static_cast<size_t>(c) * h * w; }
};

struct ArchShapes {
    LayerShape input;
    std::vector<LayerShape> out;  // one per layer
};

// Propagates shapes through the architecture; throws naming the offending
// layer on any inconsistency.
ArchShapes arch_shapes(const ModelArch& arch);

// Full validation for simulation use (shape consistency, K >= 1, head last).
void validate_arch(const ModelArch& arch);

struct LayerParamCount {
    std::string name;
    long long weight = 0;
    long long bias = 0;
    long long total() const { return weight + bias; }
};

struct ParamCensus {
    std::vector<LayerParamCount> layers;  // trainable order
    std::vector<long long> per_layer;     // weight+bias per trainable layer
    long long total = 0;
    long long base_total = 0;
    long long head_total = 0;
};

ParamCensus count_params(const ModelArch& arch);

}  // namespace fedsched
