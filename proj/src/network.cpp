#include "fedsched/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "fedsched/kernels.hpp"
#include "fedsched/rng.hpp"

namespace fedsched {

double softmax_cross_entropy(const double* logits, int n, int label, double* dlogits) {
    if (label < 0 || label >= n)
        throw std::out_of_range("loss: label " + std::to_string(label) + " outside [0, " +
                                std::to_string(n) + ")");
    double m = logits[0];
    for (int j = 1; j < n; ++j) m = std::max(m, logits[j]);
    double sumexp = 0;
    for (int j = 0; j < n; ++j) sumexp += std::exp(logits[j] - m);
    double loss = std::log(sumexp) + m - logits[label];
    if (dlogits) {
        for (int j = 0; j < n; ++j) dlogits[j] = std::exp(logits[j] - m) / sumexp;
        dlogits[label] -= 1.0;
    }
    return loss;
}

namespace {

// 2x2 stride-2 max pooling; windows never overlap. argmax holds the flat
// input index of each output's maximum (first hit wins on ties).
void maxpool_fwd(double* out, std::vector<int>& argmax, const double* in, int c, int h, int w) {
    int oh = h / 2, ow = w / 2;
    argmax.resize(static_cast<size_t>(c) * oh * ow);
    size_t o = 0;
    for (int ch = 0; ch < c; ++ch) {
        const double* plane = in + static_cast<size_t>(ch) * h * w;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                int base = (2 * oy) * w + 2 * ox;
                int best = base;
                double bv = plane[base];
                const int cand[3] = {base + 1, base + w, base + w + 1};
                for (int k : cand)
                    if (plane[k] > bv) {
                        bv = plane[k];
                        best = k;
                    }
                out[o] = bv;
                argmax[o] = static_cast<int>(static_cast<size_t>(ch) * h * w) + best;
                ++o;
            }
    }
}

void maxpool_bwd(double* din, const double* dout, const std::vector<int>& argmax, size_t in_n) {
    std::memset(din, 0, in_n * sizeof(double));
    for (size_t j = 0; j < argmax.size(); ++j) din[argmax[j]] = dout[j];
}

}  // namespace

struct Network::Scratch {
    std::vector<Tensor> act;                  // output of each layer
    std::vector<Tensor> dact;                 // gradient wrt each layer output
    std::vector<std::vector<int>> pool_arg;   // per layer; used by MaxPool2
    std::vector<double> dlogits;
};

Network::Network(ModelArch a) : arch_(std::move(a)), shapes_(arch_shapes(arch_)) {
    tpos_.assign(arch_.layers.size(), -1);
    for (size_t t = 0; t < arch_.trainable.size(); ++t) tpos_[arch_.trainable[t]] = (int)t;
}

void Network::check_params(const ParamSet& p) const {
    if (p.layers.size() != arch_.trainable.size())
        throw std::invalid_argument("network: parameter set has " +
                                    std::to_string(p.layers.size()) + " layers, architecture has " +
                                    std::to_string(arch_.trainable.size()));
    for (size_t t = 0; t < p.layers.size(); ++t) {
        const LayerDesc& d = arch_.layers[arch_.trainable[t]];
        const LayerParams& l = p.layers[t];
        size_t want_w, want_b;
        if (d.kind == LayerKind::Conv) {
            want_w = static_cast<size_t>(d.out_ch) * d.in_ch * d.kernel * d.kernel;
            want_b = static_cast<size_t>(d.out_ch);
        } else {
            want_w = static_cast<size_t>(d.out_dim) * d.in_dim;
            want_b = static_cast<size_t>(d.out_dim);
        }
        if (l.w.size() != want_w || l.b.size() != want_b)
            throw std::invalid_argument("network: layer " + d.name + " expects " +
                                        std::to_string(want_w) + "+" + std::to_string(want_b) +
                                        " parameters, got " + std::to_string(l.w.size()) + "+" +
                                        std::to_string(l.b.size()));
    }
}

void Network::forward_into(const ParamSet& p, const double* x, Scratch& s) const {
    if (s.act.empty()) {
        for (const LayerShape& ls : shapes_.out)
            s.act.push_back(Tensor::zeros(
                {static_cast<size_t>(ls.c), static_cast<size_t>(ls.h), static_cast<size_t>(ls.w)}));
        s.pool_arg.resize(arch_.layers.size());
    }
    const double* in = x;
    LayerShape cur = shapes_.input;
    const kern::KernelTable& k = kern::active();
    for (size_t i = 0; i < arch_.layers.size(); ++i) {
        const LayerDesc& d = arch_.layers[i];
        double* out = s.act[i].data();
        switch (d.kind) {
            case LayerKind::Conv: {
                kern::ConvDims cd{d.in_ch, cur.h, cur.w, d.out_ch, d.kernel};
                const LayerParams& l = p.layers[tpos_[i]];
                k.conv2d_fwd(out, in, l.w.data(), l.b.data(), cd);
                break;
            }
            case LayerKind::Relu:
                k.relu(out, in, cur.count());
                break;
            case LayerKind::MaxPool2:
                maxpool_fwd(out, s.pool_arg[i], in, cur.c, cur.h, cur.w);
                break;
            case LayerKind::Flatten:
                std::memcpy(out, in, cur.count() * sizeof(double));
                break;
            case LayerKind::Dense: {
                const LayerParams& l = p.layers[tpos_[i]];
                k.dense_fwd(out, in, l.w.data(), l.b.data(), d.in_dim, d.out_dim);
                break;
            }
        }
        in = out;
        cur = shapes_.out[i];
    }
}

std::vector<double> Network::forward(const ParamSet& p, const double* x) const {
    check_params(p);
    Scratch s;
    forward_into(p, x, s);
    const Tensor& logits = s.act.back();
    return std::vector<double>(logits.data(), logits.data() + logits.size());
}

int Network::predict(const ParamSet& p, const double* x) const {
    std::vector<double> logits = forward(p, x);
    int best = 0;
    for (size_t j = 1; j < logits.size(); ++j)
        if (logits[j] > logits[best]) best = static_cast<int>(j);
    return best;
}

double Network::sample_loss(const ParamSet& p, const double* x, int label) const {
    std::vector<double> logits = forward(p, x);
    return softmax_cross_entropy(logits.data(), static_cast<int>(logits.size()), label, nullptr);
}

double Network::batch_loss(const ParamSet& p, const Dataset& d,
                           const std::vector<size_t>& idx) const {
    check_params(p);
    if (idx.empty()) throw std::invalid_argument("network: empty batch");
    if (d.image_size() != shapes_.input.count())
        throw std::invalid_argument("network: dataset images do not match the input shape");
    Scratch s;
    double sum = 0;
    int classes = static_cast<int>(shapes_.out.back().count());
    for (size_t i : idx) {
        forward_into(p, d.image(i), s);
        sum += softmax_cross_entropy(s.act.back().data(), classes, d.labels[i], nullptr);
    }
    return sum / static_cast<double>(idx.size());
}

double Network::batch_loss_and_grad(const ParamSet& p, const Dataset& d,
                                    const std::vector<size_t>& idx,
                                    const FreezeMask& compute_mask, ParamSet& grad) const {
    check_params(p);
    check_params(grad);
    if (compute_mask.size() != arch_.trainable.size())
        throw std::invalid_argument("network: freeze mask has " +
                                    std::to_string(compute_mask.size()) + " entries, expected " +
                                    std::to_string(arch_.trainable.size()));
    if (idx.empty()) throw std::invalid_argument("network: empty batch");
    if (d.image_size() != shapes_.input.count())
        throw std::invalid_argument("network: dataset images do not match the input shape");

    for (LayerParams& l : grad.layers) {
        std::fill(l.w.data(), l.w.data() + l.w.size(), 0.0);
        std::fill(l.b.data(), l.b.data() + l.b.size(), 0.0);
    }

    // Lowest arch layer whose gradient is needed; backprop does not descend
    // past it.
    int lowest = -1;
    for (size_t t = 0; t < compute_mask.size(); ++t)
        if (compute_mask.trainable[t]) {
            lowest = arch_.trainable[t];
            break;
        }

    Scratch s;
    double sum = 0;
    int classes = static_cast<int>(shapes_.out.back().count());
    const kern::KernelTable& k = kern::active();
    for (size_t i : idx) {
        forward_into(p, d.image(i), s);
        if (s.dact.empty()) {
            for (const Tensor& a : s.act) s.dact.push_back(Tensor::zeros(a.shape));
            s.dlogits.resize(classes);
        }
        sum += softmax_cross_entropy(s.act.back().data(), classes, d.labels[i],
                                     s.dlogits.data());
        if (lowest < 0) continue;  // everything frozen: loss only

        std::memcpy(s.dact.back().data(), s.dlogits.data(), classes * sizeof(double));
        LayerShape cur = shapes_.input;
        for (int li = static_cast<int>(arch_.layers.size()) - 1; li >= lowest; --li) {
            const LayerDesc& dsc = arch_.layers[li];
            LayerShape in_shape = li == 0 ? shapes_.input : shapes_.out[li - 1];
            const double* in = li == 0 ? d.image(i) : s.act[li - 1].data();
            const double* dout = s.dact[li].data();
            double* din = li == 0 ? nullptr : s.dact[li - 1].data();
            bool need_din = li > lowest;
            switch (dsc.kind) {
                case LayerKind::Conv: {
                    kern::ConvDims cd{dsc.in_ch, in_shape.h, in_shape.w, dsc.out_ch,
                                      dsc.kernel};
                    int t = tpos_[li];
                    if (compute_mask.trainable[t]) {
                        LayerParams& g = grad.layers[t];
                        k.conv2d_bwd_wb(g.w.data(), g.b.data(), in, dout, cd);
                    }
                    if (need_din) k.conv2d_bwd_data(din, dout, p.layers[t].w.data(), cd);
                    break;
                }
                case LayerKind::Relu:
                    if (need_din) k.relu_bwd(din, in, dout, in_shape.count());
                    break;
                case LayerKind::MaxPool2:
                    if (need_din) maxpool_bwd(din, dout, s.pool_arg[li], in_shape.count());
                    break;
                case LayerKind::Flatten:
                    if (need_din)
                        std::memcpy(din, dout, in_shape.count() * sizeof(double));
                    break;
                case LayerKind::Dense: {
                    int t = tpos_[li];
                    if (compute_mask.trainable[t]) {
                        LayerParams& g = grad.layers[t];
                        k.dense_bwd_wb(g.w.data(), g.b.data(), in, dout, dsc.in_dim, dsc.out_dim);
                    }
                    if (need_din)
                        k.dense_bwd_data(din, dout, p.layers[t].w.data(), dsc.in_dim,
                                         dsc.out_dim);
                    break;
                }
            }
            cur = in_shape;
        }
        (void)cur;
    }

    double inv_b = 1.0 / static_cast<double>(idx.size());
    for (size_t t = 0; t < grad.layers.size(); ++t) {
        if (!compute_mask.trainable[t]) continue;
        LayerParams& g = grad.layers[t];
        for (size_t j = 0; j < g.w.size(); ++j) g.w[j] *= inv_b;
        for (size_t j = 0; j < g.b.size(); ++j) g.b[j] *= inv_b;
    }
    return sum / static_cast<double>(idx.size());
}

double Network::accuracy(const ParamSet& p, const Dataset& d,
                         const std::vector<size_t>& idx) const {
    if (idx.empty()) return 0.0;
    check_params(p);
    Scratch s;
    int classes = static_cast<int>(shapes_.out.back().count());
    size_t correct = 0;
    for (size_t i : idx) {
        forward_into(p, d.image(i), s);
        const double* logits = s.act.back().data();
        int best = 0;
        for (int j = 1; j < classes; ++j)
            if (logits[j] > logits[best]) best = j;
        if (best == d.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

double Network::accuracy(const ParamSet& p, const Dataset& d) const {
    std::vector<size_t> idx(d.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return accuracy(p, d, idx);
}

void sgd_step(ParamSet& p, const ParamSet& grad, double lr, const FreezeMask& apply_mask) {
    if (p.layers.size() != grad.layers.size() || apply_mask.size() != p.layers.size())
        throw std::invalid_argument("sgd: parameter, gradient and mask sizes disagree");
    if (lr == 0.0) return;
    const kern::KernelTable& k = kern::active();
    for (size_t t = 0; t < p.layers.size(); ++t) {
        if (!apply_mask.trainable[t]) continue;
        LayerParams& l = p.layers[t];
        const LayerParams& g = grad.layers[t];
        if (l.w.size() != g.w.size() || l.b.size() != g.b.size())
            throw std::invalid_argument("sgd: gradient shape mismatch in layer " + l.name);
        k.axpy(l.w.data(), -lr, g.w.data(), l.w.size());
        k.axpy(l.b.data(), -lr, g.b.data(), l.b.size());
    }
}

GradCheckResult finite_diff_check(const Network& net, const ParamSet& p, const Dataset& d,
                                  const std::vector<size_t>& idx, const FreezeMask& mask,
                                  uint64_t seed, int num_entries, double h) {
    ParamSet grad = zeros_like(p);
    net.batch_loss_and_grad(p, d, idx, mask, grad);

    // Flat index space over unfrozen layers, weights then bias per layer.
    std::vector<size_t> layer_of;
    std::vector<size_t> first;  // running start offset per unfrozen layer
    size_t total = 0;
    for (size_t t = 0; t < p.layers.size(); ++t) {
        if (!mask.trainable[t]) continue;
        layer_of.push_back(t);
        first.push_back(total);
        total += p.layers[t].w.size() + p.layers[t].b.size();
    }
    GradCheckResult r;
    if (total == 0) return r;

    Rng rng = Rng::stream(seed, {rng_tag::grad_check});
    std::vector<size_t> picks;
    if (total <= static_cast<size_t>(num_entries)) {
        picks.resize(total);
        for (size_t i = 0; i < total; ++i) picks[i] = i;
    } else {
        std::vector<int> sampled =
            rng.sample_without_replacement(static_cast<int>(total), num_entries);
        picks.assign(sampled.begin(), sampled.end());
    }

    ParamSet work = p;
    double l0 = net.batch_loss(work, d, idx);
    for (size_t flat : picks) {
        size_t seg = 0;
        while (seg + 1 < first.size() && first[seg + 1] <= flat) ++seg;
        size_t t = layer_of[seg];
        size_t within = flat - first[seg];
        LayerParams& l = work.layers[t];
        double* slot = within < l.w.size() ? &l.w[within] : &l.b[within - l.w.size()];
        const LayerParams& g = grad.layers[t];
        double analytic =
            within < l.w.size() ? g.w[within] : g.b[within - l.w.size()];

        double orig = *slot;
        *slot = orig + h;
        double lp = net.batch_loss(work, d, idx);
        *slot = orig - h;
        double lm = net.batch_loss(work, d, idx);
        *slot = orig;

        double d_plus = (lp - l0) / h;
        double d_minus = (l0 - lm) / h;
        if (std::abs(d_plus - d_minus) >
            1e-2 * std::max({std::abs(d_plus), std::abs(d_minus), 1.0})) {
            ++r.skipped_kinks;
            continue;
        }
        double numeric = (lp - lm) / (2.0 * h);
        double rel = std::abs(analytic - numeric) /
                     std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        r.max_rel_err = std::max(r.max_rel_err, rel);
        ++r.checked;
    }
    return r;
}

}  // namespace fedsched
