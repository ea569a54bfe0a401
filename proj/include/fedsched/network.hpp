#pragma once

#include <cstdint>
#include <vector>

#include "fedsched/arch.hpp"
#include "fedsched/dataset.hpp"
#include "fedsched/params.hpp"

namespace fedsched {

// Stable softmax cross-entropy for one sample. Writes dloss/dlogits when
// dlogits is non-null. Single implementation shared by every backend.
double softmax_cross_entropy(const double* logits, int n, int label, double* dlogits);

// Inference and exact analytic gradients for one architecture. All methods
// are const and allocate their own scratch, so one Network may be shared
// across threads.
class Network {
  public:
    explicit Network(ModelArch a);

    const ModelArch& arch() const { return arch_; }
    const ArchShapes& shapes() const { return shapes_; }

    std::vector<double> forward(const ParamSet& p, const double* x) const;
    // Argmax of the logits; ties go to the lower class index.
    int predict(const ParamSet& p, const double* x) const;

    double sample_loss(const ParamSet& p, const double* x, int label) const;
    // Mean loss over the batch.
    double batch_loss(const ParamSet& p, const Dataset& d, const std::vector<size_t>& idx) const;
    // Mean loss and mean gradient. Gradients are written only for layers with
    // compute_mask.trainable[i]; the rest of `grad` is zeroed. Backprop stops
    // below the lowest unfrozen layer.
    double batch_loss_and_grad(const ParamSet& p, const Dataset& d,
                               const std::vector<size_t>& idx, const FreezeMask& compute_mask,
                               ParamSet& grad) const;

    double accuracy(const ParamSet& p, const Dataset& d, const std::vector<size_t>& idx) const;
    double accuracy(const ParamSet& p, const Dataset& d) const;

  private:
    struct Scratch;
    void forward_into(const ParamSet& p, const double* x, Scratch& s) const;
    void check_params(const ParamSet& p) const;

    ModelArch arch_;
    ArchShapes shapes_;
    std::vector<int> tpos_;  // arch layer index -> trainable position, -1 otherwise
};

// p -= lr * grad on layers with apply_mask.trainable[i]; frozen layers and
// lr == 0 leave the stored bits untouched.
void sgd_step(ParamSet& p, const ParamSet& grad, double lr, const FreezeMask& apply_mask);

struct GradCheckResult {
    double max_rel_err = 0;
    int checked = 0;
    int skipped_kinks = 0;
    bool vacuous() const { return checked == 0; }
};

// Central-difference check of batch_loss_and_grad on up to num_entries
// randomly chosen unfrozen parameter entries. Entries where the one-sided
// slopes disagree (a relu kink within h) are skipped, not counted as
// failures.
GradCheckResult finite_diff_check(const Network& net, const ParamSet& p, const Dataset& d,
                                  const std::vector<size_t>& idx, const FreezeMask& mask,
                                  uint64_t seed, int num_entries = 200, double h = 1e-5);

}  // namespace fedsched
