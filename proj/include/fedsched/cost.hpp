#pragma once

#include <vector>

#include "fedsched/arch.hpp"
#include "fedsched/params.hpp"
#include "fedsched/schedule.hpp"

namespace fedsched {

// Integer cost accounting. Compute is charged as updated-parameter count
// times samples processed; communication as parameter entries per direction.
struct CostModel {
    std::vector<long long> per_layer;  // trainable order, weights + biases
    long long total = 0;
    long long base_total = 0;
    long long head_total = 0;

    static CostModel from_arch(const ModelArch& arch);

    long long trainable_params(const FreezeMask& mask) const;
    long long round_flops(const FreezeMask& apply_mask, long long samples) const;
    // Parameter entries moved in one direction for one round.
    long long round_comm_params(const FreezeMask& mask, int clients, bool transmit_frozen) const;
};

struct CostReport {
    std::vector<long long> round_flops;
    std::vector<long long> cumulative_flops;
    long long total_flops = 0;
    long long total_params_up = 0;
    long long total_params_down = 0;
};

// Closed-form cost of a full run where every round processes
// clients_per_round * samples_per_client * epochs samples under the round's
// mask.
CostReport analytic_cost(const CostModel& model, const SchedulePlan& plan, Mode mode,
                         int clients_per_round, long long samples_per_client, int epochs,
                         bool transmit_frozen);

}  // namespace fedsched
