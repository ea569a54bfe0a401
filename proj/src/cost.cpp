#include "fedsched/cost.hpp"

#include <stdexcept>

namespace fedsched {

CostModel CostModel::from_arch(const ModelArch& arch) {
    ParamCensus census = count_params(arch);
    CostModel m;
    m.per_layer = census.per_layer;
    m.total = census.total;
    m.base_total = census.base_total;
    m.head_total = census.head_total;
    return m;
}

long long CostModel::trainable_params(const FreezeMask& mask) const {
    if (mask.size() != per_layer.size())
        throw std::invalid_argument("cost: mask has " + std::to_string(mask.size()) +
                                    " layers, model has " + std::to_string(per_layer.size()));
    long long n = 0;
    for (size_t i = 0; i < per_layer.size(); ++i)
        if (mask.trainable[i]) n += per_layer[i];
    return n;
}

long long CostModel::round_flops(const FreezeMask& apply_mask, long long samples) const {
    if (samples < 0) throw std::invalid_argument("cost: negative sample count");
    return trainable_params(apply_mask) * samples;
}

long long CostModel::round_comm_params(const FreezeMask& mask, int clients,
                                       bool transmit_frozen) const {
    if (clients < 0) throw std::invalid_argument("cost: negative client count");
    long long per_client = transmit_frozen ? total : trainable_params(mask);
    return per_client * clients;
}

CostReport analytic_cost(const CostModel& model, const SchedulePlan& plan, Mode mode,
                         int clients_per_round, long long samples_per_client, int epochs,
                         bool transmit_frozen) {
    PlanCheck c = validate_plan(plan);
    if (!c.ok) throw std::invalid_argument(c.errors.front());
    if (clients_per_round < 1) throw std::invalid_argument("cost: needs at least one client");
    if (samples_per_client < 0) throw std::invalid_argument("cost: negative sample count");
    if (epochs < 1) throw std::invalid_argument("cost: needs at least one epoch");

    CostReport r;
    long long samples = static_cast<long long>(clients_per_round) * samples_per_client * epochs;
    long long cum = 0;
    for (int t = 0; t < plan.rounds; ++t) {
        FreezeMask mask = trainable_mask(plan, mode, t);
        long long f = model.round_flops(mask, samples);
        cum += f;
        r.round_flops.push_back(f);
        r.cumulative_flops.push_back(cum);
        long long comm = model.round_comm_params(mask, clients_per_round, transmit_frozen);
        r.total_params_up += comm;
        r.total_params_down += comm;
    }
    r.total_flops = cum;
    return r;
}

}  // namespace fedsched
