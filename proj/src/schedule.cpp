#include "fedsched/schedule.hpp"

#include <stdexcept>

namespace fedsched {

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Vanilla: return "vanilla";
        case Mode::Anti: return "anti";
        case Mode::FedAvg: return "fedavg";
        case Mode::FedBABU: return "fedbabu";
    }
    return "?";
}

Mode parse_mode(const std::string& s) {
    if (s == "vanilla") return Mode::Vanilla;
    if (s == "anti") return Mode::Anti;
    if (s == "fedavg") return Mode::FedAvg;
    if (s == "fedbabu") return Mode::FedBABU;
    throw std::invalid_argument("mode: unknown value '" + s +
                                "' (expected vanilla, anti, fedavg or fedbabu)");
}

PlanCheck validate_plan(const SchedulePlan& plan) {
    PlanCheck c;
    auto err = [&](std::string m) { c.errors.push_back(std::move(m)); };
    if (plan.base_layers < 1) err("plan: needs at least one base layer");
    if (plan.rounds < 1) err("plan: needs at least one round");
    if (static_cast<int>(plan.thresholds.size()) != plan.base_layers)
        err("plan: " + std::to_string(plan.thresholds.size()) + " thresholds for " +
            std::to_string(plan.base_layers) + " base layers");
    if (!plan.thresholds.empty()) {
        if (plan.thresholds.front() != 0)
            err("plan: first threshold is " + std::to_string(plan.thresholds.front()) +
                ", must be 0 so training starts with one active layer");
        for (size_t k = 1; k < plan.thresholds.size(); ++k)
            if (plan.thresholds[k] < plan.thresholds[k - 1])
                err("plan: thresholds must be non-decreasing (t[" + std::to_string(k) + "] = " +
                    std::to_string(plan.thresholds[k]) + " < t[" + std::to_string(k - 1) +
                    "] = " + std::to_string(plan.thresholds[k - 1]) + ")");
        if (plan.rounds > 0 && plan.thresholds.back() >= plan.rounds)
            err("plan: last threshold " + std::to_string(plan.thresholds.back()) +
                " never activates within " + std::to_string(plan.rounds) + " rounds");
        else if (plan.rounds > 0 && plan.thresholds.back() > plan.rounds / 2)
            c.warnings.push_back("plan: last threshold " +
                                 std::to_string(plan.thresholds.back()) +
                                 " leaves under half the rounds fully unfrozen");
    }
    c.ok = c.errors.empty();
    return c;
}

FreezeMask trainable_mask(const SchedulePlan& plan, Mode mode, int round) {
    PlanCheck c = validate_plan(plan);
    if (!c.ok) throw std::invalid_argument(c.errors.front());
    if (round < 0 || round >= plan.rounds)
        throw std::out_of_range("plan: round " + std::to_string(round) + " outside [0, " +
                                std::to_string(plan.rounds) + ")");
    int K = plan.base_layers;
    FreezeMask m = FreezeMask::all(static_cast<size_t>(K) + 1, false);
    switch (mode) {
        case Mode::FedAvg:
            for (size_t i = 0; i < m.size(); ++i) m.trainable[i] = true;
            break;
        case Mode::FedBABU:
            for (int i = 0; i < K; ++i) m.trainable[i] = true;
            break;
        case Mode::Vanilla:
        case Mode::Anti: {
            int active = 0;
            for (int t : plan.thresholds)
                if (t <= round) ++active;
            if (mode == Mode::Vanilla)
                for (int i = 0; i < active; ++i) m.trainable[i] = true;
            else
                for (int i = 0; i < active; ++i) m.trainable[K - 1 - i] = true;
            break;
        }
    }
    return m;
}

}  // namespace fedsched
