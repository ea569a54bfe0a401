#pragma once

#include <string>
#include <vector>

#include "fedsched/params.hpp"

namespace fedsched {

enum class Mode { Vanilla, Anti, FedAvg, FedBABU };

const char* mode_name(Mode m);
Mode parse_mode(const std::string& s);  // throws on unknown names

// Unfreeze schedule for the K base layers over T training rounds. Threshold
// t[k] is the first round in which stage k+1 is active.
struct SchedulePlan {
    int base_layers = 0;           // K
    int rounds = 0;                // T
    std::vector<int> thresholds;   // ascending, size K, t[0] == 0
};

struct PlanCheck {
    bool ok = true;
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
};

PlanCheck validate_plan(const SchedulePlan& plan);

// Mask over the K+1 trainable layers (base in order, head last) for round
// `round` (0-based). The number of active stages is the count of thresholds
// <= round. Vanilla activates base layers from the input side, Anti from the
// output side; the head stays frozen in both, and in FedBABU. FedAvg trains
// everything.
FreezeMask trainable_mask(const SchedulePlan& plan, Mode mode, int round);

}  // namespace fedsched
