#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsched/cost.hpp"
#include "fedsched/dataset.hpp"
#include "fedsched/metrics.hpp"
#include "fedsched/network.hpp"
#include "fedsched/partition.hpp"
#include "fedsched/schedule.hpp"

namespace fedsched {

struct ExperimentConfig {
    Mode mode = Mode::Vanilla;
    int clients = 100;              // N
    double join_ratio = 0.1;        // fraction participating per round
    int rounds = 300;               // T
    int local_epochs = 1;           // E
    int finetune_epochs = 5;        // F, full-model, every client
    int batch_size = 10;
    double lr = 0.005;
    int eval_every = 10;            // global eval cadence in rounds
    uint64_t seed = 1;
    double alpha = 0.5;             // partition skew
    double test_fraction = 0.25;
    std::vector<int> thresholds = {0, 100, 200};
    bool transmit_frozen = false;
    std::string corpus = "synthetic";  // synthetic | mnist
    long long synthetic_examples = 8000;
    std::string mnist_dir;
    int threads = 1;

    int clients_per_round() const;  // max(1, floor(join_ratio * clients))
    bool operator==(const ExperimentConfig& o) const;
};

// Ranges and cross-field rules; empty result means usable.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

struct ClientUpdate {
    int client_id = 0;
    ParamSet params;
    long long n_train = 0;  // aggregation weight
    double mean_loss = 0;   // mean over optimizer steps
    long long samples_processed = 0;
};

struct RunSummary {
    std::vector<RoundMetrics> rounds;
    std::vector<ClientRecord> clients;  // fine-tuning results, all clients
    long long total_flops = 0;
    long long total_params_up = 0;
    long long total_params_down = 0;
    double final_eval_acc = -1;      // global model, last evaluated round
    double mean_finetuned_acc = 0;   // over clients with test examples
    std::string corpus;
    std::string backend;
};

// Participants for one round: m distinct ids out of n, ascending, drawn from
// the round's own stream of `seed`.
std::vector<int> sample_clients(int n, int m, int round, uint64_t seed);

// One client's local pass: epochs x (seeded shuffle, batched SGD) starting
// from `global`. Gradients use compute_mask, the step uses apply_mask, so a
// layer may be differentiated without being updated. Deterministic in
// (seed, round, client_id).
ClientUpdate local_update(const Network& net, const Dataset& d, const ClientShard& shard,
                          const ParamSet& global, const FreezeMask& compute_mask,
                          const FreezeMask& apply_mask, double lr, int batch_size, int epochs,
                          uint64_t seed, int round, int client_id);

// Sample-count weighted average of the updates on unfrozen layers, summed in
// ascending client order; frozen layers keep the server's bits. Updates with
// no training data carry zero weight; if none carry weight the result is
// `global` unchanged.
ParamSet aggregate(const ParamSet& global, const std::vector<ClientUpdate>& updates,
                   const FreezeMask& apply_mask);

// Full-model fine-tuning of `global` on one client's shard, then accuracy on
// its test split.
ClientRecord fine_tune_client(const Network& net, const Dataset& d, const ClientShard& shard,
                              const ParamSet& global, double lr, int batch_size, int epochs,
                              uint64_t seed, int client_id);

// One federated run bound to a fixed dataset and partition.
class Simulation {
  public:
    Simulation(ExperimentConfig cfg, Dataset data, PartitionReport part);

    const ExperimentConfig& config() const { return cfg_; }
    const Network& network() const { return net_; }
    const Dataset& data() const { return data_; }
    const PartitionReport& partition() const { return part_; }
    const SchedulePlan& plan() const { return plan_; }
    const ParamSet& global() const { return global_; }
    int round() const { return round_; }

    FreezeMask apply_mask(int round) const;
    FreezeMask compute_mask(int round) const;
    double global_test_accuracy() const;  // on the union of client test splits

    RoundMetrics step();                     // one training round
    std::vector<ClientRecord> fine_tune();   // every client, from the current global
    RunSummary run();                        // remaining rounds + fine-tuning

  private:
    ExperimentConfig cfg_;
    Dataset data_;
    PartitionReport part_;
    Network net_;
    SchedulePlan plan_;
    CostModel cost_;
    ParamSet global_;
    std::vector<size_t> all_test_;
    int round_ = 0;
};

// Builds the corpus and partition from the config, then runs it.
RunSummary run_experiment(const ExperimentConfig& cfg);

// Corpus construction shared by run_experiment and the command-line tool.
Dataset build_corpus(const ExperimentConfig& cfg, std::string* source_desc = nullptr);
ModelArch arch_for(const Dataset& d);

}  // namespace fedsched
