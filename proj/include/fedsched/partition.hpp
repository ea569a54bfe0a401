#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsched/dataset.hpp"

namespace fedsched {

struct PartitionSpec {
    int num_clients = 100;
    double alpha = 0.5;          // Dirichlet concentration; small = skewed
    double test_fraction = 0.25;  // held out per client
    uint64_t seed = 1;
};

struct ClientShard {
    std::vector<size_t> train;  // dataset indices, ascending
    std::vector<size_t> test;   // dataset indices, ascending

    size_t n_train() const { return train.size(); }
    size_t n_test() const { return test.size(); }
    size_t n_total() const { return train.size() + test.size(); }
};

struct PartitionReport {
    std::vector<ClientShard> shards;
    std::vector<std::vector<size_t>> class_counts;  // [client][class], train + test
    double mean_label_entropy = 0;  // nats, averaged over non-empty clients
    std::vector<std::string> warnings;
};

// Label-skewed split: for each class, client quotas are a Dirichlet(alpha)
// draw resolved to integers by largest remainder (ties to the lower client
// id), and that class's examples are dealt out in one seeded shuffle. Every
// example lands in exactly one shard. Each client then holds out
// floor(n * test_fraction) examples chosen by its own seeded shuffle.
PartitionReport dirichlet_partition(const Dataset& d, const PartitionSpec& spec);

}  // namespace fedsched
