#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "fedsched/dataset.hpp"
#include "fedsched/partition.hpp"

using namespace fedsched;

namespace {

PartitionSpec spec_of(int clients, double alpha, double tf, uint64_t seed) {
    PartitionSpec s;
    s.num_clients = clients;
    s.alpha = alpha;
    s.test_fraction = tf;
    s.seed = seed;
    return s;
}

double mean_entropy(const Dataset& d, int clients, double alpha, uint64_t seed) {
    return dirichlet_partition(d, spec_of(clients, alpha, 0.25, seed)).mean_label_entropy;
}

}  // namespace

TEST_CASE("every example lands in exactly one shard") {
    Dataset d = make_synthetic(997, 10, 8, 8, 11);
    PartitionReport rep = dirichlet_partition(d, spec_of(13, 0.5, 0.25, 4));
    REQUIRE(rep.shards.size() == 13);

    std::vector<int> seen(d.size(), 0);
    for (const ClientShard& s : rep.shards) {
        for (size_t i : s.train) seen[i] += 1;
        for (size_t i : s.test) seen[i] += 1;
        CHECK(std::is_sorted(s.train.begin(), s.train.end()));
        CHECK(std::is_sorted(s.test.begin(), s.test.end()));
    }
    for (size_t i = 0; i < seen.size(); ++i) {
        CAPTURE(i);
        REQUIRE(seen[i] == 1);
    }
}

TEST_CASE("partition is a pure function of dataset and spec") {
    Dataset d = make_synthetic(600, 10, 8, 8, 2);
    PartitionReport a = dirichlet_partition(d, spec_of(9, 0.3, 0.2, 42));
    PartitionReport b = dirichlet_partition(d, spec_of(9, 0.3, 0.2, 42));
    PartitionReport c = dirichlet_partition(d, spec_of(9, 0.3, 0.2, 43));
    REQUIRE(a.shards.size() == b.shards.size());
    bool all_equal = true, any_diff = false;
    for (size_t i = 0; i < a.shards.size(); ++i) {
        all_equal = all_equal && a.shards[i].train == b.shards[i].train &&
                    a.shards[i].test == b.shards[i].test;
        any_diff = any_diff || a.shards[i].train != c.shards[i].train;
    }
    CHECK(all_equal);
    CHECK(any_diff);
    CHECK(a.mean_label_entropy == b.mean_label_entropy);
}

TEST_CASE("per-client holdout is the floor of the test fraction") {
    Dataset d = make_synthetic(800, 10, 8, 8, 3);
    PartitionReport rep = dirichlet_partition(d, spec_of(7, 0.5, 0.25, 5));
    for (const ClientShard& s : rep.shards) {
        size_t total = s.n_total();
        CHECK(s.n_test() == static_cast<size_t>(std::floor(0.25 * static_cast<double>(total))));
        CHECK(s.n_train() + s.n_test() == total);
    }
    PartitionReport none = dirichlet_partition(d, spec_of(7, 0.5, 0.0, 5));
    for (const ClientShard& s : none.shards) CHECK(s.n_test() == 0);
}

TEST_CASE("class counts agree with the shard contents") {
    Dataset d = make_synthetic(900, 10, 8, 8, 6);
    PartitionReport rep = dirichlet_partition(d, spec_of(8, 0.2, 0.25, 9));
    std::vector<size_t> per_class_total(10, 0);
    for (size_t i = 0; i < rep.shards.size(); ++i) {
        const ClientShard& s = rep.shards[i];
        std::vector<size_t> counted(10, 0);
        for (size_t k : s.train) counted[d.labels[k]] += 1;
        for (size_t k : s.test) counted[d.labels[k]] += 1;
        CHECK(counted == rep.class_counts[i]);
        size_t row_sum = 0;
        for (int c = 0; c < 10; ++c) {
            row_sum += rep.class_counts[i][c];
            per_class_total[c] += rep.class_counts[i][c];
        }
        CHECK(row_sum == s.n_total());
    }
    // Cycling labels make each class exactly a tenth of the corpus.
    for (int c = 0; c < 10; ++c) CHECK(per_class_total[c] == 90);
}

TEST_CASE("huge concentration approaches a uniform split") {
    Dataset d = make_synthetic(5000, 10, 8, 8, 1);
    for (uint64_t seed : {1, 2, 3, 4, 5}) {
        PartitionReport rep = dirichlet_partition(d, spec_of(10, 1000.0, 0.25, seed));
        for (const ClientShard& s : rep.shards) {
            CHECK(s.n_total() > 300);
            CHECK(s.n_total() < 700);
        }
        for (size_t i = 0; i < rep.shards.size(); ++i) {
            double total = static_cast<double>(rep.shards[i].n_total());
            for (int c = 0; c < 10; ++c) {
                double share = static_cast<double>(rep.class_counts[i][c]) / total;
                CAPTURE(seed);
                CAPTURE(i);
                CAPTURE(c);
                CHECK(share > 0.06);
                CHECK(share < 0.14);
            }
        }
        CHECK(rep.mean_label_entropy > 2.2);  // ln 10 is 2.3026
    }
}

TEST_CASE("small concentration skews client label mixes") {
    Dataset d = make_synthetic(5000, 10, 8, 8, 1);
    double skewed = 0, broad = 0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        skewed += mean_entropy(d, 10, 0.1, seed);
        broad += mean_entropy(d, 10, 10.0, seed);
    }
    skewed /= 10;
    broad /= 10;
    CHECK(skewed < broad);
    CHECK(skewed < 1.5);
    CHECK(broad > 1.8);
}

TEST_CASE("more clients than examples leaves empties and a warning") {
    Dataset d = make_synthetic(30, 10, 8, 8, 4);
    PartitionReport rep = dirichlet_partition(d, spec_of(50, 0.5, 0.25, 8));
    size_t empty = 0;
    for (const ClientShard& s : rep.shards)
        if (s.n_total() == 0) ++empty;
    CHECK(empty > 0);
    bool warned_clients = false, warned_empty = false;
    for (const std::string& w : rep.warnings) {
        if (w.find("more clients") != std::string::npos) warned_clients = true;
        if (w.find("received no examples") != std::string::npos) warned_empty = true;
    }
    CHECK(warned_clients);
    CHECK(warned_empty);
}

TEST_CASE("partition argument checks") {
    Dataset d = make_synthetic(50, 10, 8, 8, 1);
    CHECK_THROWS_AS(dirichlet_partition(d, spec_of(0, 0.5, 0.25, 1)), std::invalid_argument);
    CHECK_THROWS_AS(dirichlet_partition(d, spec_of(5, 0.0, 0.25, 1)), std::invalid_argument);
    CHECK_THROWS_AS(dirichlet_partition(d, spec_of(5, 0.5, 1.0, 1)), std::invalid_argument);
    Dataset empty;
    empty.num_classes = 10;
    CHECK_THROWS_AS(dirichlet_partition(empty, spec_of(5, 0.5, 0.25, 1)), std::invalid_argument);
    Dataset bad = make_synthetic(50, 10, 8, 8, 1);
    bad.labels[3] = 10;
    CHECK_THROWS_AS(dirichlet_partition(bad, spec_of(5, 0.5, 0.25, 1)), std::invalid_argument);
}
