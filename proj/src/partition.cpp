#include "fedsched/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedsched/rng.hpp"

namespace fedsched {

namespace {

// Largest-remainder rounding of proportions to integer counts summing to n.
// Ties in the remainder go to the lower client id.
std::vector<size_t> apportion(const std::vector<double>& prop, size_t n) {
    size_t m = prop.size();
    std::vector<size_t> alloc(m);
    std::vector<double> rem(m);
    size_t assigned = 0;
    for (size_t i = 0; i < m; ++i) {
        double quota = prop[i] * static_cast<double>(n);
        double base = std::floor(quota);
        alloc[i] = static_cast<size_t>(base);
        rem[i] = quota - base;
        assigned += alloc[i];
    }
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return rem[a] > rem[b]; });
    for (size_t k = 0; assigned < n; ++k) {
        alloc[order[k % m]] += 1;
        ++assigned;
    }
    return alloc;
}

}  // namespace

PartitionReport dirichlet_partition(const Dataset& d, const PartitionSpec& spec) {
    if (spec.num_clients < 1) throw std::invalid_argument("partition: needs at least one client");
    if (!(spec.alpha > 0)) throw std::invalid_argument("partition: alpha must be positive");
    if (spec.test_fraction < 0 || spec.test_fraction >= 1)
        throw std::invalid_argument("partition: test_fraction must be in [0, 1)");
    if (d.size() == 0) throw std::invalid_argument("partition: empty dataset");
    if (d.num_classes < 1) throw std::invalid_argument("partition: dataset has no classes");

    size_t n_clients = static_cast<size_t>(spec.num_clients);
    PartitionReport rep;
    rep.shards.resize(n_clients);
    rep.class_counts.assign(n_clients, std::vector<size_t>(d.num_classes, 0));
    if (n_clients > d.size())
        rep.warnings.push_back("partition: more clients (" + std::to_string(n_clients) +
                               ") than examples (" + std::to_string(d.size()) + ")");

    std::vector<std::vector<size_t>> by_class(d.num_classes);
    for (size_t i = 0; i < d.size(); ++i) {
        int c = d.labels[i];
        if (c < 0 || c >= d.num_classes)
            throw std::invalid_argument("partition: label " + std::to_string(c) +
                                        " outside [0, " + std::to_string(d.num_classes) + ")");
        by_class[c].push_back(i);
    }

    std::vector<std::vector<size_t>> pool(n_clients);  // per client, all assigned indices
    for (int c = 0; c < d.num_classes; ++c) {
        if (by_class[c].empty()) continue;
        Rng draw = Rng::stream(spec.seed, {rng_tag::dirichlet_class, static_cast<uint64_t>(c)});
        std::vector<double> prop(n_clients);
        double sum = 0;
        for (size_t i = 0; i < n_clients; ++i) {
            prop[i] = draw.gamma(spec.alpha);
            sum += prop[i];
        }
        if (sum <= 0) {
            std::fill(prop.begin(), prop.end(), 1.0 / static_cast<double>(n_clients));
        } else {
            for (double& p : prop) p /= sum;
        }
        std::vector<size_t> alloc = apportion(prop, by_class[c].size());

        Rng shuf = Rng::stream(spec.seed, {rng_tag::class_shuffle, static_cast<uint64_t>(c)});
        shuf.shuffle(by_class[c]);
        size_t off = 0;
        for (size_t i = 0; i < n_clients; ++i) {
            for (size_t k = 0; k < alloc[i]; ++k) pool[i].push_back(by_class[c][off + k]);
            off += alloc[i];
            rep.class_counts[i][c] += alloc[i];
        }
    }

    size_t empty_clients = 0;
    double entropy_sum = 0;
    size_t entropy_n = 0;
    for (size_t i = 0; i < n_clients; ++i) {
        std::vector<size_t>& p = pool[i];
        if (p.empty()) {
            ++empty_clients;
            continue;
        }
        Rng split = Rng::stream(spec.seed, {rng_tag::client_split, static_cast<uint64_t>(i)});
        split.shuffle(p);
        size_t n_test = static_cast<size_t>(
            std::floor(spec.test_fraction * static_cast<double>(p.size())));
        ClientShard& s = rep.shards[i];
        s.test.assign(p.begin(), p.begin() + n_test);
        s.train.assign(p.begin() + n_test, p.end());
        std::sort(s.test.begin(), s.test.end());
        std::sort(s.train.begin(), s.train.end());

        double h = 0;
        for (int c = 0; c < d.num_classes; ++c) {
            if (rep.class_counts[i][c] == 0) continue;
            double q = static_cast<double>(rep.class_counts[i][c]) /
                       static_cast<double>(p.size());
            h -= q * std::log(q);
        }
        entropy_sum += h;
        ++entropy_n;
    }
    if (empty_clients > 0)
        rep.warnings.push_back("partition: " + std::to_string(empty_clients) +
                               " clients received no examples");
    rep.mean_label_entropy = entropy_n > 0 ? entropy_sum / static_cast<double>(entropy_n) : 0.0;
    return rep;
}

}  // namespace fedsched
