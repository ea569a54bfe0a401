#include "fedsched/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "fedsched/kernels.hpp"
#include "fedsched/rng.hpp"

namespace fedsched {

namespace {

// Striped parallel loop; rethrows the first worker exception.
template <class F>
void parallel_for(size_t n, int threads, F&& f) {
    size_t nt = std::min<size_t>(std::max(threads, 1), n);
    if (nt <= 1) {
        for (size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mu;
    for (size_t t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            try {
                for (size_t i = t; i < n; i += nt) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

int ExperimentConfig::clients_per_round() const {
    int m = static_cast<int>(std::floor(join_ratio * static_cast<double>(clients)));
    return std::max(1, std::min(m, clients));
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
    return mode == o.mode && clients == o.clients && join_ratio == o.join_ratio &&
           rounds == o.rounds && local_epochs == o.local_epochs &&
           finetune_epochs == o.finetune_epochs && batch_size == o.batch_size && lr == o.lr &&
           eval_every == o.eval_every && seed == o.seed && alpha == o.alpha &&
           test_fraction == o.test_fraction && thresholds == o.thresholds &&
           transmit_frozen == o.transmit_frozen && corpus == o.corpus &&
           synthetic_examples == o.synthetic_examples && mnist_dir == o.mnist_dir &&
           threads == o.threads;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> e;
    if (cfg.clients < 1) e.push_back("clients must be >= 1");
    if (!(cfg.join_ratio > 0) || cfg.join_ratio > 1)
        e.push_back("join_ratio must be in (0, 1]");
    if (cfg.rounds < 1) e.push_back("rounds must be >= 1");
    if (cfg.local_epochs < 1) e.push_back("local_epochs must be >= 1");
    if (cfg.finetune_epochs < 0) e.push_back("finetune_epochs must be >= 0");
    if (cfg.batch_size < 1) e.push_back("batch_size must be >= 1");
    if (!(cfg.lr > 0)) e.push_back("lr must be positive");
    if (cfg.eval_every < 1) e.push_back("eval_every must be >= 1");
    if (!(cfg.alpha > 0)) e.push_back("alpha must be positive");
    if (cfg.test_fraction < 0 || cfg.test_fraction >= 1)
        e.push_back("test_fraction must be in [0, 1)");
    if (cfg.thresholds.empty()) e.push_back("thresholds must not be empty");
    if (cfg.corpus != "synthetic" && cfg.corpus != "mnist")
        e.push_back("corpus must be synthetic or mnist");
    if (cfg.corpus == "synthetic" && cfg.synthetic_examples < 1)
        e.push_back("synthetic_examples must be >= 1");
    if (cfg.threads < 1) e.push_back("threads must be >= 1");
    return e;
}

std::vector<int> sample_clients(int n, int m, int round, uint64_t seed) {
    if (n < 1 || m < 1 || m > n)
        throw std::invalid_argument("sample_clients: need 1 <= m <= n");
    Rng rng = Rng::stream(seed, {rng_tag::sample_clients, static_cast<uint64_t>(round)});
    return rng.sample_without_replacement(n, m);
}

ClientUpdate local_update(const Network& net, const Dataset& d, const ClientShard& shard,
                          const ParamSet& global, const FreezeMask& compute_mask,
                          const FreezeMask& apply_mask, double lr, int batch_size, int epochs,
                          uint64_t seed, int round, int client_id) {
    if (batch_size < 1) throw std::invalid_argument("local_update: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("local_update: epochs must be >= 1");
    ClientUpdate u;
    u.client_id = client_id;
    u.params = global;
    u.n_train = static_cast<long long>(shard.n_train());
    if (shard.train.empty()) return u;

    Rng rng = Rng::stream(seed, {rng_tag::local_update, static_cast<uint64_t>(round),
                                 static_cast<uint64_t>(client_id)});
    ParamSet grad = zeros_like(global);
    std::vector<size_t> order = shard.train;
    std::vector<size_t> batch;
    double loss_sum = 0;
    long long steps = 0;
    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(batch_size)) {
            size_t end = std::min(order.size(), off + static_cast<size_t>(batch_size));
            batch.assign(order.begin() + off, order.begin() + end);
            loss_sum += net.batch_loss_and_grad(u.params, d, batch, compute_mask, grad);
            sgd_step(u.params, grad, lr, apply_mask);
            ++steps;
        }
        u.samples_processed += static_cast<long long>(order.size());
    }
    u.mean_loss = loss_sum / static_cast<double>(steps);
    return u;
}

ParamSet aggregate(const ParamSet& global, const std::vector<ClientUpdate>& updates,
                   const FreezeMask& apply_mask) {
    if (apply_mask.size() != global.layers.size())
        throw std::invalid_argument("aggregate: mask does not match the model");
    long long total = 0;
    for (const ClientUpdate& u : updates) {
        if (u.params.layers.size() != global.layers.size())
            throw std::invalid_argument("aggregate: update from client " +
                                        std::to_string(u.client_id) +
                                        " does not match the model");
        if (u.n_train < 0) throw std::invalid_argument("aggregate: negative sample count");
        total += u.n_train;
    }
    if (updates.empty() || total == 0) return global;

    std::vector<const ClientUpdate*> order;
    for (const ClientUpdate& u : updates) order.push_back(&u);
    std::stable_sort(order.begin(), order.end(),
                     [](const ClientUpdate* a, const ClientUpdate* b) {
                         return a->client_id < b->client_id;
                     });

    double wsum = 0;
    for (const ClientUpdate* u : order)
        wsum += static_cast<double>(u->n_train) / static_cast<double>(total);
    if (std::abs(wsum - 1.0) > 1e-12)
        throw std::logic_error("aggregate: weights sum to " + std::to_string(wsum));

    const kern::KernelTable& kt = kern::active();
    ParamSet out = global;  // frozen layers keep the server's bits
    for (size_t t = 0; t < out.layers.size(); ++t) {
        if (!apply_mask.trainable[t]) continue;
        LayerParams& l = out.layers[t];
        std::fill(l.w.data(), l.w.data() + l.w.size(), 0.0);
        std::fill(l.b.data(), l.b.data() + l.b.size(), 0.0);
        for (const ClientUpdate* u : order) {
            double w = static_cast<double>(u->n_train) / static_cast<double>(total);
            const LayerParams& src = u->params.layers[t];
            kt.axpy(l.w.data(), w, src.w.data(), l.w.size());
            kt.axpy(l.b.data(), w, src.b.data(), l.b.size());
        }
    }
    return out;
}

ClientRecord fine_tune_client(const Network& net, const Dataset& d, const ClientShard& shard,
                              const ParamSet& global, double lr, int batch_size, int epochs,
                              uint64_t seed, int client_id) {
    ClientRecord rec;
    rec.client_id = client_id;
    rec.n_train = static_cast<long long>(shard.n_train());
    rec.n_test = static_cast<long long>(shard.n_test());
    ParamSet p = global;
    if (epochs > 0 && !shard.train.empty()) {
        FreezeMask all = FreezeMask::all(p.layers.size(), true);
        Rng rng = Rng::stream(seed, {rng_tag::fine_tune, static_cast<uint64_t>(client_id)});
        ParamSet grad = zeros_like(p);
        std::vector<size_t> order = shard.train;
        std::vector<size_t> batch;
        for (int e = 0; e < epochs; ++e) {
            rng.shuffle(order);
            for (size_t off = 0; off < order.size(); off += static_cast<size_t>(batch_size)) {
                size_t end = std::min(order.size(), off + static_cast<size_t>(batch_size));
                batch.assign(order.begin() + off, order.begin() + end);
                net.batch_loss_and_grad(p, d, batch, all, grad);
                sgd_step(p, grad, lr, all);
            }
        }
    }
    rec.accuracy = shard.test.empty() ? 0.0 : net.accuracy(p, d, shard.test);
    return rec;
}

Simulation::Simulation(ExperimentConfig cfg, Dataset data, PartitionReport part)
    : cfg_(std::move(cfg)),
      data_(std::move(data)),
      part_(std::move(part)),
      net_(arch_for(data_)) {
    std::vector<std::string> errors = validate_config(cfg_);
    if (!errors.empty()) {
        std::string msg = "config:";
        for (const std::string& e : errors) msg += " " + e + ";";
        throw std::invalid_argument(msg);
    }
    if (part_.shards.size() != static_cast<size_t>(cfg_.clients))
        throw std::invalid_argument("simulation: partition has " +
                                    std::to_string(part_.shards.size()) + " shards for " +
                                    std::to_string(cfg_.clients) + " clients");
    plan_.base_layers = net_.arch().base_layer_count();
    plan_.rounds = cfg_.rounds;
    plan_.thresholds = cfg_.thresholds;
    PlanCheck pc = validate_plan(plan_);
    if (!pc.ok) {
        std::string msg = "plan:";
        for (const std::string& e : pc.errors) msg += " " + e + ";";
        throw std::invalid_argument(msg);
    }
    cost_ = CostModel::from_arch(net_.arch());
    global_ = init_params(net_.arch(), cfg_.seed);
    for (const ClientShard& s : part_.shards)
        all_test_.insert(all_test_.end(), s.test.begin(), s.test.end());
    std::sort(all_test_.begin(), all_test_.end());
}

FreezeMask Simulation::apply_mask(int round) const {
    return trainable_mask(plan_, cfg_.mode, round);
}

FreezeMask Simulation::compute_mask(int round) const {
    FreezeMask m = trainable_mask(plan_, cfg_.mode, round);
    if (cfg_.mode == Mode::FedBABU)
        for (size_t i = 0; i < m.size(); ++i) m.trainable[i] = true;
    return m;
}

double Simulation::global_test_accuracy() const {
    if (all_test_.empty()) return 0.0;
    return net_.accuracy(global_, data_, all_test_);
}

RoundMetrics Simulation::step() {
    if (round_ >= cfg_.rounds) throw std::logic_error("simulation: all rounds already run");
    FreezeMask apply = apply_mask(round_);
    FreezeMask compute = compute_mask(round_);
    std::vector<int> part =
        sample_clients(cfg_.clients, cfg_.clients_per_round(), round_, cfg_.seed);

    std::vector<ClientUpdate> updates(part.size());
    parallel_for(part.size(), cfg_.threads, [&](size_t i) {
        updates[i] = local_update(net_, data_, part_.shards[part[i]], global_, compute, apply,
                                  cfg_.lr, cfg_.batch_size, cfg_.local_epochs, cfg_.seed, round_,
                                  part[i]);
    });
    global_ = aggregate(global_, updates, apply);

    RoundMetrics m;
    m.round = round_;
    long long samples = 0;
    double loss_sum = 0;
    int loss_n = 0;
    for (const ClientUpdate& u : updates) {
        samples += u.samples_processed;
        if (u.n_train > 0) {
            loss_sum += u.mean_loss;
            ++loss_n;
        }
    }
    m.mean_loss = loss_n > 0 ? loss_sum / loss_n : 0.0;
    m.flops = cost_.round_flops(apply, samples);
    m.params_up =
        cost_.round_comm_params(apply, static_cast<int>(part.size()), cfg_.transmit_frozen);
    m.params_down = m.params_up;
    if ((round_ + 1) % cfg_.eval_every == 0 || round_ == cfg_.rounds - 1)
        m.eval_acc = global_test_accuracy();
    ++round_;
    return m;
}

std::vector<ClientRecord> Simulation::fine_tune() {
    std::vector<ClientRecord> recs(part_.shards.size());
    parallel_for(recs.size(), cfg_.threads, [&](size_t i) {
        recs[i] = fine_tune_client(net_, data_, part_.shards[i], global_, cfg_.lr,
                                   cfg_.batch_size, cfg_.finetune_epochs, cfg_.seed,
                                   static_cast<int>(i));
    });
    return recs;
}

RunSummary Simulation::run() {
    RunSummary s;
    while (round_ < cfg_.rounds) s.rounds.push_back(step());
    s.clients = fine_tune();
    for (const RoundMetrics& m : s.rounds) {
        s.total_flops += m.flops;
        s.total_params_up += m.params_up;
        s.total_params_down += m.params_down;
        if (m.evaluated()) s.final_eval_acc = m.eval_acc;
    }
    double acc_sum = 0;
    long long acc_n = 0;
    for (const ClientRecord& c : s.clients)
        if (c.n_test > 0) {
            acc_sum += c.accuracy;
            ++acc_n;
        }
    s.mean_finetuned_acc = acc_n > 0 ? acc_sum / static_cast<double>(acc_n) : 0.0;
    s.corpus = cfg_.corpus;
    s.backend = kern::backend_name(kern::active_backend());
    return s;
}

Dataset build_corpus(const ExperimentConfig& cfg, std::string* source_desc) {
    if (cfg.corpus == "mnist") {
        std::string dir = cfg.mnist_dir;
        if (dir.empty()) {
            const char* env = std::getenv("MNIST_DIR");
            dir = env ? env : "./data/mnist";
        }
        if (source_desc) *source_desc = "mnist (" + dir + ")";
        return load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte");
    }
    if (source_desc)
        *source_desc = "synthetic (" + std::to_string(cfg.synthetic_examples) + " examples)";
    return make_synthetic(static_cast<size_t>(cfg.synthetic_examples), 10, 28, 28, cfg.seed);
}

ModelArch arch_for(const Dataset& d) {
    return ModelArch::reference(d.num_classes, d.channels, d.h, d.w);
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
    std::vector<std::string> errors = validate_config(cfg);
    if (!errors.empty()) {
        std::string msg = "config:";
        for (const std::string& e : errors) msg += " " + e + ";";
        throw std::invalid_argument(msg);
    }
    Dataset data = build_corpus(cfg);
    PartitionSpec ps;
    ps.num_clients = cfg.clients;
    ps.alpha = cfg.alpha;
    ps.test_fraction = cfg.test_fraction;
    ps.seed = cfg.seed;
    PartitionReport part = dirichlet_partition(data, ps);
    Simulation sim(cfg, std::move(data), std::move(part));
    return sim.run();
}

}  // namespace fedsched
