#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedsched/config.hpp"
#include "fedsched/cost.hpp"
#include "fedsched/fedsim.hpp"
#include "fedsched/kernels.hpp"
#include "fedsched/network.hpp"

namespace {

using fedsched::ExperimentConfig;
using ordered_json = nlohmann::ordered_json;

ordered_json config_json(const ExperimentConfig& cfg) {
    // Execution details (threads, kernel) are logged, not part of the result.
    ordered_json j;
    j["mode"] = fedsched::mode_name(cfg.mode);
    j["clients"] = cfg.clients;
    j["join_ratio"] = cfg.join_ratio;
    j["rounds"] = cfg.rounds;
    j["local_epochs"] = cfg.local_epochs;
    j["finetune_epochs"] = cfg.finetune_epochs;
    j["batch_size"] = cfg.batch_size;
    j["lr"] = cfg.lr;
    j["eval_every"] = cfg.eval_every;
    j["seed"] = cfg.seed;
    j["alpha"] = cfg.alpha;
    j["test_fraction"] = cfg.test_fraction;
    j["thresholds"] = cfg.thresholds;
    j["transmit_frozen"] = cfg.transmit_frozen;
    j["corpus"] = cfg.corpus;
    j["synthetic_examples"] = cfg.synthetic_examples;
    j["mnist_dir"] = cfg.mnist_dir;
    return j;
}

int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::vector<std::string> errors = fedsched::validate_config(cfg);
    if (!errors.empty()) {
        for (const std::string& e : errors) std::cerr << "config: " << e << "\n";
        return 2;
    }

    auto t0 = std::chrono::steady_clock::now();
    std::string source_desc;
    fedsched::Dataset data = fedsched::build_corpus(cfg, &source_desc);
    fedsched::PartitionSpec ps;
    ps.num_clients = cfg.clients;
    ps.alpha = cfg.alpha;
    ps.test_fraction = cfg.test_fraction;
    ps.seed = cfg.seed;
    fedsched::PartitionReport part = fedsched::dirichlet_partition(data, ps);
    std::vector<std::string> part_warnings = part.warnings;
    fedsched::Simulation sim(cfg, std::move(data), std::move(part));

    std::filesystem::create_directories(out_dir);
    fedsched::MetricsWriter writer(out_dir);

    fedsched::RunSummary summary;
    for (int t = 0; t < cfg.rounds; ++t) {
        fedsched::RoundMetrics m = sim.step();
        writer.append_round(m);
        summary.rounds.push_back(m);
    }
    summary.clients = sim.fine_tune();
    for (const fedsched::ClientRecord& c : summary.clients) writer.append_client(c);

    for (const fedsched::RoundMetrics& m : summary.rounds) {
        summary.total_flops += m.flops;
        summary.total_params_up += m.params_up;
        summary.total_params_down += m.params_down;
        if (m.evaluated()) summary.final_eval_acc = m.eval_acc;
    }
    double acc_sum = 0;
    long long acc_n = 0;
    for (const fedsched::ClientRecord& c : summary.clients)
        if (c.n_test > 0) {
            acc_sum += c.accuracy;
            ++acc_n;
        }
    summary.mean_finetuned_acc = acc_n > 0 ? acc_sum / static_cast<double>(acc_n) : 0.0;

    ordered_json j;
    j["config"] = config_json(cfg);
    j["rounds_run"] = cfg.rounds;
    j["total_flops"] = summary.total_flops;
    j["total_params_up"] = summary.total_params_up;
    j["total_params_down"] = summary.total_params_down;
    j["final_eval_acc"] = summary.final_eval_acc;
    j["mean_finetuned_acc"] = summary.mean_finetuned_acc;
    writer.write_summary(j.dump(2));

    auto t1 = std::chrono::steady_clock::now();
    double secs = std::chrono::duration<double>(t1 - t0).count();
    std::vector<std::string> log;
    log.push_back("corpus: " + source_desc);
    log.push_back("backend: " +
                  std::string(fedsched::kern::backend_name(fedsched::kern::active_backend())));
    log.push_back("threads: " + std::to_string(cfg.threads));
    for (const std::string& w : part_warnings) log.push_back("warning: " + w);
    log.push_back("wall_seconds: " + std::to_string(secs));
    writer.write_log(log);

    std::cout << "mode=" << fedsched::mode_name(cfg.mode)
              << " rounds=" << cfg.rounds
              << " total_flops=" << summary.total_flops
              << " final_eval_acc=" << summary.final_eval_acc
              << " mean_finetuned_acc=" << summary.mean_finetuned_acc << "\n";
    std::cout << "results written to " << out_dir << "\n";
    return 0;
}

int cmd_cost(const ExperimentConfig& cfg, long long samples_override) {
    std::vector<std::string> errors = fedsched::validate_config(cfg);
    if (!errors.empty()) {
        for (const std::string& e : errors) std::cerr << "config: " << e << "\n";
        return 2;
    }
    fedsched::Dataset probe = fedsched::make_synthetic(1, 10, 28, 28, 0);
    fedsched::ModelArch arch = fedsched::arch_for(probe);
    fedsched::CostModel model = fedsched::CostModel::from_arch(arch);
    fedsched::SchedulePlan plan{arch.base_layer_count(), cfg.rounds, cfg.thresholds};
    fedsched::PlanCheck pc = fedsched::validate_plan(plan);
    for (const std::string& w : pc.warnings) std::cerr << "warning: " << w << "\n";
    if (!pc.ok) {
        for (const std::string& e : pc.errors) std::cerr << "error: " << e << "\n";
        return 2;
    }
    long long samples = samples_override > 0 ? samples_override
                        : cfg.corpus == "synthetic" ? cfg.synthetic_examples / cfg.clients
                                                    : 500;
    fedsched::CostReport rep =
        fedsched::analytic_cost(model, plan, cfg.mode, cfg.clients_per_round(), samples,
                                cfg.local_epochs, cfg.transmit_frozen);
    std::cout << "mode=" << fedsched::mode_name(cfg.mode) << "\n";
    std::cout << "samples_per_client_per_round=" << samples << "\n";
    long long prev = -1;
    for (int t = 0; t < plan.rounds; ++t) {
        if (rep.round_flops[t] != prev) {
            std::cout << "round " << t << ": flops_per_round=" << rep.round_flops[t] << "\n";
            prev = rep.round_flops[t];
        }
    }
    std::cout << "total_flops=" << rep.total_flops << "\n";
    std::cout << "total_params_up=" << rep.total_params_up << "\n";
    std::cout << "total_params_down=" << rep.total_params_down << "\n";
    return 0;
}

int cmd_partition(const ExperimentConfig& cfg) {
    std::vector<std::string> errors = fedsched::validate_config(cfg);
    if (!errors.empty()) {
        for (const std::string& e : errors) std::cerr << "config: " << e << "\n";
        return 2;
    }
    fedsched::Dataset data = fedsched::build_corpus(cfg);
    fedsched::PartitionSpec ps;
    ps.num_clients = cfg.clients;
    ps.alpha = cfg.alpha;
    ps.test_fraction = cfg.test_fraction;
    ps.seed = cfg.seed;
    fedsched::PartitionReport rep = fedsched::dirichlet_partition(data, ps);
    for (const std::string& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "client_id,n_train,n_test\n";
    for (size_t i = 0; i < rep.shards.size(); ++i)
        std::cout << i << "," << rep.shards[i].n_train() << "," << rep.shards[i].n_test()
                  << "\n";
    std::cerr << "mean_label_entropy=" << rep.mean_label_entropy << "\n";
    return 0;
}

int cmd_gradcheck(uint64_t seed, int entries, int samples) {
    fedsched::Dataset data = fedsched::make_synthetic(static_cast<size_t>(samples), 10, 28, 28,
                                                      seed);
    fedsched::Network net(fedsched::arch_for(data));
    fedsched::ParamSet p = fedsched::init_params(net.arch(), seed);
    std::vector<size_t> idx(data.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    fedsched::FreezeMask all = fedsched::FreezeMask::all(p.layers.size(), true);
    fedsched::GradCheckResult r = fedsched::finite_diff_check(net, p, data, idx, all, seed,
                                                              entries);
    std::cout << "checked=" << r.checked << " skipped_kinks=" << r.skipped_kinks
              << " max_rel_err=" << r.max_rel_err << "\n";
    if (r.vacuous() || r.max_rel_err > 1e-3) {
        std::cerr << "gradient check failed\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic federated learning simulator with layer unfreeze schedules"};
    app.require_subcommand(1);

    std::string config_path, out_dir, kernel = "auto", mode_str;
    uint64_t seed = 0;
    int rounds = 0, clients = 0, threads = 0;

    CLI::App* run = app.add_subcommand("run", "Run one federated experiment");
    CLI::App* cost = app.add_subcommand("cost", "Analytic compute and traffic for a schedule");
    CLI::App* part = app.add_subcommand("partition", "Preview the client partition");
    CLI::App* grad = app.add_subcommand("gradcheck", "Finite-difference gradient audit");

    for (CLI::App* sub : {run, cost, part}) {
        sub->add_option("--config", config_path, "Config file (key = value lines)");
        sub->add_option("--mode", mode_str, "vanilla | anti | fedavg | fedbabu")
            ->check(CLI::IsMember({"vanilla", "anti", "fedavg", "fedbabu"}));
        sub->add_option("--seed", seed, "Run seed");
        sub->add_option("--rounds", rounds, "Training rounds");
        sub->add_option("--clients", clients, "Number of clients");
    }
    long long cost_samples = 0;
    cost->add_option("--samples", cost_samples, "Samples per client per round");
    run->add_option("--out", out_dir, "Output directory ($FEDSCHED_OUT_DIR, then ./out)");
    run->add_option("--threads", threads, "Worker threads for client updates");
    run->add_option("--kernel", kernel, "auto | scalar | avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    uint64_t gc_seed = 1;
    int gc_entries = 200, gc_samples = 16;
    grad->add_option("--seed", gc_seed, "Check seed");
    grad->add_option("--entries", gc_entries, "Parameter entries to probe");
    grad->add_option("--samples", gc_samples, "Batch size for the probed loss");

    CLI11_PARSE(app, argc, argv);

    try {
        if (grad->parsed()) return cmd_gradcheck(gc_seed, gc_entries, gc_samples);

        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = fedsched::parse_config(config_path);
        CLI::App* sub = run->parsed() ? run : cost->parsed() ? cost : part;
        if (sub->count("--mode")) cfg.mode = fedsched::parse_mode(mode_str);
        if (sub->count("--seed")) cfg.seed = seed;
        if (sub->count("--rounds")) cfg.rounds = rounds;
        if (sub->count("--clients")) cfg.clients = clients;

        if (run->parsed()) {
            if (run->count("--threads")) cfg.threads = threads;
            fedsched::kern::select_backend(kernel);
            if (out_dir.empty()) {
                const char* env = std::getenv("FEDSCHED_OUT_DIR");
                out_dir = env && *env ? env : "out";
            }
            return cmd_run(cfg, out_dir);
        }
        if (cost->parsed()) return cmd_cost(cfg, cost_samples);
        return cmd_partition(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
