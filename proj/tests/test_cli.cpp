#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "fedsched/config.hpp"
#include "fedsched/metrics.hpp"

using namespace fedsched;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
    fs::path p = fs::temp_directory_path() / "fedsched_cli_test";
    fs::create_directories(p);
    return p;
}

struct CmdResult {
    int status = -1;
    std::string out;
};

CmdResult run_cli(const std::string& args) {
    const char* bin = std::getenv("FEDSCHED_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "FEDSCHED_BIN must point at the command-line tool");
    static int calls = 0;
    fs::path capture = scratch_dir() / ("stdout." + std::to_string(calls++));
    std::string cmd = std::string(bin) + " " + args + " > " + capture.string() + " 2>/dev/null";
    int rc = std::system(cmd.c_str());
    CmdResult r;
    if (WIFEXITED(rc)) r.status = WEXITSTATUS(rc);
    std::ifstream f(capture);
    std::stringstream ss;
    ss << f.rdbuf();
    r.out = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

size_t count_lines(const std::string& text) {
    size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("empty config text yields the default configuration") {
    CHECK(parse_config_text("") == ExperimentConfig{});
    CHECK(parse_config_text("# only a comment\n\n") == ExperimentConfig{});
}

TEST_CASE("config writing and parsing round-trip") {
    ExperimentConfig cfg;
    cfg.mode = Mode::Anti;
    cfg.clients = 23;
    cfg.join_ratio = 0.3;
    cfg.rounds = 12;
    cfg.local_epochs = 2;
    cfg.finetune_epochs = 3;
    cfg.batch_size = 16;
    cfg.lr = 0.0125;
    cfg.eval_every = 5;
    cfg.seed = 998877;
    cfg.alpha = 0.1;
    cfg.test_fraction = 0.2;
    cfg.thresholds = {0, 4, 8};
    cfg.transmit_frozen = true;
    cfg.corpus = "mnist";
    cfg.mnist_dir = "data/mnist";
    cfg.synthetic_examples = 500;
    cfg.threads = 2;
    CHECK(parse_config_text(write_config(cfg)) == cfg);
    CHECK(parse_config_text(write_config(ExperimentConfig{})) == ExperimentConfig{});
}

TEST_CASE("config accepts comments, spacing and lists") {
    ExperimentConfig cfg = parse_config_text(
        "# schedule\n"
        "mode = anti   # trailing comment\n"
        "\tthresholds =  0 , 10,20\n"
        "lr=0.5\n"
        "\n");
    CHECK(cfg.mode == Mode::Anti);
    CHECK(cfg.thresholds == std::vector<int>{0, 10, 20});
    CHECK(cfg.lr == 0.5);
}

TEST_CASE("config errors carry the line and the key") {
    std::string m = error_of("clients = 5\nbananas = 2\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("'bananas'") != std::string::npos);

    m = error_of("\n\nclients = many\n");
    CHECK(m.find("line 3") != std::string::npos);
    CHECK(m.find("'many'") != std::string::npos);
    CHECK(m.find("integer") != std::string::npos);

    m = error_of("mode = magic\n");
    CHECK(m.find("'magic'") != std::string::npos);

    m = error_of("just some words\n");
    CHECK(m.find("expected key = value") != std::string::npos);

    m = error_of("thresholds = 0,,4\n");
    CHECK(m.find("integer list") != std::string::npos);

    m = error_of("transmit_frozen = maybe\n");
    CHECK(m.find("boolean") != std::string::npos);
}

TEST_CASE("metric rows format for spreadsheets") {
    CHECK(round_csv_header() == "round,mean_loss,eval_acc,flops,params_up,params_down");
    CHECK(client_csv_header() == "client_id,n_train,n_test,accuracy");

    RoundMetrics m;
    m.round = 3;
    m.mean_loss = 0.5;
    m.flops = 123456789;
    m.params_up = 42;
    m.params_down = 42;
    CHECK_FALSE(m.evaluated());
    CHECK(to_csv(m) == "3,0.5,,123456789,42,42");  // unevaluated rounds leave the cell empty
    m.eval_acc = 0.25;
    CHECK(to_csv(m) == "3,0.5,0.25,123456789,42,42");

    ClientRecord c;
    c.client_id = 7;
    c.n_train = 300;
    c.n_test = 100;
    c.accuracy = 0.875;
    CHECK(to_csv(c) == "7,300,100,0.875");
}

TEST_CASE("cost subcommand prints the closed-form totals") {
    struct Case {
        const char* mode;
        const char* total;
    };
    const Case cases[] = {
        {"fedavg", "total_flops=873039000000"},
        {"fedbabu", "total_flops=865344000000"},
        {"vanilla", "total_flops=314912000000"},
        {"anti", "total_flops=838880000000"},
    };
    for (const Case& c : cases) {
        CmdResult r = run_cli(std::string("cost --mode ") + c.mode +
                              " --rounds 300 --clients 100 --samples 500");
        CAPTURE(c.mode);
        CHECK(r.status == 0);
        CHECK(r.out.find(c.total) != std::string::npos);
        CHECK(r.out.find(std::string("mode=") + c.mode) != std::string::npos);
    }
}

TEST_CASE("cost subcommand rejects impossible schedules") {
    // Default thresholds reach 200, which a 100-round run never hits.
    CmdResult r = run_cli("cost --mode vanilla --rounds 100 --clients 100 --samples 500");
    CHECK(r.status == 2);
    CHECK(run_cli("cost --mode vanilla --rounds 0").status == 2);
}

TEST_CASE("training runs write identical artifacts for identical configs") {
    fs::path dir = scratch_dir();
    fs::path cfg_path = dir / "tiny.cfg";
    {
        std::ofstream f(cfg_path);
        f << "mode = vanilla\nclients = 4\njoin_ratio = 0.5\nrounds = 3\n"
             "thresholds = 0,1,2\nbatch_size = 10\nlr = 0.005\neval_every = 3\n"
             "finetune_epochs = 1\nseed = 3\nsynthetic_examples = 120\n";
    }
    fs::path out1 = dir / "run1", out2 = dir / "run2";
    fs::remove_all(out1);
    fs::remove_all(out2);

    CmdResult r1 = run_cli("run --config " + cfg_path.string() + " --out " + out1.string());
    REQUIRE(r1.status == 0);
    CHECK(r1.out.find("total_flops=") != std::string::npos);
    CmdResult r2 = run_cli("run --config " + cfg_path.string() + " --out " + out2.string());
    REQUIRE(r2.status == 0);

    std::string rounds1 = slurp(out1 / "rounds.csv");
    CHECK(count_lines(rounds1) == 4);  // header plus one row per round
    CHECK(rounds1.substr(0, rounds1.find('\n')) == round_csv_header());
    CHECK(rounds1 == slurp(out2 / "rounds.csv"));

    std::string clients1 = slurp(out1 / "clients.csv");
    CHECK(count_lines(clients1) == 5);  // header plus one row per client
    CHECK(clients1 == slurp(out2 / "clients.csv"));

    std::string summary1 = slurp(out1 / "summary.json");
    CHECK(summary1.find("\"total_flops\"") != std::string::npos);
    CHECK(summary1 == slurp(out2 / "summary.json"));
    CHECK(fs::exists(out1 / "run.log"));
}

TEST_CASE("command failures exit nonzero") {
    CHECK(run_cli("run --config /nonexistent.cfg").status != 0);
    CHECK(run_cli("frobnicate").status != 0);
    CmdResult g = run_cli("gradcheck --seed 4 --entries 24 --samples 4");
    CHECK(g.status == 0);
    CHECK(g.out.find("max_rel_err=") != std::string::npos);
}
