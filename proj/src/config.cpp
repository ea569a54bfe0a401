#include "fedsched/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace fedsched {

namespace {

[[noreturn]] void bad_value(const std::string& key, int line, const std::string& value,
                            const std::string& want) {
    throw std::invalid_argument("config: line " + std::to_string(line) + ": key '" + key +
                                "': cannot parse '" + value + "' as " + want);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long long parse_ll(const std::string& key, int line, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (errno != 0 || end == v.c_str() || *end != '\0') bad_value(key, line, v, "an integer");
    return x;
}

int parse_int(const std::string& key, int line, const std::string& v) {
    long long x = parse_ll(key, line, v);
    if (x < INT32_MIN || x > INT32_MAX) bad_value(key, line, v, "an integer");
    return static_cast<int>(x);
}

uint64_t parse_u64(const std::string& key, int line, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (errno != 0 || end == v.c_str() || *end != '\0' || v.find('-') != std::string::npos)
        bad_value(key, line, v, "an unsigned integer");
    return x;
}

double parse_double(const std::string& key, int line, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (errno != 0 || end == v.c_str() || *end != '\0') bad_value(key, line, v, "a number");
    return x;
}

bool parse_bool(const std::string& key, int line, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, line, v, "a boolean (true/false)");
}

std::vector<int> parse_int_list(const std::string& key, int line, const std::string& v) {
    std::vector<int> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) bad_value(key, line, v, "a comma-separated integer list");
        out.push_back(parse_int(key, line, item));
    }
    if (out.empty()) bad_value(key, line, v, "a comma-separated integer list");
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        std::string s = raw;
        size_t hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line) +
                                        ": expected key = value, got '" + trim(raw) + "'");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: line " + std::to_string(line) + ": empty key");

        if (key == "mode") {
            try {
                cfg.mode = parse_mode(value);
            } catch (const std::invalid_argument&) {
                bad_value(key, line, value, "vanilla, anti, fedavg or fedbabu");
            }
        } else if (key == "clients") {
            cfg.clients = parse_int(key, line, value);
        } else if (key == "join_ratio") {
            cfg.join_ratio = parse_double(key, line, value);
        } else if (key == "rounds") {
            cfg.rounds = parse_int(key, line, value);
        } else if (key == "local_epochs") {
            cfg.local_epochs = parse_int(key, line, value);
        } else if (key == "finetune_epochs") {
            cfg.finetune_epochs = parse_int(key, line, value);
        } else if (key == "batch_size") {
            cfg.batch_size = parse_int(key, line, value);
        } else if (key == "lr") {
            cfg.lr = parse_double(key, line, value);
        } else if (key == "eval_every") {
            cfg.eval_every = parse_int(key, line, value);
        } else if (key == "seed") {
            cfg.seed = parse_u64(key, line, value);
        } else if (key == "alpha") {
            cfg.alpha = parse_double(key, line, value);
        } else if (key == "test_fraction") {
            cfg.test_fraction = parse_double(key, line, value);
        } else if (key == "thresholds") {
            cfg.thresholds = parse_int_list(key, line, value);
        } else if (key == "transmit_frozen") {
            cfg.transmit_frozen = parse_bool(key, line, value);
        } else if (key == "corpus") {
            cfg.corpus = value;
        } else if (key == "synthetic_examples") {
            cfg.synthetic_examples = parse_ll(key, line, value);
        } else if (key == "mnist_dir") {
            cfg.mnist_dir = value;
        } else if (key == "threads") {
            cfg.threads = parse_int(key, line, value);
        } else {
            throw std::invalid_argument("config: line " + std::to_string(line) +
                                        ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "rb"),
                                                      std::fclose);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::string text;
    char buf[4096];
    size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f.get())) > 0) text.append(buf, got);
    return parse_config_text(text);
}

std::string write_config(const ExperimentConfig& cfg) {
    std::string s;
    s += "mode = " + std::string(mode_name(cfg.mode)) + "\n";
    s += "clients = " + std::to_string(cfg.clients) + "\n";
    s += "join_ratio = " + fmt_double(cfg.join_ratio) + "\n";
    s += "rounds = " + std::to_string(cfg.rounds) + "\n";
    s += "local_epochs = " + std::to_string(cfg.local_epochs) + "\n";
    s += "finetune_epochs = " + std::to_string(cfg.finetune_epochs) + "\n";
    s += "batch_size = " + std::to_string(cfg.batch_size) + "\n";
    s += "lr = " + fmt_double(cfg.lr) + "\n";
    s += "eval_every = " + std::to_string(cfg.eval_every) + "\n";
    s += "seed = " + std::to_string(cfg.seed) + "\n";
    s += "alpha = " + fmt_double(cfg.alpha) + "\n";
    s += "test_fraction = " + fmt_double(cfg.test_fraction) + "\n";
    s += "thresholds = ";
    for (size_t i = 0; i < cfg.thresholds.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(cfg.thresholds[i]);
    }
    s += "\n";
    s += "transmit_frozen = " + std::string(cfg.transmit_frozen ? "true" : "false") + "\n";
    s += "corpus = " + cfg.corpus + "\n";
    s += "synthetic_examples = " + std::to_string(cfg.synthetic_examples) + "\n";
    s += "mnist_dir = " + cfg.mnist_dir + "\n";
    s += "threads = " + std::to_string(cfg.threads) + "\n";
    return s;
}

}  // namespace fedsched
