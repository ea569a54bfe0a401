#include "fedsched/metrics.hpp"

#include <cstring>
#include <stdexcept>

namespace fedsched {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::string round_csv_header() { return "round,mean_loss,eval_acc,flops,params_up,params_down"; }

std::string client_csv_header() { return "client_id,n_train,n_test,accuracy"; }

std::string to_csv(const RoundMetrics& m) {
    std::string s = std::to_string(m.round) + "," + fmt_double(m.mean_loss) + ",";
    if (m.evaluated()) s += fmt_double(m.eval_acc);
    s += "," + std::to_string(m.flops) + "," + std::to_string(m.params_up) + "," +
         std::to_string(m.params_down);
    return s;
}

std::string to_csv(const ClientRecord& c) {
    return std::to_string(c.client_id) + "," + std::to_string(c.n_train) + "," +
           std::to_string(c.n_test) + "," + fmt_double(c.accuracy);
}

MetricsWriter::MetricsWriter(std::string dir) : dir_(std::move(dir)) {}

MetricsWriter::~MetricsWriter() = default;

std::FILE* MetricsWriter::rounds_file() {
    if (!rounds_) {
        std::string path = dir_ + "/rounds.csv";
        rounds_.reset(std::fopen(path.c_str(), "wb"));
        if (!rounds_) throw std::runtime_error("metrics: cannot write " + path);
        std::string h = round_csv_header() + "\n";
        std::fwrite(h.data(), 1, h.size(), rounds_.get());
    }
    return rounds_.get();
}

std::FILE* MetricsWriter::clients_file() {
    if (!clients_) {
        std::string path = dir_ + "/clients.csv";
        clients_.reset(std::fopen(path.c_str(), "wb"));
        if (!clients_) throw std::runtime_error("metrics: cannot write " + path);
        std::string h = client_csv_header() + "\n";
        std::fwrite(h.data(), 1, h.size(), clients_.get());
    }
    return clients_.get();
}

void MetricsWriter::append_round(const RoundMetrics& m) {
    std::string line = to_csv(m) + "\n";
    std::FILE* f = rounds_file();
    std::fwrite(line.data(), 1, line.size(), f);
    std::fflush(f);
}

void MetricsWriter::append_client(const ClientRecord& c) {
    std::string line = to_csv(c) + "\n";
    std::FILE* f = clients_file();
    std::fwrite(line.data(), 1, line.size(), f);
    std::fflush(f);
}

void MetricsWriter::write_summary(const std::string& json_text) {
    std::string path = dir_ + "/summary.json";
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("metrics: cannot write " + path);
    std::fwrite(json_text.data(), 1, json_text.size(), f.get());
    if (json_text.empty() || json_text.back() != '\n') std::fwrite("\n", 1, 1, f.get());
}

void MetricsWriter::write_log(const std::vector<std::string>& lines) {
    std::string path = dir_ + "/run.log";
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("metrics: cannot write " + path);
    for (const std::string& l : lines) {
        std::fwrite(l.data(), 1, l.size(), f.get());
        std::fwrite("\n", 1, 1, f.get());
    }
}

}  // namespace fedsched
