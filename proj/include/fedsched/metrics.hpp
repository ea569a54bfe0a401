#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace fedsched {

struct RoundMetrics {
    int round = 0;
    double mean_loss = 0;   // mean over participating clients with data
    double eval_acc = -1;   // global test accuracy; -1 when not evaluated
    long long flops = 0;
    long long params_up = 0;
    long long params_down = 0;

    bool evaluated() const { return eval_acc >= 0; }
};

struct ClientRecord {
    int client_id = 0;
    long long n_train = 0;
    long long n_test = 0;
    double accuracy = 0;  // after fine-tuning, on the client's own test split
};

std::string round_csv_header();
std::string client_csv_header();
std::string to_csv(const RoundMetrics& m);
std::string to_csv(const ClientRecord& c);

// Streams rounds.csv and clients.csv into a directory, one flushed line per
// record, so partial output survives an interrupted run.
class MetricsWriter {
  public:
    explicit MetricsWriter(std::string dir);
    ~MetricsWriter();
    MetricsWriter(const MetricsWriter&) = delete;
    MetricsWriter& operator=(const MetricsWriter&) = delete;

    void append_round(const RoundMetrics& m);
    void append_client(const ClientRecord& c);
    void write_summary(const std::string& json_text);       // summary.json
    void write_log(const std::vector<std::string>& lines);  // run.log

    const std::string& dir() const { return dir_; }

  private:
    struct FileCloser {
        void operator()(std::FILE* f) const {
            if (f) std::fclose(f);
        }
    };
    std::FILE* rounds_file();
    std::FILE* clients_file();

    std::string dir_;
    std::unique_ptr<std::FILE, FileCloser> rounds_;
    std::unique_ptr<std::FILE, FileCloser> clients_;
};

}  // namespace fedsched
