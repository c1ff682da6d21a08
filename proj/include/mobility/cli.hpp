#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mobility::cli {

/// Invalid flag values or combinations; the front end exits with status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered key/value block written at the top of every output file.
using Metadata = std::vector<std::pair<std::string, std::string>>;

std::string csv_metadata(const Metadata& meta);

struct UserFailure {
  std::string user_id;
  std::string error;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are
/// captured per item; the returned vector holds one message per failed item
/// (empty string on success).
std::vector<std::string> parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

struct SynthConfig {
  std::filesystem::path out;
  std::size_t users = 50;
  std::size_t stops = 2000;
  double rho = 0.6;
  double gamma = 0.21;
  double stay_alpha = 0.35;
  double jitter_m = 10.0;
  std::int64_t bin_s = 900;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct PipelineConfig {
  std::filesystem::path in;
  std::filesystem::path out;
  double delta_m = 50.0;
  double eps_m = 50.0;
  std::size_t min_pts = 2;
  std::int64_t min_duration_s = 900;
  std::int64_t gap_s = 1800;
  std::int64_t bin_s = 900;
  double threshold = 0.9;
  double min_days = 90.0;
  unsigned threads = 1;
};

struct PredictConfig {
  std::filesystem::path in;  // pipeline output directory
  std::filesystem::path out;
  std::string formulation = "next_place";
  std::string model = "markov";
  double cell_size_m = 50.0;
  std::int64_t bin_s = 900;
  int fill_limit = 4;
  std::int64_t tz_offset_s = 3600;
  bool write_steps = false;
  unsigned threads = 1;
};

struct BoundConfig {
  std::filesystem::path in;
  std::filesystem::path out;
  std::string formulation = "next_place";
  double cell_size_m = 50.0;
  std::int64_t bin_s = 900;
  int fill_limit = 4;
  unsigned threads = 1;
};

struct ExploreConfig {
  std::filesystem::path in;
  std::filesystem::path out;
  std::vector<std::string> models = {"random", "logreg:all"};
  double threshold = 0.5;
  std::int64_t tz_offset_s = 3600;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct ReportConfig {
  std::filesystem::path in;
  std::filesystem::path out;
  double bin_width = 0.05;
};

/// Each command returns the number of users that failed; fatal problems
/// (unreadable inputs, bad configuration) are thrown.
std::size_t cmd_synth(const SynthConfig& cfg);
std::size_t cmd_pipeline(const PipelineConfig& cfg);
std::size_t cmd_predict(const PredictConfig& cfg);
std::size_t cmd_bound(const BoundConfig& cfg);
std::size_t cmd_explore(const ExploreConfig& cfg);
std::size_t cmd_report(const ReportConfig& cfg);

/// Output file names, shared by the commands and the report.
std::string predict_file_name(const PredictConfig& cfg);
std::string bound_file_name(const BoundConfig& cfg);
std::string explore_file_name(const std::string& model);

/// Counts per bin of `width` over [0, 1]; 1.0 lands in the last bin and
/// values outside the range are clamped into the end bins.
std::vector<std::size_t> fraction_histogram(std::span<const double> values, double width = 0.05);

/// Parses argv and dispatches; returns the process exit status.
int run(int argc, const char* const* argv);

}  // namespace mobility::cli
