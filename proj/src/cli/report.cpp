#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "mobility/cli.hpp"
#include "mobility/exploration.hpp"
#include "mobility/textio.hpp"

namespace mobility::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// metric name -> user -> value
using MetricTable = std::map<std::string, std::map<std::string, double>>;

void collect_json(const fs::path& path, const std::vector<std::string>& fields, MetricTable& table) {
  const auto doc = json::parse(textio::read_file(path));
  const std::string stem = path.stem().string();
  for (const auto& row : doc.at("users")) {
    const auto user = row.at("user_id").get<std::string>();
    for (const auto& f : fields) {
      if (row.contains(f) && row[f].is_number()) table[stem + "." + f][user] = row[f].get<double>();
    }
  }
}

void collect_bound_csv(const fs::path& path, MetricTable& table) {
  const auto text = textio::read_file(path);
  const std::string stem = path.stem().string();
  bool header = false;
  textio::for_each_data_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!header) {
      header = true;
      return;
    }
    const auto f = textio::split(line);
    double pi = 0.0;
    if (f.size() != 6 || !textio::parse_double(f[5], pi)) {
      throw FormatError(path.string() + " line " + std::to_string(line_no) + ": malformed row");
    }
    table[stem + ".pi_max"][std::string(f[0])] = pi;
  });
}

}  // namespace

std::vector<std::size_t> fraction_histogram(std::span<const double> values, double width) {
  if (!(width > 0.0) || width > 1.0) throw UsageError("histogram bin width must lie in (0, 1]");
  const auto bins = static_cast<std::size_t>(std::ceil(1.0 / width - 1e-9));
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    const double idx = std::floor(std::clamp(v, 0.0, 1.0) / width + 1e-9);
    counts[std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, idx)))]++;
  }
  return counts;
}

std::size_t cmd_report(const ReportConfig& cfg) {
  if (!fs::is_directory(cfg.in)) throw IoError("missing input directory: " + cfg.in.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cfg.in)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  MetricTable table;
  for (const auto& path : files) {
    const auto name = path.filename().string();
    if (name.starts_with("predict-") && name.ends_with(".json")) {
      collect_json(path, {"accuracy"}, table);
    } else if (name.starts_with("explore-") && name.ends_with(".json")) {
      collect_json(path, {"p_exploration", "fraction_visited_once", "precision", "recall", "f1"}, table);
    } else if (name.starts_with("bound-") && name.ends_with(".csv")) {
      collect_bound_csv(path, table);
    } else if (name == "pipeline.json") {
      collect_json(path, {"recovery", "completeness"}, table);
    }
  }

  Metadata meta{{"tool", "mobility"}, {"version", MOBILITY_VERSION}, {"command", "report"},
                {"bin_width", textio::format_double(cfg.bin_width)}};
  const std::string head = csv_metadata(meta);
  fs::create_directories(cfg.out);

  std::string summary = head + "metric,n,mean,sd,min,max\n";
  for (const auto& [metric, values] : table) {
    std::vector<double> v;
    for (const auto& [_, x] : values) v.push_back(x);
    const auto counts = fraction_histogram(v, cfg.bin_width);
    std::string csv = head + "# metric=" + metric + "\nbin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < counts.size(); ++b) {
      const double lo = static_cast<double>(b) * cfg.bin_width;
      const double hi = std::min(1.0, lo + cfg.bin_width);
      csv += textio::format_double(lo) + "," + textio::format_double(hi) + "," + std::to_string(counts[b]) + "\n";
    }
    textio::write_file(cfg.out / ("hist-" + metric + ".csv"), csv);

    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    summary += metric + "," + std::to_string(v.size()) + "," + textio::format_double(mean) + "," +
               textio::format_double(std::sqrt(var / static_cast<double>(v.size()))) + "," +
               textio::format_double(*mn) + "," + textio::format_double(*mx) + "\n";
  }
  textio::write_file(cfg.out / "summary.csv", summary);

  // Pairwise correlations over users present in both metrics.
  std::string corr = head + "metric_a,metric_b,n,r\n";
  for (auto a = table.begin(); a != table.end(); ++a) {
    for (auto b = std::next(a); b != table.end(); ++b) {
      std::vector<double> xs, ys;
      for (const auto& [user, x] : a->second) {
        const auto it = b->second.find(user);
        if (it == b->second.end()) continue;
        xs.push_back(x);
        ys.push_back(it->second);
      }
      const auto r = exploration::pearson_r(xs, ys);
      corr += a->first + "," + b->first + "," + std::to_string(xs.size()) + "," +
              (r ? textio::format_double(*r) : std::string()) + "\n";
    }
  }
  textio::write_file(cfg.out / "correlations.csv", corr);
  return 0;
}

}  // namespace mobility::cli
