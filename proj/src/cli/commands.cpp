#include "mobility/cli.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobility/discretize.hpp"
#include "mobility/exploration.hpp"
#include "mobility/features.hpp"
#include "mobility/ingest.hpp"
#include "mobility/predictability.hpp"
#include "mobility/predictors.hpp"
#include "mobility/stops.hpp"
#include "mobility/synth.hpp"
#include "mobility/textio.hpp"

namespace mobility::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using ingest::Timestamp;

std::string csv_metadata(const Metadata& meta) {
  std::string out;
  for (const auto& [k, v] : meta) out += "# " + k + "=" + v + "\n";
  return out;
}

std::vector<std::string> parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return errors;
}

namespace {

// splitmix64 finalizer; gives well-separated per-user seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string fmt(double v) { return textio::format_double(v); }

Metadata base_metadata(const std::string& command) {
  return {{"tool", "mobility"}, {"version", MOBILITY_VERSION}, {"command", command}};
}

json json_metadata(const Metadata& meta) {
  json out = json::object();
  for (const auto& [k, v] : meta) out[k] = v;
  return out;
}

void write_json(const fs::path& path, const json& doc) { textio::write_file(path, doc.dump(2) + "\n"); }

fs::path require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("missing input file: " + path.string());
  return path;
}

// `name` or its gzip twin `name.gz`, whichever exists first.
std::optional<fs::path> find_input(const fs::path& dir, const std::string& name) {
  for (const auto& candidate : {dir / name, dir / (name + ".gz")}) {
    if (fs::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

void report_failures(const std::vector<std::string>& users, const std::vector<std::string>& errors,
                     std::vector<UserFailure>& failures) {
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (errors[i].empty()) continue;
    std::cerr << "user " << users[i] << ": " << errors[i] << "\n";
    failures.push_back({users[i], errors[i]});
  }
}

json failures_json(const std::vector<UserFailure>& failures) {
  json out = json::array();
  for (const auto& f : failures) out.push_back({{"user_id", f.user_id}, {"error", f.error}});
  return out;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ':') c = '-';
    else if (c == ',') c = '+';
    else if (c == '/' || c == ' ') c = '_';
  }
  return s;
}

Formulation parse_formulation(const std::string& s) {
  if (s == "next_cell") return Formulation::next_cell;
  if (s == "next_place") return Formulation::next_place;
  throw UsageError("unknown formulation '" + s + "' (expected next_cell or next_place)");
}

// ---- pipeline directory --------------------------------------------------

struct PipelineData {
  std::vector<std::string> users;
  std::map<std::string, ingest::TimeWindow> windows;
  ingest::SamplesByUser samples;
  ingest::EventsByUser events;
};

PipelineData load_pipeline(const fs::path& dir, bool need_samples, bool need_events) {
  PipelineData data;
  const auto text = textio::read_file(require_file(dir / "windows.csv"));
  bool header = false;
  textio::for_each_data_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!header) {
      header = true;
      return;
    }
    const auto f = textio::split(line);
    ingest::TimeWindow w;
    long long start = 0, end = 0;
    if (f.size() != 4 || !textio::parse_int64(f[1], start) || !textio::parse_int64(f[2], end) ||
        !textio::parse_double(f[3], w.completeness)) {
      throw FormatError("windows.csv line " + std::to_string(line_no) + ": malformed row");
    }
    w.start = start;
    w.end = end;
    data.users.emplace_back(f[0]);
    data.windows[std::string(f[0])] = w;
  });
  if (need_samples) data.samples = ingest::read_samples(require_file(dir / "samples.csv").string()).by_user;
  if (need_events && fs::is_regular_file(dir / "context.csv")) {
    data.events = ingest::read_events((dir / "context.csv").string()).by_user;
  }
  return data;
}

stops::StopSequence load_stops(const fs::path& dir, const std::string& user) {
  return stops::parse_stop_sequence(textio::read_file(require_file(dir / "stops" / (user + ".csv"))), user);
}

template <typename Map>
const typename Map::mapped_type& lookup_or_empty(const Map& m, const std::string& key) {
  static const typename Map::mapped_type empty{};
  const auto it = m.find(key);
  return it == m.end() ? empty : it->second;
}

SymbolStream next_cell_stream(const PipelineData& data, const std::string& user, double cell_size_m, Timestamp bin_s,
                              int fill_limit) {
  const auto& samples = lookup_or_empty(data.samples, user);
  const auto seq = discretize::build_cell_sequence(samples, data.windows.at(user), bin_s, cell_size_m, fill_limit);
  return discretize::to_symbol_stream(seq);
}

std::string user_name(std::size_t i, std::size_t n) {
  std::string digits = std::to_string(i);
  const std::size_t width = std::max<std::size_t>(3, std::to_string(n > 0 ? n - 1 : 0).size());
  return "u" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace

// ---- synth ---------------------------------------------------------------

std::size_t cmd_synth(const SynthConfig& cfg) {
  if (cfg.users == 0) throw UsageError("--users must be positive");
  if (cfg.bin_s <= 0) throw UsageError("--bin must be positive");
  Metadata meta = base_metadata("synth");
  meta.insert(meta.end(), {{"users", std::to_string(cfg.users)},
                           {"stops", std::to_string(cfg.stops)},
                           {"rho", fmt(cfg.rho)},
                           {"gamma", fmt(cfg.gamma)},
                           {"stay_alpha", fmt(cfg.stay_alpha)},
                           {"jitter_m", fmt(cfg.jitter_m)},
                           {"bin_s", std::to_string(cfg.bin_s)},
                           {"seed", std::to_string(cfg.seed)}});

  struct Output {
    std::string samples, events, truth, truth_stops;
    std::size_t n_places = 0;
    double p_exploration = 0.0;
  };
  std::vector<std::string> users(cfg.users);
  for (std::size_t i = 0; i < cfg.users; ++i) users[i] = user_name(i, cfg.users);
  std::vector<Output> outputs(cfg.users);

  auto errors = parallel_for(cfg.users, cfg.threads, [&](std::size_t i) {
    synth::EprParams p;
    p.user_id = users[i];
    p.rho = cfg.rho;
    p.gamma = cfg.gamma;
    p.n_stops = cfg.stops;
    p.stay_pareto_alpha = cfg.stay_alpha;
    p.seed = mix_seed(cfg.seed, i);
    const auto trace = synth::epr_generate(p);
    auto& o = outputs[i];
    for (const auto& s : synth::expand_to_samples(trace, cfg.bin_s, cfg.jitter_m, p.seed)) {
      ingest::append_sample_row(o.samples, s);
    }
    for (const auto& e : synth::synth_context_events(trace, p.seed)) ingest::append_event_row(o.events, e);
    o.truth = synth::serialize_ground_truth(trace);
    o.truth_stops = stops::serialize_stop_sequence(trace.as_stop_sequence());
    o.n_places = trace.places.size();
    const auto labels = exploration::label_explorations(trace.place_sequence());
    o.p_exploration = labels.p_exploration;
  });

  std::vector<UserFailure> failures;
  report_failures(users, errors, failures);

  fs::create_directories(cfg.out / "truth");
  const std::string head = csv_metadata(meta);
  std::string samples = head + ingest::samples_header();
  std::string events = head + ingest::events_header();
  json summary = json::array();
  for (std::size_t i = 0; i < cfg.users; ++i) {
    if (!errors[i].empty()) continue;
    samples += outputs[i].samples;
    events += outputs[i].events;
    Metadata user_meta = meta;
    user_meta.emplace_back("user_id", users[i]);
    user_meta.emplace_back("user_seed", std::to_string(mix_seed(cfg.seed, i)));
    textio::write_file(cfg.out / "truth" / (users[i] + ".csv"), csv_metadata(user_meta) + outputs[i].truth);
    textio::write_file(cfg.out / "truth" / (users[i] + ".stops.csv"), csv_metadata(user_meta) + outputs[i].truth_stops);
    summary.push_back(
        {{"user_id", users[i]}, {"n_places", outputs[i].n_places}, {"p_exploration", outputs[i].p_exploration}});
  }
  textio::write_file(cfg.out / "trajectories.csv", samples);
  textio::write_file(cfg.out / "context.csv", events);
  write_json(cfg.out / "synth.json",
             {{"metadata", json_metadata(meta)}, {"users", summary}, {"failures", failures_json(failures)}});
  return failures.size();
}

// ---- pipeline ------------------------------------------------------------

std::size_t cmd_pipeline(const PipelineConfig& cfg) {
  if (cfg.bin_s <= 0) throw UsageError("--bin must be positive");
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) throw UsageError("--threshold must lie in (0, 1]");
  if (cfg.min_pts < 1) throw UsageError("--min-pts must be at least 1");
  Metadata meta = base_metadata("pipeline");
  meta.insert(meta.end(), {{"delta_m", fmt(cfg.delta_m)},
                           {"eps_m", fmt(cfg.eps_m)},
                           {"min_pts", std::to_string(cfg.min_pts)},
                           {"min_duration_s", std::to_string(cfg.min_duration_s)},
                           {"gap_s", std::to_string(cfg.gap_s)},
                           {"bin_s", std::to_string(cfg.bin_s)},
                           {"threshold", fmt(cfg.threshold)},
                           {"min_days", fmt(cfg.min_days)}});

  const auto traj = find_input(cfg.in, "trajectories.csv");
  if (!traj) throw IoError("missing input file: " + (cfg.in / "trajectories.csv").string());
  const auto parsed = ingest::read_samples(traj->string());
  if (parsed.rejected > 0) std::cerr << "trajectories.csv: " << parsed.rejected << " malformed rows skipped\n";
  ingest::EventsByUser events;
  if (const auto ctx = find_input(cfg.in, "context.csv")) events = ingest::read_events(ctx->string()).by_user;

  std::vector<std::string> users;
  for (const auto& [u, _] : parsed.by_user) users.push_back(u);

  struct Output {
    ingest::TimeWindow window;
    std::string samples, events, stops_csv;
    stops::StopSequence seq;
    stops::DailyRate rate;
    std::optional<synth::RecoveryStats> recovery;
    std::size_t n_samples = 0;
  };
  std::vector<Output> outputs(users.size());

  const stops::StopParams sp{cfg.delta_m, cfg.min_duration_s, cfg.gap_s, stops::JoinRule::median_centroid};
  const stops::ClusterParams cp{cfg.eps_m, cfg.min_pts};
  const auto min_length = static_cast<Timestamp>(cfg.min_days * static_cast<double>(ingest::kSecondsPerDay));

  auto errors = parallel_for(users.size(), cfg.threads, [&](std::size_t i) {
    const auto& user = users[i];
    const auto& samples = parsed.by_user.at(user);
    const auto window = ingest::select_complete_window(samples, cfg.bin_s, cfg.threshold, min_length);
    if (!window) throw std::runtime_error("no window of the required length and completeness");
    auto& o = outputs[i];
    o.window = *window;
    const auto kept = ingest::filter_to_window(samples, *window);
    o.n_samples = kept.size();
    for (const auto& s : kept) ingest::append_sample_row(o.samples, s);
    for (const auto& e : ingest::filter_to_window(lookup_or_empty(events, user), *window)) {
      ingest::append_event_row(o.events, e);
    }
    o.seq = stops::build_stop_sequence(kept, sp, cp);
    o.rate = stops::stops_per_day(o.seq, *window, features::kDefaultTzOffsetS);
    Metadata user_meta = meta;
    user_meta.emplace_back("user_id", user);
    o.stops_csv = csv_metadata(user_meta) + stops::serialize_stop_sequence(o.seq);

    const auto truth_path = cfg.in / "truth" / (user + ".stops.csv");
    if (fs::is_regular_file(truth_path)) {
      auto truth = stops::parse_stop_sequence(textio::read_file(truth_path), user);
      std::erase_if(truth.stops, [&](const stops::Stop& s) { return s.t_start < window->start || s.t_end >= window->end; });
      o.recovery = synth::stop_recovery(truth, o.seq);
    }
  });

  std::vector<UserFailure> failures;
  report_failures(users, errors, failures);

  fs::create_directories(cfg.out / "stops");
  const std::string head = csv_metadata(meta);
  std::string samples = head + ingest::samples_header();
  std::string ev = head + ingest::events_header();
  std::string windows = head + "user_id,start,end,completeness\n";
  json per_user = json::array();
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!errors[i].empty()) continue;
    const auto& o = outputs[i];
    samples += o.samples;
    ev += o.events;
    windows += users[i] + "," + std::to_string(o.window.start) + "," + std::to_string(o.window.end) + "," +
               fmt(o.window.completeness) + "\n";
    textio::write_file(cfg.out / "stops" / (users[i] + ".csv"), o.stops_csv);
    json row = {{"user_id", users[i]},
                {"window_start", o.window.start},
                {"window_end", o.window.end},
                {"completeness", o.window.completeness},
                {"n_samples", o.n_samples},
                {"n_stops", o.seq.stops.size()},
                {"n_places", o.seq.n_places},
                {"stops_per_day", o.rate.mean},
                {"stops_per_day_sd", o.rate.sd}};
    if (o.recovery) {
      row["truth_stops"] = o.recovery->truth_stops;
      row["recovered"] = o.recovery->recovered;
      row["recovery"] = o.recovery->fraction;
    }
    per_user.push_back(std::move(row));
  }
  textio::write_file(cfg.out / "samples.csv", samples);
  textio::write_file(cfg.out / "context.csv", ev);
  textio::write_file(cfg.out / "windows.csv", windows);
  write_json(cfg.out / "pipeline.json",
             {{"metadata", json_metadata(meta)}, {"users", per_user}, {"failures", failures_json(failures)}});
  return failures.size();
}

// ---- predict ---------------------------------------------------------------

std::string predict_file_name(const PredictConfig& cfg) {
  std::string name = "predict-" + cfg.formulation + "-" + sanitize(cfg.model);
  if (cfg.formulation == "next_cell") {
    name += "-c" + fmt(cfg.cell_size_m) + "-b" + std::to_string(cfg.bin_s);
  }
  return name + ".json";
}

std::size_t cmd_predict(const PredictConfig& cfg) {
  const Formulation formulation = parse_formulation(cfg.formulation);
  std::optional<features::FeatureSet> feature_set;
  if (cfg.model.starts_with("logreg:")) {
    if (formulation != Formulation::next_place) throw UsageError("logreg models need the next_place formulation");
    try {
      feature_set = features::parse_feature_set(std::string_view(cfg.model).substr(7));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else if (cfg.model == "stationary") {
    if (formulation == Formulation::next_place) {
      throw UsageError("the stationary model is undefined for next_place: consecutive places always differ");
    }
  } else if (cfg.model != "toploc" && cfg.model != "markov") {
    throw UsageError("unknown model '" + cfg.model + "' (expected toploc, stationary, markov or logreg:<features>)");
  }
  if (formulation == Formulation::next_cell && (cfg.cell_size_m <= 0.0 || cfg.bin_s <= 0)) {
    throw UsageError("--cell-size and --bin must be positive");
  }

  Metadata meta = base_metadata("predict");
  meta.insert(meta.end(), {{"formulation", cfg.formulation}, {"model", cfg.model}});
  if (formulation == Formulation::next_cell) {
    meta.insert(meta.end(), {{"cell_size_m", fmt(cfg.cell_size_m)},
                             {"bin_s", std::to_string(cfg.bin_s)},
                             {"fill_limit", std::to_string(cfg.fill_limit)}});
  } else if (feature_set) {
    meta.emplace_back("tz_offset_s", std::to_string(cfg.tz_offset_s));
  }

  const auto data = load_pipeline(cfg.in, formulation == Formulation::next_cell, feature_set.has_value());
  std::vector<predictors::PredictionReport> reports(data.users.size());
  auto errors = parallel_for(data.users.size(), cfg.threads, [&](std::size_t i) {
    const auto& user = data.users[i];
    if (feature_set) {
      const auto seq = load_stops(cfg.in, user);
      const auto rows = features::build_feature_rows(seq, lookup_or_empty(data.events, user), cfg.tz_offset_s);
      reports[i] = features::evaluate_logreg_next_place(rows, *feature_set, {}, cfg.write_steps);
      return;
    }
    const SymbolStream stream = formulation == Formulation::next_cell
                                    ? next_cell_stream(data, user, cfg.cell_size_m, cfg.bin_s, cfg.fill_limit)
                                    : stops::to_symbol_stream(load_stops(cfg.in, user));
    std::unique_ptr<predictors::SequencePredictor> predictor;
    if (cfg.model == "toploc") predictor = std::make_unique<predictors::ToplocPredictor>();
    else if (cfg.model == "stationary") predictor = std::make_unique<predictors::StationaryPredictor>();
    else predictor = std::make_unique<predictors::MarkovPredictor>();
    reports[i] = predictors::evaluate_online(stream, *predictor, cfg.write_steps);
  });

  std::vector<UserFailure> failures;
  report_failures(data.users, errors, failures);

  fs::create_directories(cfg.out);
  const std::string stem = predict_file_name(cfg).substr(0, predict_file_name(cfg).size() - 5);
  json per_user = json::array();
  for (std::size_t i = 0; i < data.users.size(); ++i) {
    if (!errors[i].empty()) continue;
    const auto& r = reports[i];
    json row = {{"user_id", data.users[i]}, {"n_predictions", r.n_predictions}, {"n_correct", r.n_correct}};
    row["accuracy"] = r.n_predictions > 0 ? json(r.accuracy) : json(nullptr);
    per_user.push_back(std::move(row));
    if (cfg.write_steps) {
      std::string csv = csv_metadata(meta) + "index,predicted,actual,correct\n";
      for (const auto& s : r.per_step) {
        csv += std::to_string(s.index) + "," + std::to_string(s.predicted) + "," + std::to_string(s.actual) + "," +
               (s.correct ? "1" : "0") + "\n";
      }
      fs::create_directories(cfg.out / "steps" / stem);
      textio::write_file(cfg.out / "steps" / stem / (data.users[i] + ".csv"), csv);
    }
  }
  write_json(cfg.out / predict_file_name(cfg),
             {{"metadata", json_metadata(meta)}, {"users", per_user}, {"failures", failures_json(failures)}});
  return failures.size();
}

// ---- bound -----------------------------------------------------------------

std::string bound_file_name(const BoundConfig& cfg) {
  std::string name = "bound-" + cfg.formulation;
  if (cfg.formulation == "next_cell") name += "-c" + fmt(cfg.cell_size_m) + "-b" + std::to_string(cfg.bin_s);
  return name + ".csv";
}

std::size_t cmd_bound(const BoundConfig& cfg) {
  const Formulation formulation = parse_formulation(cfg.formulation);
  if (formulation == Formulation::next_cell && (cfg.cell_size_m <= 0.0 || cfg.bin_s <= 0)) {
    throw UsageError("--cell-size and --bin must be positive");
  }
  Metadata meta = base_metadata("bound");
  meta.emplace_back("formulation", cfg.formulation);
  if (formulation == Formulation::next_cell) {
    meta.insert(meta.end(), {{"cell_size_m", fmt(cfg.cell_size_m)},
                             {"bin_s", std::to_string(cfg.bin_s)},
                             {"fill_limit", std::to_string(cfg.fill_limit)}});
  }
  const auto data = load_pipeline(cfg.in, formulation == Formulation::next_cell, false);
  std::vector<predictability::PredictabilityBound> bounds(data.users.size());
  auto errors = parallel_for(data.users.size(), cfg.threads, [&](std::size_t i) {
    const auto& user = data.users[i];
    const SymbolStream stream = formulation == Formulation::next_cell
                                    ? next_cell_stream(data, user, cfg.cell_size_m, cfg.bin_s, cfg.fill_limit)
                                    : stops::to_symbol_stream(load_stops(cfg.in, user));
    bounds[i] = predictability::bound_for_stream(stream.symbols);
  });
  std::vector<UserFailure> failures;
  report_failures(data.users, errors, failures);

  std::string csv = csv_metadata(meta);
  for (const auto& f : failures) csv += "# failed " + f.user_id + ": " + f.error + "\n";
  csv += "user_id,formulation,n,N,s_bits,pi_max\n";
  for (std::size_t i = 0; i < data.users.size(); ++i) {
    if (!errors[i].empty()) continue;
    const auto& b = bounds[i];
    csv += data.users[i] + "," + cfg.formulation + "," + std::to_string(b.entropy.n) + "," +
           std::to_string(b.entropy.n_symbols) + "," + fmt(b.entropy.s_bits) + "," + fmt(b.pi_max) + "\n";
  }
  fs::create_directories(cfg.out);
  textio::write_file(cfg.out / bound_file_name(cfg), csv);
  return failures.size();
}

// ---- explore ---------------------------------------------------------------

std::string explore_file_name(const std::string& model) { return "explore-" + sanitize(model) + ".json"; }

std::size_t cmd_explore(const ExploreConfig& cfg) {
  if (cfg.models.empty()) throw UsageError("--model needs at least one value");
  for (const auto& m : cfg.models) {
    try {
      exploration::make_exploration_model(m, 0, cfg.threshold);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const auto data = load_pipeline(cfg.in, false, true);

  struct Output {
    stops::StopSequence seq;
    std::vector<features::FeatureRow> rows;
    std::vector<exploration::PrecisionRecallF1> scores;
  };
  std::vector<Output> outputs(data.users.size());
  auto errors = parallel_for(data.users.size(), cfg.threads, [&](std::size_t i) {
    auto& o = outputs[i];
    o.seq = load_stops(cfg.in, data.users[i]);
    o.rows = features::build_feature_rows(o.seq, lookup_or_empty(data.events, data.users[i]), cfg.tz_offset_s);
    for (const auto& m : cfg.models) {
      auto model = exploration::make_exploration_model(m, mix_seed(cfg.seed, i), cfg.threshold);
      o.scores.push_back(exploration::evaluate_exploration(o.rows, *model));
    }
  });
  std::vector<UserFailure> failures;
  report_failures(data.users, errors, failures);

  fs::create_directories(cfg.out);
  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    Metadata meta = base_metadata("explore");
    meta.insert(meta.end(), {{"model", cfg.models[m]},
                             {"threshold", fmt(cfg.threshold)},
                             {"tz_offset_s", std::to_string(cfg.tz_offset_s)},
                             {"seed", std::to_string(cfg.seed)}});
    json per_user = json::array();
    for (std::size_t i = 0; i < data.users.size(); ++i) {
      if (!errors[i].empty()) continue;
      const auto& o = outputs[i];
      const auto labels = o.seq.labels();
      const auto ex = exploration::label_explorations(labels);
      const auto once = exploration::fraction_visited_once(labels);
      const auto weekly = exploration::weekly_new_places(o.seq, data.windows.at(data.users[i]), cfg.tz_offset_s);
      const auto& s = o.scores[m];
      per_user.push_back({{"user_id", data.users[i]},
                          {"n_stops", o.seq.stops.size()},
                          {"p_exploration", ex.p_exploration},
                          {"fraction_visited_once", once ? json(*once) : json(nullptr)},
                          {"weekly_new_places", weekly.counts},
                          {"precision", s.precision},
                          {"recall", s.recall},
                          {"f1", s.f1},
                          {"tp", s.tp},
                          {"fp", s.fp},
                          {"fn", s.fn},
                          {"tn", s.tn}});
    }
    write_json(cfg.out / explore_file_name(cfg.models[m]),
               {{"metadata", json_metadata(meta)}, {"users", per_user}, {"failures", failures_json(failures)}});
  }
  return failures.size();
}

// ---- front end -------------------------------------------------------------

namespace {

// Flat `key=value` config: each key names a long flag of the chosen
// subcommand and is applied only when that flag is absent from argv.
std::vector<std::string> apply_config(std::vector<std::string> args, CLI::App& app) {
  std::optional<std::string> config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].starts_with("--config=")) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!config_path) return args;

  std::size_t sub_pos = 0;
  CLI::App* sub = nullptr;
  for (std::size_t i = 1; i < args.size() && !sub; ++i) {
    for (auto* s : app.get_subcommands({})) {
      if (s->get_name() == args[i]) {
        sub = s;
        sub_pos = i;
        break;
      }
    }
  }
  if (!sub) throw UsageError("--config given without a subcommand");

  std::vector<std::string> injected;
  const auto text = textio::read_file(*config_path);
  textio::for_each_data_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(*config_path + " line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(textio::trim(line.substr(0, eq)));
    const std::string value(textio::trim(line.substr(eq + 1)));
    const std::string flag = "--" + key;
    if (sub->get_option_no_throw(flag) == nullptr) {
      throw UsageError(*config_path + ": '" + key + "' is not an option of " + sub->get_name());
    }
    const bool on_command_line = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.starts_with(flag + "=");
    });
    if (!on_command_line) injected.push_back(flag + "=" + value);
  });
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Mobility predictability toolkit", "mobility"};
  app.set_version_flag("--version", MOBILITY_VERSION);
  app.require_subcommand(1);
  app.add_option("--config", "Flat key=value file with subcommand flag defaults");

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());

  SynthConfig synth_cfg;
  synth_cfg.threads = hw;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic trajectories and ground truth");
  synth_cmd->add_option("--out", synth_cfg.out, "Output directory")->required();
  synth_cmd->add_option("--users", synth_cfg.users, "Number of users")->capture_default_str();
  synth_cmd->add_option("--stops", synth_cfg.stops, "Stops per user")->capture_default_str();
  synth_cmd->add_option("--rho", synth_cfg.rho, "Exploration scale")->capture_default_str();
  synth_cmd->add_option("--gamma", synth_cfg.gamma, "Exploration exponent")->capture_default_str();
  synth_cmd->add_option("--stay-alpha", synth_cfg.stay_alpha, "Pareto exponent of stay durations")->capture_default_str();
  synth_cmd->add_option("--jitter", synth_cfg.jitter_m, "Gaussian position noise (m)")->capture_default_str();
  synth_cmd->add_option("--bin", synth_cfg.bin_s, "Sampling interval (s)")->capture_default_str();
  synth_cmd->add_option("--seed", synth_cfg.seed, "Base seed")->capture_default_str();
  synth_cmd->add_option("--threads", synth_cfg.threads, "Worker threads");

  PipelineConfig pipe_cfg;
  pipe_cfg.threads = hw;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Window selection, stop extraction and place clustering");
  pipe_cmd->add_option("--in", pipe_cfg.in, "Directory with trajectories.csv[.gz] [context.csv[.gz] truth/]")->required();
  pipe_cmd->add_option("--out", pipe_cfg.out, "Output directory")->required();
  pipe_cmd->add_option("--delta", pipe_cfg.delta_m, "Stop join distance (m)")->capture_default_str();
  pipe_cmd->add_option("--eps", pipe_cfg.eps_m, "DBSCAN radius (m)")->capture_default_str();
  pipe_cmd->add_option("--min-pts", pipe_cfg.min_pts, "DBSCAN core size")->capture_default_str();
  pipe_cmd->add_option("--min-duration", pipe_cfg.min_duration_s, "Minimum stop duration (s)")->capture_default_str();
  pipe_cmd->add_option("--gap", pipe_cfg.gap_s, "Largest gap inside a stop (s)")->capture_default_str();
  pipe_cmd->add_option("--bin", pipe_cfg.bin_s, "Completeness bin (s)")->capture_default_str();
  pipe_cmd->add_option("--threshold", pipe_cfg.threshold, "Window completeness threshold")->capture_default_str();
  pipe_cmd->add_option("--min-days", pipe_cfg.min_days, "Minimum window length (days)")->capture_default_str();
  pipe_cmd->add_option("--threads", pipe_cfg.threads, "Worker threads");

  PredictConfig pred_cfg;
  pred_cfg.threads = hw;
  auto* pred_cmd = app.add_subcommand("predict", "Online next-cell / next-place prediction");
  pred_cmd->add_option("--in", pred_cfg.in, "Pipeline output directory")->required();
  pred_cmd->add_option("--out", pred_cfg.out, "Output directory")->required();
  pred_cmd->add_option("--formulation", pred_cfg.formulation, "next_cell or next_place")->capture_default_str();
  pred_cmd->add_option("--model", pred_cfg.model, "toploc, stationary, markov or logreg:<features>")
      ->capture_default_str();
  pred_cmd->add_option("--cell-size", pred_cfg.cell_size_m, "Grid cell size (m)")->capture_default_str();
  pred_cmd->add_option("--bin", pred_cfg.bin_s, "Time bin (s)")->capture_default_str();
  pred_cmd->add_option("--fill-limit", pred_cfg.fill_limit, "Forward-filled empty bins")->capture_default_str();
  pred_cmd->add_option("--tz-offset", pred_cfg.tz_offset_s, "Civil time offset (s)")->capture_default_str();
  pred_cmd->add_flag("--steps", pred_cfg.write_steps, "Write per-step predictions");
  pred_cmd->add_option("--threads", pred_cfg.threads, "Worker threads");

  BoundConfig bound_cfg;
  bound_cfg.threads = hw;
  auto* bound_cmd = app.add_subcommand("bound", "Entropy and predictability upper bound per user");
  bound_cmd->add_option("--in", bound_cfg.in, "Pipeline output directory")->required();
  bound_cmd->add_option("--out", bound_cfg.out, "Output directory")->required();
  bound_cmd->add_option("--formulation", bound_cfg.formulation, "next_cell or next_place")->capture_default_str();
  bound_cmd->add_option("--cell-size", bound_cfg.cell_size_m, "Grid cell size (m)")->capture_default_str();
  bound_cmd->add_option("--bin", bound_cfg.bin_s, "Time bin (s)")->capture_default_str();
  bound_cmd->add_option("--fill-limit", bound_cfg.fill_limit, "Forward-filled empty bins")->capture_default_str();
  bound_cmd->add_option("--threads", bound_cfg.threads, "Worker threads");

  ExploreConfig explore_cfg;
  explore_cfg.threads = hw;
  auto* explore_cmd = app.add_subcommand("explore", "Exploration statistics and prediction");
  explore_cmd->add_option("--in", explore_cfg.in, "Pipeline output directory")->required();
  explore_cmd->add_option("--out", explore_cfg.out, "Output directory")->required();
  explore_cmd->add_option("--model", explore_cfg.models, "random, always_return or logreg:<features> (repeatable)")
      ->capture_default_str();
  explore_cmd->add_option("--threshold", explore_cfg.threshold, "Decision threshold")->capture_default_str();
  explore_cmd->add_option("--tz-offset", explore_cfg.tz_offset_s, "Civil time offset (s)")->capture_default_str();
  explore_cmd->add_option("--seed", explore_cfg.seed, "Seed for the random baseline")->capture_default_str();
  explore_cmd->add_option("--threads", explore_cfg.threads, "Worker threads");

  ReportConfig report_cfg;
  auto* report_cmd = app.add_subcommand("report", "Population histograms and correlation tables");
  report_cmd->add_option("--in", report_cfg.in, "Directory with predict/bound/explore outputs")->required();
  report_cmd->add_option("--out", report_cfg.out, "Output directory")->required();
  report_cmd->add_option("--bin-width", report_cfg.bin_width, "Histogram bin width")->capture_default_str();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = apply_config(std::move(args), app);
    std::vector<const char*> ptrs;
    for (const auto& a : args) ptrs.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? 0 : 2;
    }

    std::size_t failed = 0;
    if (*synth_cmd) failed = cmd_synth(synth_cfg);
    else if (*pipe_cmd) failed = cmd_pipeline(pipe_cfg);
    else if (*pred_cmd) failed = cmd_predict(pred_cfg);
    else if (*bound_cmd) failed = cmd_bound(bound_cfg);
    else if (*explore_cmd) failed = cmd_explore(explore_cfg);
    else if (*report_cmd) failed = cmd_report(report_cfg);
    if (failed > 0) std::cerr << failed << " user(s) failed; see messages above\n";
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mobility::cli
