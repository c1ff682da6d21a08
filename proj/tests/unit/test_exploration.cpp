#include <doctest.h>

#include <cmath>
#include <ctime>
#include <random>
#include <set>

#include "mobility/exploration.hpp"
#include "oracles.hpp"

using namespace mobility;
using namespace mobility::exploration;

namespace {

constexpr ingest::Timestamp kMonday = 1378080000;  // 2013-09-02 00:00 UTC

stops::StopSequence sequence(const std::vector<int>& places, const std::vector<ingest::Timestamp>& starts) {
  stops::StopSequence seq;
  for (std::size_t i = 0; i < places.size(); ++i) {
    stops::Stop s;
    s.place = places[i];
    s.t_start = starts[i];
    s.t_end = starts[i] + 1000;
    seq.stops.push_back(s);
  }
  return seq;
}

class Peeking final : public ExplorationModel {
 public:
  bool predict(const features::FeatureRow& row) override { return row.explored_next; }
  void update(const features::FeatureRow&, bool) override {}
  std::string name() const override { return "peek"; }
};

class AlwaysExplore final : public ExplorationModel {
 public:
  bool predict(const features::FeatureRow&) override { return true; }
  void update(const features::FeatureRow&, bool) override {}
  std::string name() const override { return "always_explore"; }
};

std::vector<features::FeatureRow> bernoulli_rows(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<features::FeatureRow> rows(n);
  for (auto& r : rows) r.explored_next = coin(rng);
  return rows;
}

// Monday-based week number via the C library calendar.
std::int64_t week_oracle(ingest::Timestamp t, ingest::Timestamp tz) {
  const std::time_t local = t + tz;
  std::tm tm{};
  gmtime_r(&local, &tm);
  const std::int64_t monday = local - ((tm.tm_wday + 6) % 7) * 86400 - tm.tm_hour * 3600 - tm.tm_min * 60 - tm.tm_sec;
  return (monday - (kMonday)) / (7 * 86400);
}

}  // namespace

TEST_CASE("exploration labels") {
  const std::vector<int> p = {0, 1, 0, 2, 1, 2};
  const auto l = label_explorations(p);
  CHECK(l.labels == std::vector<std::uint8_t>{1, 1, 0, 1, 0, 0});
  CHECK(l.n_explorations == 3);
  CHECK(l.p_exploration == 0.5);
  CHECK(label_explorations(std::vector<int>{4}).labels == std::vector<std::uint8_t>{1});
  CHECK(label_explorations(std::vector<int>{}).labels.empty());

  std::mt19937_64 rng(3);
  for (int instance = 0; instance < 100; ++instance) {
    std::uniform_int_distribution<int> place(0, 1 + instance);
    std::vector<int> seq(1 + instance * 5);
    for (auto& x : seq) x = place(rng);
    CHECK(label_explorations(seq).labels == testing::exploration_labels_oracle(seq));
  }
}

TEST_CASE("fraction of places visited once") {
  CHECK(fraction_visited_once(std::vector<int>{0, 1, 0}) == 0.5);
  CHECK(fraction_visited_once(std::vector<int>{0, 1, 2}) == 1.0);
  CHECK_FALSE(fraction_visited_once(std::vector<int>{}).has_value());
}

TEST_CASE("weekly new places") {
  const auto one_week = weekly_new_places(sequence({0, 1, 2, 3, 4}, {kMonday, kMonday + 10000, kMonday + 20000,
                                                                       kMonday + 30000, kMonday + 40000}));
  CHECK(one_week.counts == std::vector<std::size_t>{5});
  CHECK(one_week.cumulative == std::vector<std::size_t>{5});
  CHECK(weekly_new_places(stops::StopSequence{}).counts.empty());

  // A window pads empty weeks at both ends.
  const auto padded = weekly_new_places(sequence({0}, {kMonday + 8 * 86400}),
                                        ingest::TimeWindow{kMonday, kMonday + 21 * 86400, 1.0}, 0);
  CHECK(padded.counts == std::vector<std::size_t>{0, 1, 0});
  CHECK(padded.cumulative == std::vector<std::size_t>{0, 1, 1});

  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> place(0, 30);
  std::uniform_int_distribution<ingest::Timestamp> step(600, 40000);
  for (int instance = 0; instance < 50; ++instance) {
    std::vector<int> places;
    std::vector<ingest::Timestamp> starts;
    ingest::Timestamp t = kMonday + step(rng);
    for (int i = 0; i < 300; ++i) {
      places.push_back(place(rng));
      starts.push_back(t);
      t += step(rng);
    }
    const ingest::Timestamp tz = instance % 2 ? 3600 : -7 * 3600;
    const auto got = weekly_new_places(sequence(places, starts), std::nullopt, tz);
    const auto labels = testing::exploration_labels_oracle(places);
    const auto w0 = week_oracle(starts.front(), tz);
    std::vector<std::size_t> want(static_cast<std::size_t>(week_oracle(starts.back(), tz) - w0 + 1), 0);
    for (std::size_t i = 0; i < places.size(); ++i) {
      if (labels[i]) ++want[static_cast<std::size_t>(week_oracle(starts[i], tz) - w0)];
    }
    CHECK(got.counts == want);
    CHECK(got.cumulative.back() == std::set<int>(places.begin(), places.end()).size());
    CHECK(week_index(starts.front(), tz) - week_index(kMonday, 0) == w0);
  }
}

TEST_CASE("confusion scores") {
  const auto s = score_confusion(3, 1, 2, 10);
  CHECK(s.precision == 0.75);
  CHECK(s.recall == 0.6);
  CHECK(s.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35));
  const auto z = score_confusion(0, 0, 5);
  CHECK(z.precision == 0.0);
  CHECK(z.f1 == 0.0);
}

TEST_CASE("reference models") {
  std::mt19937_64 rng(21);
  const auto rows = bernoulli_rows(rng, 2000, 0.25);
  Peeking peek;
  CHECK(evaluate_exploration(rows, peek).f1 == 1.0);

  AlwaysReturn never;
  const auto n = evaluate_exploration(rows, never);
  CHECK(n.recall == 0.0);
  CHECK(n.f1 == 0.0);
  CHECK(n.tp + n.fp == 0);

  AlwaysExplore always;
  const auto a = evaluate_exploration(rows, always);
  CHECK(a.recall == 1.0);
  CHECK(a.precision == doctest::Approx(static_cast<double>(a.tp) / rows.size()));
  CHECK(a.tp + a.fp + a.fn + a.tn == rows.size());
}

TEST_CASE("random baseline matches the base rate") {
  std::mt19937_64 rng(22);
  for (double p : {0.1, 0.3, 0.5}) {
    const auto rows = bernoulli_rows(rng, 40000, p);
    RandomExploreBaseline model(7);
    const auto s = evaluate_exploration(rows, model);
    CHECK(std::abs(s.precision - p) <= 0.02);
    CHECK(std::abs(s.recall - p) <= 0.05);
    CHECK(std::abs(model.rate() - p) <= 0.02);
  }
}

TEST_CASE("model factory") {
  CHECK(make_exploration_model("random", 1)->name() == "random");
  CHECK(make_exploration_model("always_return", 1)->name() == "always_return");
  CHECK(make_exploration_model("logreg:location,hour", 1)->name() == "logreg:location,hour");
  CHECK_THROWS(make_exploration_model("oracle", 1));
}

TEST_CASE("logistic model picks up a feature that decides the label") {
  std::mt19937_64 rng(23);
  std::bernoulli_distribution coin(0.3);
  std::vector<features::FeatureRow> rows(3000);
  for (auto& r : rows) {
    r.explored_next = coin(rng);
    r.x.weekend = r.explored_next ? 1 : 0;
    r.x.hour = static_cast<int>(rng() % 24);
  }
  auto model = make_exploration_model("logreg:weekend,hour", 1);
  CHECK(evaluate_exploration(rows, *model).f1 > 0.9);
}

TEST_CASE("pearson correlation") {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int instance = 0; instance < 50; ++instance) {
    std::vector<double> x(2 + instance * 7), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = 1e3 + g(rng);
      y[i] = 0.5 * x[i] + g(rng);
    }
    const auto r = pearson_r(x, y);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(testing::pearson_oracle(x, y)).epsilon(1e-9));
  }
  const std::vector<double> a = {1, 2, 3}, b = {2, 4, 6}, c = {1, 1, 1};
  CHECK(*pearson_r(a, b) == doctest::Approx(1.0));
  CHECK_FALSE(pearson_r(a, c).has_value());
  CHECK_FALSE(pearson_r(std::vector<double>{1}, std::vector<double>{2}).has_value());
  CHECK_FALSE(pearson_r(a, std::vector<double>{1, 2}).has_value());
}
