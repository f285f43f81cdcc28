#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "qbvar/error.hpp"
#include "qbvar/eval.hpp"
#include "synthetic.hpp"

using namespace qbvar;
using namespace qbvar::eval;
using forecast::QuantileForecastSet;
using Catch::Matchers::WithinAbs;

namespace {

const std::vector<double> kQ{0.1, 0.5, 0.9};

QuantileForecastSet make_set(const std::string& id, YearMonth origin, int horizons, Rng& rng, double scale = 1.0) {
  QuantileForecastSet s{id, origin, kQ, Eigen::MatrixXd(horizons, 3)};
  for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values.data()[i] = scale * rng.normal();
  return s;
}

}  // namespace

TEST_CASE("pinball values") {
  CHECK_THAT(pinball(2.0, 0.1), WithinAbs(0.2, 1e-15));
  CHECK_THAT(pinball(-2.0, 0.1), WithinAbs(1.8, 1e-15));
  CHECK(pinball(-2.0, 0.1) / pinball(2.0, 0.1) == 9.0);
  CHECK(pinball(0.0, 0.3) == 0.0);
  CHECK(pinball(-0.0, 0.7) == 0.0);
}

TEST_CASE("pinball is nonnegative, convex and has slopes q and q-1") {
  Rng rng(41);
  for (int k = 0; k < 1000; ++k) {
    const double q = 0.01 + 0.98 * rng.uniform();
    const double a = 5 * rng.normal(), b = 5 * rng.normal(), w = rng.uniform();
    CHECK(pinball(a, q) >= 0.0);
    CHECK(pinball(w * a + (1 - w) * b, q) <= w * pinball(a, q) + (1 - w) * pinball(b, q) + 1e-12);
  }
  const double eps = 1e-6;
  for (double q : {0.1, 0.5, 0.9}) {
    CHECK_THAT((pinball(1.0 + eps, q) - pinball(1.0, q)) / eps, WithinAbs(q, 1e-8));
    CHECK_THAT((pinball(-1.0 + eps, q) - pinball(-1.0, q)) / eps, WithinAbs(q - 1, 1e-8));
    CHECK_THAT((pinball(eps, q) - pinball(0, q)) / eps, WithinAbs(q, 1e-8));
    CHECK_THAT((pinball(0, q) - pinball(-eps, q)) / eps, WithinAbs(q - 1, 1e-8));
  }
}

TEST_CASE("average_qs hand cases") {
  Realizations r{{2000, 1}, {0.0, 1.0, -1.0, 0.5}};
  QuantileForecastSet a{"m", {2000, 1}, {0.5}, Eigen::MatrixXd::Constant(1, 1, 1.0)};
  auto table = average_qs(std::vector<QuantileForecastSet>{a}, r);
  CHECK(table.at("m", 0.5, 1).mean == 0.0);
  CHECK(table.at("m", 0.5, 1).count == 1);

  QuantileForecastSet b1{"m", {2000, 1}, {0.5}, Eigen::MatrixXd::Constant(1, 1, 0.0)};
  QuantileForecastSet b2{"m", {2000, 2}, {0.5}, Eigen::MatrixXd::Constant(1, 1, 0.0)};
  table = average_qs(std::vector<QuantileForecastSet>{b1, b2}, r);
  CHECK(table.at("m", 0.5, 1).mean == 0.5);
  CHECK(table.at("m", 0.5, 1).count == 2);

  // realization not yet observed: pair skipped
  QuantileForecastSet late{"m", {2000, 4}, {0.5}, Eigen::MatrixXd::Constant(2, 1, 0.0)};
  table = average_qs(std::vector<QuantileForecastSet>{late}, r);
  CHECK(table.at("m", 0.5, 1).count == 0);

  Realizations hole{{2000, 1}, {0.0, std::nan(""), 1.0}};
  QuantileForecastSet h{"m", {2000, 1}, {0.5}, Eigen::MatrixXd::Constant(1, 1, 0.0)};
  CHECK_THROWS_AS(average_qs(std::vector<QuantileForecastSet>{h}, hole), InvalidArgument);
  QuantileForecastSet early{"m", {1999, 1}, {0.5}, Eigen::MatrixXd::Constant(1, 1, 0.0)};
  CHECK_THROWS_AS(average_qs(std::vector<QuantileForecastSet>{early}, r), InvalidArgument);
}

TEST_CASE("average_qs matches brute-force summation") {
  Rng rng(42);
  Realizations r{{1990, 1}, {}};
  for (int t = 0; t < 300; ++t) r.values.push_back(rng.normal() * 0.1);
  std::vector<QuantileForecastSet> sets;
  for (int t = 0; t < 250; ++t) {
    sets.push_back(make_set("a", r.first.plus_months(t), 12, rng, 0.1));
    sets.push_back(make_set("b", r.first.plus_months(t), 12, rng, 0.1));
  }
  const EventWindow w{"mid", {1995, 1}, {1999, 12}};
  for (auto align : {Alignment::RealizationDate, Alignment::OriginDate}) {
    for (bool windowed : {false, true}) {
      const auto table = windowed ? average_qs(sets, r, w, align) : average_qs(sets, r);
      std::map<std::tuple<std::string, double, int>, std::pair<long double, std::size_t>> brute;
      for (const auto& s : sets) {
        for (int h = 1; h <= 12; ++h) {
          const int idx = s.origin.index() - r.first.index() + h;
          if (idx >= static_cast<int>(r.values.size())) continue;
          const YearMonth key_date = align == Alignment::RealizationDate ? s.origin.plus_months(h) : s.origin;
          if (windowed && !w.contains(key_date)) continue;
          for (std::size_t j = 0; j < 3; ++j) {
            const double u = r.values[static_cast<std::size_t>(idx)] - s.values(h - 1, static_cast<Eigen::Index>(j));
            auto& cell = brute[{s.model_id, kQ[j], h}];
            cell.first += u * (kQ[j] - (u < 0 ? 1.0 : 0.0));
            cell.second += 1;
          }
        }
      }
      for (const auto& [key, cell] : brute) {
        const auto& got = table.at(std::get<0>(key), std::get<1>(key), std::get<2>(key));
        REQUIRE(got.count == cell.second);
        REQUIRE(std::abs(got.mean - static_cast<double>(cell.first / cell.second)) <= 1e-14);
      }
    }
  }
}

TEST_CASE("one all-covering window equals the unconditional average") {
  Rng rng(43);
  Realizations r{{2000, 1}, {}};
  for (int t = 0; t < 100; ++t) r.values.push_back(rng.normal());
  std::vector<QuantileForecastSet> sets;
  for (int t = 0; t < 90; ++t) sets.push_back(make_set("a", r.first.plus_months(t), 6, rng));
  const auto all = average_qs(sets, r);
  const auto win = average_qs(sets, r, EventWindow{"all", {1900, 1}, {2100, 12}});
  for (const auto& [key, cell] : all.cells) {
    CHECK(win.cells.at(key).mean == cell.mean);
    CHECK(win.cells.at(key).count == cell.count);
  }
}

TEST_CASE("qs ratios") {
  Rng rng(44);
  Realizations r{{2000, 1}, {}};
  for (int t = 0; t < 80; ++t) r.values.push_back(rng.normal());
  std::vector<QuantileForecastSet> sets;
  for (int t = 0; t < 60; ++t) {
    auto a = make_set("a", r.first.plus_months(t), 3, rng);
    QuantileForecastSet half = a;
    half.model_id = "half";
    QuantileForecastSet scaled = a;
    scaled.model_id = "scaled";
    for (int h = 1; h <= 3; ++h) {
      const double y = r.values[static_cast<std::size_t>(t + h)];
      for (Eigen::Index j = 0; j < 3; ++j) {
        // half the forecast error of model a
        half.values(h - 1, j) = y - 0.5 * (y - a.values(h - 1, j));
      }
    }
    sets.push_back(a);
    sets.push_back(half);
  }
  const auto table = average_qs(sets, r);
  const auto self = qs_ratio(table, "a", "a");
  for (const auto& [k, c] : self.cells) {
    CHECK(c.defined);
    CHECK(c.ratio == 1.0);
  }
  for (const auto& [k, c] : qs_ratio(table, "half", "a").cells) CHECK_THAT(c.ratio, WithinAbs(0.5, 1e-12));

  // multiplying every error of both models by c leaves the ratios unchanged
  Realizations r3 = r;
  for (auto& v : r3.values) v *= 3.0;
  std::vector<QuantileForecastSet> sets3 = sets;
  for (auto& s : sets3) s.values *= 3.0;
  const auto t3 = average_qs(sets3, r3);
  const auto base = qs_ratio(table, "half", "a");
  for (const auto& [k, c] : qs_ratio(t3, "half", "a").cells) CHECK_THAT(c.ratio, WithinAbs(base.cells.at(k).ratio, 1e-12));

  // coverage mismatch
  std::vector<QuantileForecastSet> uneven = sets;
  uneven.push_back(make_set("a", r.first.plus_months(61), 3, rng));
  CHECK_THROWS_AS(qs_ratio(average_qs(uneven, r), "half", "a"), InvalidArgument);

  // a zero benchmark score leaves the cell undefined
  Realizations zero{{2000, 1}, {0, 0, 0}};
  QuantileForecastSet z{"z", {2000, 1}, {0.5}, Eigen::MatrixXd::Zero(1, 1)};
  QuantileForecastSet o{"o", {2000, 1}, {0.5}, Eigen::MatrixXd::Ones(1, 1)};
  const auto zt = average_qs(std::vector<QuantileForecastSet>{z, o}, zero);
  CHECK_FALSE(qs_ratio(zt, "o", "z").cells.at({0.5, 1}).defined);
}

TEST_CASE("empty event windows render as n/a") {
  Rng rng(45);
  Realizations r{{2010, 1}, {}};
  for (int t = 0; t < 40; ++t) r.values.push_back(rng.normal());
  std::vector<QuantileForecastSet> sets;
  for (int t = 0; t < 30; ++t) {
    sets.push_back(make_set("q", r.first.plus_months(t), 2, rng));
    sets.push_back(make_set("b", r.first.plus_months(t), 2, rng));
  }
  const auto table = average_qs(sets, r, EventWindow{"Gulf War", {1990, 1}, {1991, 12}});
  CHECK(table.at("q", 0.1, 1).count == 0);
  const auto ratio = qs_ratio(table, "q", "b");
  CHECK_FALSE(ratio.cells.at({0.1, 1}).defined);
  const RatioTable both[] = {ratio};
  const std::string text = render_ratio_tables(both);
  CHECK(text.find("n/a") != std::string::npos);
  CHECK(text.find("0.00") == std::string::npos);

  const auto full = average_qs(sets, r);
  const RatioTable flagged[] = {qs_ratio(full, "q", "b"), qs_ratio(full, "b", "b")};
  const std::string t2 = render_ratio_tables(flagged);
  CHECK(t2.find("1.00") != std::string::npos);
}

TEST_CASE("ratio files round trip") {
  Rng rng(46);
  Realizations r{{2010, 1}, {}};
  for (int t = 0; t < 40; ++t) r.values.push_back(rng.normal());
  std::vector<QuantileForecastSet> sets;
  for (int t = 0; t < 30; ++t) {
    sets.push_back(make_set("q", r.first.plus_months(t), 2, rng));
    sets.push_back(make_set("b", r.first.plus_months(t), 2, rng));
  }
  const auto table = average_qs(sets, r);
  const RatioTable tables[] = {qs_ratio(table, "q", "b"), qs_ratio(table, "b", "b")};
  const auto dir = testing::scratch_dir("eval_io");
  write_ratio_csv(tables, dir / "r.csv");
  const auto back = read_ratio_csv(dir / "r.csv");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].numerator == tables[i].numerator);
    for (const auto& [k, c] : tables[i].cells) CHECK(back[i].cells.at(k).ratio == c.ratio);
  }
  write_score_csv(table, dir / "s.csv");
  CHECK(std::filesystem::file_size(dir / "s.csv") > 0);
}

TEST_CASE("default event windows and crossing frequency") {
  const auto w = default_event_windows();
  CHECK(w.size() == 6);
  for (const auto& e : w) CHECK_NOTHROW(e.validate());
  CHECK_THROWS_AS((EventWindow{"bad", {2001, 1}, {2000, 1}}.validate()), InvalidArgument);

  QuantileForecastSet ok{"m", {2000, 1}, kQ, Eigen::MatrixXd(2, 3)};
  ok.values << -1, 0, 1, -1, 2, 1;
  CHECK(crossing_frequency(std::vector<QuantileForecastSet>{ok}) == 0.5);
}
