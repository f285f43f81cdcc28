#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "qbvar/combine.hpp"
#include "qbvar/error.hpp"
#include "synthetic.hpp"

using namespace qbvar;
using namespace qbvar::combine;
using forecast::QuantileForecastSet;
using Catch::Matchers::WithinAbs;

namespace {

const std::vector<double> kQ{0.1, 0.5, 0.9};

double grid_min(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& y, double q) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 10000; ++i) best = std::min(best, combined_loss(a, b, y, q, i * 1e-4));
  return best;
}

}  // namespace

TEST_CASE("fixed combination") {
  QuantileForecastSet a{"q", {2000, 1}, kQ, Eigen::MatrixXd::Constant(2, 3, 2.0)};
  QuantileForecastSet b{"b", {2000, 1}, kQ, Eigen::MatrixXd::Constant(2, 3, 4.0)};
  a.values(1, 2) = 0.1 + 0.2;
  b.values(0, 1) = 1.0 / 3.0;
  CHECK(combine_fixed(a, b, 1.0).values == a.values);
  CHECK(combine_fixed(a, b, 0.0).values == b.values);
  CHECK(combine_fixed(a, b, 0.5).values(0, 0) == 3.0);
  CHECK_THROWS_AS(combine_fixed(a, b, 1.5), InvalidArgument);
  QuantileForecastSet other = b;
  other.origin = {2000, 2};
  CHECK_THROWS_AS(combine_fixed(a, other, 0.5), InvalidArgument);
}

TEST_CASE("performance weight") {
  const std::vector<double> one(50, 1.0), three(50, 3.0), zero(50, 0.0);
  CHECK(performance_weight(one, one, 50).lambda == 0.5);
  CHECK(performance_weight(one, three, 50).lambda == 0.75);
  CHECK(performance_weight(zero, three, 50).lambda == 1.0);
  const auto warm = performance_weight(std::vector<double>(10, 1.0), std::vector<double>(10, 3.0), 50);
  CHECK(warm.warm_up);
  CHECK(warm.lambda == 0.5);

  // uses exactly the last S entries
  std::vector<double> qa(60, 100.0), qb(60, 100.0);
  std::fill(qa.end() - 50, qa.end(), 1.0);
  std::fill(qb.end() - 50, qb.end(), 3.0);
  CHECK(performance_weight(qa, qb, 50).lambda == 0.75);

  Rng rng(51);
  std::vector<double> x(50), y(50), cx(50), cy(50);
  for (int i = 0; i < 50; ++i) {
    x[i] = rng.exponential();
    y[i] = rng.exponential();
    cx[i] = 7.5 * x[i];
    cy[i] = 7.5 * y[i];
  }
  CHECK_THAT(performance_weight(cx, cy, 50).lambda, WithinAbs(performance_weight(x, y, 50).lambda, 1e-14));
}

TEST_CASE("optimal weight special cases") {
  Rng rng(52);
  std::vector<double> y(30), a(30), b(30);
  for (int i = 0; i < 30; ++i) {
    y[i] = rng.normal();
    b[i] = rng.normal();
  }
  a = y;
  const auto perfect = optimal_weight(a, b, y, 0.1, 30);
  CHECK(perfect.lambda == 1.0);
  CHECK(combined_loss(a, b, y, 0.1, perfect.lambda) == 0.0);

  const auto flat = optimal_weight(b, b, y, 0.5, 30);
  CHECK(flat.lambda == 0.5);

  const auto warm = optimal_weight(std::vector<double>(5, 0.0), std::vector<double>(5, 1.0),
                                   std::vector<double>(5, 0.5), 0.5, 75);
  CHECK(warm.warm_up);
  CHECK(warm.lambda == 0.5);
}

TEST_CASE("optimal weight matches a fine grid and beats both endpoints") {
  Rng rng(53);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> y(20), a(20), b(20);
    for (int i = 0; i < 20; ++i) {
      y[i] = rng.normal();
      a[i] = 0.5 * rng.normal();
      b[i] = rng.normal() + 0.3;
    }
    const double q = kQ[static_cast<std::size_t>(rep % 3)];
    const auto w = optimal_weight(a, b, y, q, 20);
    REQUIRE(w.lambda >= 0.0);
    REQUIRE(w.lambda <= 1.0);
    const double best = combined_loss(a, b, y, q, w.lambda);
    CHECK(best <= grid_min(a, b, y, q) + 1e-12);
    CHECK(std::abs(best - grid_min(a, b, y, q)) < 1e-3);
    CHECK(best <= combined_loss(a, b, y, q, 0.0));
    CHECK(best <= combined_loss(a, b, y, q, 1.0));

    // convexity in lambda
    const double l1 = rng.uniform(), l2 = rng.uniform();
    CHECK(combined_loss(a, b, y, q, 0.5 * (l1 + l2)) <=
          0.5 * (combined_loss(a, b, y, q, l1) + combined_loss(a, b, y, q, l2)) + 1e-12);
  }
}

TEST_CASE("recursive combination uses only observable history") {
  Rng rng(54);
  eval::Realizations r{{2000, 1}, {}};
  for (int t = 0; t < 140; ++t) r.values.push_back(rng.normal());
  std::vector<QuantileForecastSet> qs, bs;
  for (int t = 0; t < 120; ++t) {
    QuantileForecastSet q{"q", r.first.plus_months(t), kQ, Eigen::MatrixXd(3, 3)};
    QuantileForecastSet b{"b", r.first.plus_months(t), kQ, Eigen::MatrixXd(3, 3)};
    for (Eigen::Index i = 0; i < 9; ++i) {
      q.values.data()[i] = rng.normal();
      b.values.data()[i] = rng.normal();
    }
    qs.push_back(q);
    bs.push_back(b);
  }
  const auto fixed = combine_recursive(qs, bs, r, Strategy::Fixed, 0, 0.3);
  for (const auto& w : fixed.weights) CHECK(w.lambda == 0.3);

  const auto perf = combine_recursive(qs, bs, r, Strategy::Performance, 50);
  REQUIRE(perf.combined.size() == 120);
  for (const auto& w : perf.weights) {
    const int t = w.origin.index() - r.first.index();
    // history j + h <= t needs t - h + 1 >= 50 origins
    CHECK(w.warm_up == (t - w.horizon + 1 < 50));
    CHECK(w.lambda >= 0.0);
    CHECK(w.lambda <= 1.0);
    if (t == 100 && w.horizon == 2 && w.quantile == 0.9) {
      std::vector<double> lq, lb;
      for (int j = 98 - 50 + 1; j <= 98; ++j) {
        const double y = r.values[static_cast<std::size_t>(j + 2)];
        lq.push_back(eval::pinball(y - qs[j].value(2, 0.9), 0.9));
        lb.push_back(eval::pinball(y - bs[j].value(2, 0.9), 0.9));
      }
      CHECK_THAT(w.lambda, WithinAbs(performance_weight(lq, lb, 50).lambda, 1e-14));
    }
  }

  // changing realizations after t must not move the weight at t
  eval::Realizations future = r;
  for (std::size_t i = 101; i < future.values.size(); ++i) future.values[i] += 10.0;
  const auto opt_a = combine_recursive(qs, bs, r, Strategy::Optimal, 75);
  const auto opt_b = combine_recursive(qs, bs, future, Strategy::Optimal, 75);
  for (std::size_t i = 0; i < opt_a.weights.size(); ++i) {
    if (opt_a.weights[i].origin.index() - r.first.index() <= 100) {
      CHECK(opt_a.weights[i].lambda == opt_b.weights[i].lambda);
    }
  }

  const auto curve = lambda_curve(qs, bs, r);
  std::size_t optimal_points = 0;
  for (const auto& p : curve) {
    if (p.optimal) ++optimal_points;
    if (p.lambda == 0.0) CHECK_THAT(p.ratio, WithinAbs(1.0, 1e-12));
  }
  CHECK(optimal_points == 9);

  const auto dir = testing::scratch_dir("combine_io");
  write_weights_csv(perf, dir / "w.csv");
  write_lambda_curve_csv(curve, dir / "c.csv");
  CHECK(std::filesystem::file_size(dir / "w.csv") > 0);
  CHECK(strategy_from_string("optimal") == Strategy::Optimal);
  CHECK_THROWS_AS(strategy_from_string("nope"), InvalidArgument);
}
