#include "qbvar/draws_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "qbvar/error.hpp"

namespace qbvar::model {

namespace {

constexpr std::array<char, 8> kMagic{'Q', 'B', 'V', 'D', 'R', 'A', 'W', 'S'};

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw IoError("truncated draw file");
  return value;
}

void put_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put(out, m(i, j));
  }
}

Eigen::MatrixXd get_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = get<double>(in);
  }
  return m;
}

}  // namespace

void write_draws(const PosteriorDrawSet& set, const YearMonth& origin, const std::filesystem::path& path) {
  if (set.draws.empty()) throw InvalidArgument("write_draws: empty draw set");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto& first = set.draws.front();
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kDrawFileVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(set.likelihood));
  put<double>(out, set.quantile);
  put<std::int32_t>(out, origin.index());
  put<std::int32_t>(out, set.lags);
  put<std::int32_t>(out, set.factors);
  put<std::int32_t>(out, static_cast<std::int32_t>(first.phi.rows()));
  put<std::int32_t>(out, static_cast<std::int32_t>(first.phi.cols()));
  put<std::uint64_t>(out, set.seed);
  put<std::uint64_t>(out, set.draws.size());
  for (const auto& d : set.draws) {
    put_matrix(out, d.phi);
    put_matrix(out, d.lambda);
    for (Eigen::Index i = 0; i < d.sigma.size(); ++i) put(out, d.sigma(i));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

StoredDraws read_draws(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError(path.string() + " is not a posterior draw file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kDrawFileVersion) {
    throw IoError(path.string() + ": unsupported draw file version " + std::to_string(version));
  }
  StoredDraws out;
  auto& set = out.draws;
  const auto kind = get<std::uint8_t>(in);
  if (kind > 1) throw IoError(path.string() + ": unknown likelihood tag");
  set.likelihood = static_cast<Likelihood>(kind);
  set.quantile = get<double>(in);
  out.origin = YearMonth::from_index(get<std::int32_t>(in));
  set.lags = get<std::int32_t>(in);
  set.factors = get<std::int32_t>(in);
  const Eigen::Index n = get<std::int32_t>(in);
  const Eigen::Index k = get<std::int32_t>(in);
  set.seed = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (n < 1 || k != n * set.lags + 1 || set.factors < 0) throw IoError(path.string() + ": inconsistent dimensions");
  set.draws.reserve(count);
  for (std::uint64_t s = 0; s < count; ++s) {
    Draw d;
    d.phi = get_matrix(in, n, k);
    d.lambda = get_matrix(in, n, set.factors);
    d.sigma = get_matrix(in, n, 1).col(0);
    set.draws.push_back(std::move(d));
  }
  return out;
}

}  // namespace qbvar::model
