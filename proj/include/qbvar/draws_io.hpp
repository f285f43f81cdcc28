#pragma once

#include <filesystem>

#include "qbvar/date.hpp"
#include "qbvar/model.hpp"

namespace qbvar::model {

/// Binary layout (native little-endian):
///   "QBVDRAWS" | u32 version | u8 likelihood | f64 quantile | i32 origin
///   | i32 lags | i32 factors | i32 n | i32 k | u64 seed | u64 draws
///   then per draw: phi (n x k), lambda (n x r), sigma (n), row-major f64.
inline constexpr std::uint32_t kDrawFileVersion = 1;

struct StoredDraws {
  YearMonth origin;
  PosteriorDrawSet draws;
};

void write_draws(const PosteriorDrawSet& draws, const YearMonth& origin, const std::filesystem::path& path);
StoredDraws read_draws(const std::filesystem::path& path);

}  // namespace qbvar::model
