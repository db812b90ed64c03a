#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

#include "gldgcn/dense.hpp"

namespace gldgcn::detail {

// Runs body(begin, end) over contiguous row ranges. Each row belongs to one
// range, so per-row results are identical for any thread count.
template <typename Body>
void parallel_rows(std::size_t rows, std::size_t work_per_row, Body&& body) {
  const int threads = kernel_threads();
  constexpr std::size_t kMinWork = 1 << 16;
  if (threads <= 1 || rows < 2 || rows * std::max<std::size_t>(work_per_row, 1) < kMinWork) {
    body(std::size_t{0}, rows);
    return;
  }
  const std::size_t parts = std::min<std::size_t>(static_cast<std::size_t>(threads), rows);
  const std::size_t chunk = (rows + parts - 1) / parts;
  std::vector<std::jthread> pool;
  pool.reserve(parts - 1);
  for (std::size_t p = 1; p < parts; ++p) {
    const std::size_t b = p * chunk;
    const std::size_t e = std::min(rows, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::size_t{0}, std::min(rows, chunk));
}

}  // namespace gldgcn::detail
