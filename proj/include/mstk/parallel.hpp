//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_PARALLEL_HPP_
#define MSTK_PARALLEL_HPP_

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mstk {

/// Worker count: MSTK_THREADS if set to a positive integer, else the
/// hardware concurrency.
int thread_count();

/// SplitMix64 of (seed, k); independent per-item seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k);

/// Calls f(i) for i in [0, n) on up to thread_count() threads. Items are
/// claimed dynamically, so f must write only to slot i of its output for the
/// result to be independent of scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &f);

/// Ordered map: out[i] = f(i).
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F &&f) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

} // namespace mstk

#endif // MSTK_PARALLEL_HPP_
