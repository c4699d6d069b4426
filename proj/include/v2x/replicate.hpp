#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace v2x {

class ReplicationError : public std::runtime_error {
 public:
  ReplicationError(std::size_t run_index, const std::string& what)
      : std::runtime_error("run " + std::to_string(run_index) + " failed: " + what),
        run_index_(run_index) {}
  std::size_t run_index() const { return run_index_; }

 private:
  std::size_t run_index_;
};

/// Runs `run(config, seed)` for seeds base_seed + i, i in [0, n_runs). Runs may
/// execute on up to `jobs` threads; results are returned ordered by run index.
/// The lowest-indexed failure is rethrown as ReplicationError.
template <class Config, class RunFn>
auto replicate(const Config& config, std::size_t n_runs, std::uint64_t base_seed, RunFn&& run,
               unsigned jobs = 1) {
  using Result = decltype(run(config, base_seed));
  if (n_runs == 0) throw std::invalid_argument("replicate: n_runs must be >= 1");

  std::vector<std::optional<Result>> slots(n_runs);
  std::vector<std::string> errors(n_runs);
  std::vector<char> failed(n_runs, 0);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n_runs; i = next++) {
      try {
        slots[i].emplace(run(config, base_seed + i));
      } catch (const std::exception& e) {
        failed[i] = 1;
        errors[i] = e.what();
      } catch (...) {
        failed[i] = 1;
        errors[i] = "unknown exception";
      }
    }
  };

  const unsigned n_threads = jobs <= 1 ? 1u : static_cast<unsigned>(std::min<std::size_t>(jobs, n_runs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  std::vector<Result> out;
  out.reserve(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) {
    if (failed[i]) throw ReplicationError(i, errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace v2x
