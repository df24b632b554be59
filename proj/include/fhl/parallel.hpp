#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace fhl {

/// Identifies one independent random stream: path i of an ensemble uses stream i.
struct RngSeed {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  RngSeed with_stream(std::uint64_t s) const { return {master, s}; }
};

/// 64-bit engine deterministically initialized from (master, stream).
std::mt19937_64 make_engine(const RngSeed& seed);

/// Derives an unrelated master seed for a labelled sub-ensemble, so that e.g.
/// the two sides of an inequality never share noise.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label);

/// Label helper: FNV-1a hash of a short tag.
std::uint64_t seed_label(const char* tag);

/// Worker count used by ensemble loops. Defaults to FHL_JOBS if set, else 1.
std::size_t default_jobs();
void set_default_jobs(std::size_t jobs);

/// Calls body(i) for i in [0, count) on up to `jobs` threads. Each index must
/// write only to its own result slot; callers reduce slots in index order, so
/// the outcome never depends on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t jobs = 0);

}  // namespace fhl
