#include "fhl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fhl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::atomic<std::size_t> g_jobs{0};

std::size_t jobs_from_env() {
  if (const char* env = std::getenv("FHL_JOBS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return 1;
}

}  // namespace

std::mt19937_64 make_engine(const RngSeed& seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.master), static_cast<std::uint32_t>(seed.master >> 32),
                    static_cast<std::uint32_t>(seed.stream), static_cast<std::uint32_t>(seed.stream >> 32)};
  return std::mt19937_64(seq);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) {
  return splitmix64(splitmix64(master) ^ label);
}

std::uint64_t seed_label(const char* tag) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char* p = tag; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ULL;
  }
  return h;
}

std::size_t default_jobs() {
  std::size_t j = g_jobs.load();
  return j ? j : jobs_from_env();
}

void set_default_jobs(std::size_t jobs) { g_jobs.store(jobs); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, std::size_t jobs) {
  if (jobs == 0) jobs = default_jobs();
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min(jobs, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fhl
