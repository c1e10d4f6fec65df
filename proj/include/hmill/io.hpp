#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

namespace hmill {

using Json = nlohmann::json;

/// Whole file as bytes; throws IoError.
std::string read_file(const std::string& path);

/// One JSON document per non-blank line. Throws IoError when unreadable and
/// FormatError naming the line on a parse failure.
std::vector<Json> read_jsonl(const std::string& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// Pretty JSON with a trailing newline; stable for equal inputs.
std::string dump_json(const Json& j);

std::string hex64(std::uint64_t v);
/// FNV-1a over the file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

/// Worker cap from HMILL_THREADS (default: hardware concurrency, at least 1).
std::size_t thread_count();

namespace detail {
inline thread_local bool in_worker = false;
}

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Callers must
/// write results to disjoint slots so the outcome does not depend on
/// scheduling. The first exception thrown by any task is rethrown. Nested
/// calls run sequentially on the calling worker.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = detail::in_worker ? 1 : std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      detail::in_worker = true;
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace hmill
