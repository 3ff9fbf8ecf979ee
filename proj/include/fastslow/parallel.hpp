#pragma once

// Serial/OpenMP dispatch for the embarrassingly parallel loops of the
// library. Every parallel kernel writes into per-index slots and reduces in
// index order afterwards, so the Serial and Parallel paths are bit-identical.

#include <cstddef>
#include <exception>
#include <mutex>

namespace fastslow {

enum class Exec { Serial, Parallel };

template <class Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn) {
  if (exec == Exec::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fastslow
