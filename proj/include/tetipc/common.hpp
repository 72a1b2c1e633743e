#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tetipc {

using index_t = std::int32_t;

template <class T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <class T> using Vec4 = Eigen::Matrix<T, 4, 1>;
template <class T> using Vec9 = Eigen::Matrix<T, 9, 1>;
template <class T> using Vec12 = Eigen::Matrix<T, 12, 1>;
template <class T> using Mat3 = Eigen::Matrix<T, 3, 3>;
template <class T> using Mat9 = Eigen::Matrix<T, 9, 9>;
template <class T> using Mat12 = Eigen::Matrix<T, 12, 12>;
template <class T> using Mat9x12 = Eigen::Matrix<T, 9, 12>;

using Vec2i = Eigen::Matrix<index_t, 2, 1>;
using Vec3i = Eigen::Matrix<index_t, 3, 1>;
using Vec4i = Eigen::Matrix<index_t, 4, 1>;

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Elastic energy left its domain (e.g. log-barrier material hit det F <= 0).
struct MaterialFailure : std::runtime_error {
  index_t tet;
  double value;
  MaterialFailure(index_t tet_, double value_, const std::string& what_)
      : std::runtime_error(what_), tet(tet_), value(value_) {}
};

// A primitive pair reached distance <= 0; the trajectory is no longer valid.
struct PenetrationFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int& detail_thread_count() {
  static int n = 0;  // 0 = library default
  return n;
}

inline void set_thread_count(int n) {
  detail_thread_count() = n;
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

// Fixed chunking, independent of the worker count, so reductions can be
// combined in chunk order and results do not depend on scheduling.
inline constexpr index_t kChunkSize = 1024;

template <class F>
void parallel_for(index_t n, F&& body) {
  if (n <= 0) return;
  std::exception_ptr err;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (index_t i = 0; i < n; ++i) {
    if (err) continue;
    try {
      body(i);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        if (!err) err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
}

// Deterministic sum: per-chunk partials accumulated sequentially, then
// combined in chunk order. Accum must be default-constructible and support
// operator+=.
template <class Accum, class F>
Accum parallel_sum(index_t n, F&& term) {
  if (n <= 0) return Accum{};
  const index_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<Accum> partial(static_cast<size_t>(chunks));
  std::exception_ptr err;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (index_t c = 0; c < chunks; ++c) {
    if (err) continue;
    try {
      Accum acc{};
      const index_t lo = c * kChunkSize;
      const index_t hi = std::min(n, lo + kChunkSize);
      for (index_t i = lo; i < hi; ++i) acc += term(i);
      partial[static_cast<size_t>(c)] = acc;
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        if (!err) err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
  Accum total{};
  for (const Accum& a : partial) total += a;
  return total;
}

// Deterministic gather: emit(i, out) may append any number of items; chunk
// buffers are concatenated in chunk order.
template <class Out, class F>
void parallel_collect(index_t n, F&& emit, std::vector<Out>& result) {
  result.clear();
  if (n <= 0) return;
  const index_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<std::vector<Out>> partial(static_cast<size_t>(chunks));
  std::exception_ptr err;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (index_t c = 0; c < chunks; ++c) {
    if (err) continue;
    try {
      auto& buf = partial[static_cast<size_t>(c)];
      const index_t lo = c * kChunkSize;
      const index_t hi = std::min(n, lo + kChunkSize);
      for (index_t i = lo; i < hi; ++i) emit(i, buf);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        if (!err) err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
  size_t total = 0;
  for (const auto& b : partial) total += b.size();
  result.reserve(total);
  for (auto& b : partial) result.insert(result.end(), b.begin(), b.end());
}

}  // namespace tetipc
