#include "tobs/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tobs {

namespace {
std::atomic<int> g_override{0};

int env_threads() {
  const char* v = std::getenv("TOBS_THREADS");
  if (!v) return 0;
  const int n = std::atoi(v);
  return n > 0 ? n : 0;
}
}  // namespace

int worker_count() {
#ifdef _OPENMP
  if (const int o = g_override.load(); o > 0) return o;
  if (const int e = env_threads(); e > 0) return e;
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_worker_count(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace tobs
