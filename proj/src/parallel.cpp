#include "dynkin/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dynkin {

namespace {

std::atomic<int> g_override{0};

int default_threads() {
  if (const char* env = std::getenv("DYNKIN_G_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

int thread_count() {
  int n = g_override.load();
  if (n > 0) return n;
  static const int cached = default_threads();
  return cached;
}

void set_thread_count(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace dynkin
