#include "latentpatch/core/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace lp::parallel {

int thread_cap() {
  if (const char* env = std::getenv("LATENTPATCH_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return omp_get_max_threads();
}

void configure_from_env() {
  omp_set_max_active_levels(1);
  omp_set_num_threads(thread_cap());
}

void set_threads(int n) { omp_set_num_threads(n > 0 ? n : 1); }

int threads() { return omp_get_max_threads(); }

}  // namespace lp::parallel
