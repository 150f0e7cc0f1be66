#include "hypermix/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace hypermix {

void set_num_threads(int n) { omp_set_num_threads(n > 0 ? n : 1); }

int num_threads() { return omp_get_max_threads(); }

int threads_from_env() {
  const char* v = std::getenv("HYPERMIX_THREADS");
  if (v == nullptr) return 0;
  try {
    const int n = std::stoi(v);
    return n > 0 ? n : 0;
  } catch (...) {
    return 0;
  }
}

}  // namespace hypermix
