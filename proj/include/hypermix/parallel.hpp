#ifndef HYPERMIX_PARALLEL_HPP_
#define HYPERMIX_PARALLEL_HPP_

namespace hypermix {

// Upper bound on OpenMP threads used by the parallel kernels. Results never
// depend on this value; only wall time does.
void set_num_threads(int n);
int num_threads();

// Reads HYPERMIX_THREADS; returns 0 when unset or unparsable.
int threads_from_env();

}  // namespace hypermix

#endif  // HYPERMIX_PARALLEL_HPP_
