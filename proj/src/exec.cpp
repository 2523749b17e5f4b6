#include "smbr/exec.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace smbr {

void set_workers(int workers) {
#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
#else
  (void)workers;
#endif
}

}  // namespace smbr
