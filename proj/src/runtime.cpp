#include "tissuefield/runtime.hpp"

#include <Eigen/Core>
#include <omp.h>

#include <cstdlib>
#include <string>

namespace tissuefield {

bool deterministic_mode() {
  const char* value = std::getenv("DETERMINISTIC");
  if (!value) return false;
  const std::string v(value);
  return !v.empty() && v != "0" && v != "false";
}

int apply_thread_policy() {
  if (deterministic_mode()) {
    omp_set_num_threads(1);
    Eigen::setNbThreads(1);
    return 1;
  }
  return omp_get_max_threads();
}

}  // namespace tissuefield
