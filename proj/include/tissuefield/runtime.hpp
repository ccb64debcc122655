#pragma once

namespace tissuefield {

/// True when the DETERMINISTIC environment variable is set to a non-zero value.
bool deterministic_mode();

/// Forces single-threaded OpenMP and Eigen when in deterministic mode.
/// Returns the number of threads kernels will use.
int apply_thread_policy();

}  // namespace tissuefield
