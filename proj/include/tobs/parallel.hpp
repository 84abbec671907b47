#pragma once

// Thread-count control for the OpenMP kernels. Every parallel kernel in this
// library partitions work into fixed units and reduces them in index order,
// so results do not depend on the thread count.

namespace tobs {

/// Worker count used by parallel kernels: TOBS_THREADS if set and positive,
/// otherwise the OpenMP default. Always 1 when built without OpenMP.
int worker_count();

/// Overrides the worker count for subsequent kernels (0 restores the default).
void set_worker_count(int n);

}  // namespace tobs
