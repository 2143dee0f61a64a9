#ifndef MULTIPHASE_PARALLEL_HPP
#define MULTIPHASE_PARALLEL_HPP

#include "multiphase/types.hpp"

#include <functional>

namespace multiphase {

/// Worker cap shared by assembly, probes and multi-start runs. 0 means hardware concurrency.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n). Callers write into slot i only, so results do not
/// depend on the number of workers.
void parallel_for(Index n, const std::function<void(Index)>& body);

} // namespace multiphase

#endif
