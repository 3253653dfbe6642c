#pragma once

#include <cstddef>
#include <functional>

namespace qfc {

// Runs fn(i) for i in [0, n) across worker threads. Each index owns its output
// slot, so results are deterministic regardless of scheduling. Thread count
// honors the QFC_THREADS environment variable when set.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace qfc
