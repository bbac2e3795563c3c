#pragma once

#include <cstddef>
#include <functional>

namespace apseq {

/// Thread count used when a caller passes 0: APSEQ_THREADS if set, else 1.
unsigned default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default_threads()).
/// Each index is visited exactly once; the body must only write to slots it owns.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace apseq
