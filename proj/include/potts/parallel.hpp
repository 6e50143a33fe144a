#pragma once

#include <cstddef>
#include <functional>

namespace potts {

// Worker count used by parallel_for; 1 runs everything inline.
void set_thread_count(int n);
int thread_count();

// Calls body(i) for i in [0, count). Each index must write only its own
// output slot so that results do not depend on scheduling. If bodies throw,
// the exception of the lowest failing index is rethrown. Nested calls run
// inline on the calling worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace potts
