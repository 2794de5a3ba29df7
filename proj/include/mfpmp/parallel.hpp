#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace mfpmp {

// Process-wide worker count for data-parallel row loops. Default 1.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [0, n). Each index writes only its own output
// row and any reduction over j inside fn is sequential, so the result
// is identical for every thread count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace mfpmp
