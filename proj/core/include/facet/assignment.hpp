#pragma once

#include <cstddef>
#include <vector>

namespace facet {

struct AssignmentResult {
    std::vector<std::size_t> column_of_row; // chosen column per row
    long long total = 0;                    // sum of selected weights
};

// Maximum-weight perfect matching on a square integer matrix, solved exactly
// by the Hungarian method with potentials in O(n^3). Integer weights keep the
// arithmetic exact.
AssignmentResult max_weight_assignment(const std::vector<std::vector<long long>>& weights);

} // namespace facet
