#include "facet/assignment.hpp"

#include <algorithm>
#include <limits>

#include "facet/errors.hpp"

namespace facet {

AssignmentResult max_weight_assignment(const std::vector<std::vector<long long>>& weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw ValidationError("assignment matrix is empty");
    long long peak = std::numeric_limits<long long>::min();
    for (const auto& row : weights) {
        if (row.size() != n) throw ValidationError("assignment matrix is not square");
        for (long long w : row) peak = std::max(peak, w);
    }

    // Minimize cost = peak - weight; potentials method, 1-indexed with a
    // virtual row/column 0.
    constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<bool> used(n + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), false);
        do {
            used[j0] = true;
            std::size_t i0 = p[j0], j1 = 0;
            long long delta = kInf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                long long cost = peak - weights[i0 - 1][j - 1];
                long long cur = cost - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    AssignmentResult result;
    result.column_of_row.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        result.column_of_row[p[j] - 1] = j - 1;
        result.total += weights[p[j] - 1][j - 1];
    }
    return result;
}

} // namespace facet
