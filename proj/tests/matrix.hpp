#pragma once

#include <cstdint>
#include <vector>

// Toy (schedule, b, h, I_start) configurations small enough for exhaustive enumeration.
struct ToyConfig {
    std::vector<std::uint64_t> q;
    std::vector<std::uint64_t> ell;
    std::uint64_t b;
    std::int64_t h;
    std::uint64_t I_start;  // 0: n0
};

inline const std::vector<ToyConfig>& toy_matrix() {
    static const std::vector<ToyConfig> m = {
        {{7, 11}, {1, 2}, 2, 1, 1},
        {{7, 11}, {1, 2}, 2, 1, 5},
        {{7, 11}, {1, 2}, 14, 1, 0},
        {{7, 11}, {1, 2}, 10, 7, 3},
        {{7, 13}, {1, 2}, 3, 7, 0},
        {{7, 13}, {1, 2}, 21, -1, 2},
        {{7, 11, 13}, {1, 1, 2}, 2, -11, 0},
        {{7, 11, 13}, {1, 1, 2}, 14, -11, 0},
        {{7, 11, 13}, {1, 2, 2}, 2, 1, 0},
        {{7, 11}, {2, 2}, 7, 1, 0},
        {{7, 13, 19}, {1, 2, 2}, 3, 2, 0},
        {{7, 13, 17}, {1, 2, 2}, 5, -3, 0},
        {{7, 11, 13}, {1, 2, 2}, 6, 5, 9},
        {{7, 11, 13}, {1, 2, 3}, 2, 1, 0},
        {{7, 11, 13, 17}, {1, 2, 2, 2}, 2, 1, 0},
        {{11, 13}, {2, 2}, 10, 1, 0},
    };
    return m;
}
