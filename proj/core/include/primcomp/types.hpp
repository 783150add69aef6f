#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace primcomp {

#ifdef PRIMCOMP_REAL_FLOAT
using real = float;
#else
using real = double;
#endif

using Shape = std::vector<int64_t>;

inline int64_t numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape);

[[noreturn]] void fail_invalid(const std::string& what);
[[noreturn]] void fail_runtime(const std::string& what);

void check(bool cond, const std::string& what);

}  // namespace primcomp
