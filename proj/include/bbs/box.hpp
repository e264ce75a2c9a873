#pragma once

#include <cstdint>

namespace bbs {

/// Integer pixel rectangle, (x, y) is the top-left corner.
struct Box {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t w = 1;
    std::int64_t h = 1;

    std::int64_t area() const noexcept { return w * h; }
    friend bool operator==(const Box&, const Box&) = default;
};

}  // namespace bbs
