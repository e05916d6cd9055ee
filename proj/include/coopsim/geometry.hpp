#pragma once

#include <cmath>

namespace coopsim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Axis-aligned rectangle, used both as deployment area and integration region.
struct Rect {
    double x0, x1, y0, y1;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool contains(const Vec2& p) const {
        return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }
};

} // namespace coopsim
