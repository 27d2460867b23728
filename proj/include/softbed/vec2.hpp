#pragma once

#include <cmath>

namespace softbed {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }

    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    // out-of-plane component of the 2D cross product
    constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }

    double norm() const { return std::sqrt(x * x + y * y); }
    constexpr double norm2() const { return x * x + y * y; }

    Vec2 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec2{x / n, y / n} : Vec2{};
    }

    // rotate by +90 degrees (tangent of a unit normal)
    constexpr Vec2 perp() const { return {-y, x}; }

    constexpr bool operator==(const Vec2&) const = default;
};

inline constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

} // namespace softbed
