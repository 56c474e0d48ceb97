#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace plantnbv {

// ---------------------------------------------------------------------------
// Errors

struct FileNotFoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateGeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidSpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyMeshError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyCloudError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFinitePointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutOfRangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownPatternError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyCandidatesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientNodesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Small vector / quaternion math (double precision, value semantics)

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Vec3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
    constexpr bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double squared_norm() const { return dot(*this); }
    Vec3 normalized() const {
        const double n = norm();
        return {x / n, y / n, z / n};
    }
    bool is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }
inline double squared_distance(const Vec3& a, const Vec3& b) { return (a - b).squared_norm(); }

// Unit quaternion, scalar-last storage matches the (x, y, z, w) layout used
// in pose tables and trace files.
struct Quat {
    double x = 0.0, y = 0.0, z = 0.0, w = 1.0;

    constexpr Quat() = default;
    constexpr Quat(double x_, double y_, double z_, double w_) : x(x_), y(y_), z(z_), w(w_) {}

    static Quat from_axis_angle(const Vec3& axis, double angle) {
        const Vec3 u = axis.normalized();
        const double s = std::sin(angle / 2.0);
        return {u.x * s, u.y * s, u.z * s, std::cos(angle / 2.0)};
    }

    double norm() const { return std::sqrt(x * x + y * y + z * z + w * w); }
    Quat normalized() const {
        const double n = norm();
        return {x / n, y / n, z / n, w / n};
    }
    constexpr Quat conjugate() const { return {-x, -y, -z, w}; }

    Quat operator*(const Quat& o) const {
        return {w * o.x + x * o.w + y * o.z - z * o.y, w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w, w * o.w - x * o.x - y * o.y - z * o.z};
    }

    // Rotate a vector by this quaternion.
    Vec3 rotate(const Vec3& v) const {
        const Vec3 q{x, y, z};
        const Vec3 t = 2.0 * q.cross(v);
        return v + w * t + q.cross(t);
    }

    // Column i of the equivalent rotation matrix (camera axes in world frame).
    Vec3 axis_x() const { return rotate({1, 0, 0}); }
    Vec3 axis_y() const { return rotate({0, 1, 0}); }
    Vec3 axis_z() const { return rotate({0, 0, 1}); }

    // Build from an orthonormal frame given as matrix columns.
    static Quat from_columns(const Vec3& cx, const Vec3& cy, const Vec3& cz) {
        const double trace = cx.x + cy.y + cz.z;
        Quat q;
        if (trace > 0.0) {
            double s = std::sqrt(trace + 1.0) * 2.0;
            q.w = 0.25 * s;
            q.x = (cy.z - cz.y) / s;
            q.y = (cz.x - cx.z) / s;
            q.z = (cx.y - cy.x) / s;
        } else if (cx.x > cy.y && cx.x > cz.z) {
            double s = std::sqrt(1.0 + cx.x - cy.y - cz.z) * 2.0;
            q.w = (cy.z - cz.y) / s;
            q.x = 0.25 * s;
            q.y = (cy.x + cx.y) / s;
            q.z = (cz.x + cx.z) / s;
        } else if (cy.y > cz.z) {
            double s = std::sqrt(1.0 + cy.y - cx.x - cz.z) * 2.0;
            q.w = (cz.x - cx.z) / s;
            q.x = (cy.x + cx.y) / s;
            q.y = 0.25 * s;
            q.z = (cz.y + cy.z) / s;
        } else {
            double s = std::sqrt(1.0 + cz.z - cx.x - cy.y) * 2.0;
            q.w = (cx.y - cy.x) / s;
            q.x = (cz.x + cx.z) / s;
            q.y = (cz.y + cy.z) / s;
            q.z = 0.25 * s;
        }
        return q.normalized();
    }
};

// Axis-aligned box given by center and full extents. Containment is closed.
struct Box {
    Vec3 center;
    Vec3 size;

    bool contains(const Vec3& p) const {
        return std::abs(p.x - center.x) <= size.x * 0.5 &&
               std::abs(p.y - center.y) <= size.y * 0.5 &&
               std::abs(p.z - center.z) <= size.z * 0.5;
    }
    Vec3 min_corner() const { return center - size * 0.5; }
    Vec3 max_corner() const { return center + size * 0.5; }
};

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

// Point clouds are plain ordered lists of world-frame points in meters.
using PointCloud = std::vector<Vec3>;

}  // namespace plantnbv
