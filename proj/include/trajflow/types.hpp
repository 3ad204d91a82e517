#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace trajflow {

// Raised when input data or a configuration violates a documented contract.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a file cannot be parsed; carries the offending line when known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when linear algebra fails beyond recovery (e.g. Cholesky after jitter).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

using TrajId = std::int64_t;

struct TrajPoint {
    double x = 0.0;
    double y = 0.0;

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double squared_distance(const TrajPoint& a, const TrajPoint& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

inline double distance(const TrajPoint& a, const TrajPoint& b) {
    return std::sqrt(squared_distance(a, b));
}

struct VelocitySample {
    TrajPoint position;
    double vx = 0.0;
    double vy = 0.0;
};

// Half-open index interval [begin, end) into a parent trajectory.
struct IndexInterval {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const IndexInterval&) const = default;
};

struct Bounds {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

    double diagonal() const {
        const double w = max_x - min_x;
        const double h = max_y - min_y;
        return std::sqrt(w * w + h * h);
    }
    bool contains(const TrajPoint& p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
};

}  // namespace trajflow
