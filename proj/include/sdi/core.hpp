#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdi {

using Vec = std::vector<double>;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Trajectory / cell outcome. collision and escape are terminal for a
/// trajectory; forbidden marks states that cannot be constructed at all
/// (e.g. negative radicand in an energy embedding); failed marks
/// integrator breakdown (max_steps exceeded, non-finite state).
enum class Status { ok, collision, escape, forbidden, failed };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::ok: return "ok";
        case Status::collision: return "collision";
        case Status::escape: return "escape";
        case Status::forbidden: return "forbidden";
        case Status::failed: return "failed";
    }
    return "?";
}

inline Status status_from_string(const std::string& s) {
    if (s == "ok") return Status::ok;
    if (s == "collision") return Status::collision;
    if (s == "escape") return Status::escape;
    if (s == "forbidden") return Status::forbidden;
    if (s == "failed") return Status::failed;
    throw std::invalid_argument("unknown status: " + s);
}

/// Merge two statuses for a cell: collision dominates (it saturates the
/// pseudo-diffusion exponent), then escape, forbidden, failed.
inline Status worst(Status a, Status b) {
    auto rank = [](Status s) {
        switch (s) {
            case Status::collision: return 4;
            case Status::escape: return 3;
            case Status::forbidden: return 2;
            case Status::failed: return 1;
            case Status::ok: return 0;
        }
        return 0;
    };
    return rank(a) >= rank(b) ? a : b;
}

/// Dense row-major matrix, sized for this library's small problems
/// (state dimension <= 4, PCE term count <= a few dozen).
class Mat {
  public:
    Mat() = default;
    Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return a_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return a_[static_cast<size_t>(r) * cols_ + c]; }

    std::span<double> row(int r) { return {a_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)}; }
    std::span<const double> row(int r) const {
        return {a_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
    }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    bool all_finite() const {
        for (double v : a_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Mat&, const Mat&) = default;

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

/// A^T A, exactly symmetric by construction.
inline Mat gram(const Mat& a) {
    Mat g(a.cols(), a.cols());
    for (int i = 0; i < a.cols(); ++i)
        for (int j = i; j < a.cols(); ++j) {
            double s = 0.0;
            for (int r = 0; r < a.rows(); ++r) s += a(r, i) * a(r, j);
            g(i, j) = s;
            g(j, i) = s;
        }
    return g;
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace sdi
