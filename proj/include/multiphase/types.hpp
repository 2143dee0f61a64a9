#ifndef MULTIPHASE_TYPES_HPP
#define MULTIPHASE_TYPES_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace multiphase {

using Index = std::int64_t;
using Point = Eigen::Vector2d;
using PointSet = std::vector<Point>;

inline constexpr const char* kVersion = "0.1.0";

/// Numerical or geometric failure reported by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw ContractError(message);
}

/// Neumaier-compensated accumulator; sums agree to ~1 ulp regardless of order.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x)
    {
        add(x);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace multiphase

#endif
