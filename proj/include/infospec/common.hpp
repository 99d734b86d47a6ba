#ifndef INFOSPEC_COMMON_HPP
#define INFOSPEC_COMMON_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace infospec {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.69314718055994530942;

// Hard ceiling for exhaustive enumeration: (|X|*|Y|)^n sequence pairs, full
// tilted tables, spectrum atom counts. Larger requests raise CapacityError
// pointing at the Monte Carlo route.
inline constexpr std::uint64_t kEnumBudget = std::uint64_t{1} << 24;

// Bad arguments, malformed model files, incompatible alphabets. CLI exit 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested rate/threshold lies outside the mathematically valid interval.
class DomainError : public InputError {
 public:
  using InputError::InputError;
};

// Exact computation infeasible within kEnumBudget. CLI exit 2.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Half-width of a two-sided 99% Hoeffding confidence interval.
inline double hoeffding99_halfwidth(std::size_t trials) {
  return std::sqrt(std::log(2.0 / 0.01) /
                   (2.0 * static_cast<double>(trials)));
}

}  // namespace infospec

#endif  // INFOSPEC_COMMON_HPP
