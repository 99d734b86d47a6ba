#ifndef INFOSPEC_EXPONENTS_HPP
#define INFOSPEC_EXPONENTS_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infospec/models.hpp"
#include "infospec/spectrum.hpp"

namespace infospec {

// Tilt parameter in [0, 1]. Tiny numerical excursions (from optimizer
// arithmetic) are clamped back with a warning; anything further is rejected.
struct Rho {
  double value = 0.0;
  Rho() = default;
  explicit Rho(double v);
};

// Nonnegative finite rate or threshold in nats/symbol.
struct Rate {
  double value = 0.0;
  Rate() = default;
  explicit Rate(double v);
};

struct ExponentCurve {
  std::string model_id;
  int n = 0;
  std::vector<std::pair<double, double>> points;  // (parameter, nats/symbol)
};

// One bound verification: threshold t, the exact tail probability, the tilt
// sequence value, and both sides of the inequality. Theorem-1 style reports
// use slack = lhs - rhs, source reports slack = rhs - lhs; either way the
// bound holds iff slack >= -1e-12.
struct BoundReport {
  int n = 0;
  double threshold = 0.0;
  double epsilon_n = 0.0;
  double rho_n = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = false;
};

inline constexpr double kBoundSlackTol = 1e-12;

// E0(rho, X) = -(1/n) ln sum_y (sum_x P(x) W(y|x)^(1/(1+rho)))^(1+rho).
// Memoryless input+channel use the per-position product form; mixtures and
// Markov models enumerate within the budget.
double gallager_e0(const SourceModel&, const ChannelModel&, int n, Rho rho,
                   int workers = 1);
// Exhaustive-enumeration route, available for any family within budget; the
// memoryless fast path is checked against it.
double gallager_e0_enumerated(const SourceModel&, const ChannelModel&, int n,
                              Rho rho, int workers = 1);

// rho_n = min{ -ln(eps)/2 / (n t), 1 }; eps = 0 gives 1, eps = 1 gives 0.
Rho rho_n_channel(Rate t, double epsilon_n, int n);

// Verifies E0(rho_n) >= rho_n t - 3 ln2 / n with eps taken from the exact
// information spectrum at threshold t (strict lower tail).
BoundReport verify_theorem1(const SourceModel&, const ChannelModel&, int n,
                            Rate t, int workers = 1);

struct ExponentPoint {
  double exponent = 0.0;
  Rho argmax;
};

// E(R) = max_{0<=rho<=1} { E0(rho) - rho R } for a fixed input model.
ExponentPoint channel_exponent(const SourceModel&, const ChannelModel&, int n,
                               Rate R, int rho_grid_size = 33,
                               int workers = 1);

// Coordinate ascent over i.i.d. input distributions for memoryless channels;
// returns the best exponent and (optionally) the optimizing input.
ExponentPoint channel_exponent_optimized(const ChannelModel&, int n, Rate R,
                                         int rho_grid_size = 33,
                                         int workers = 1,
                                         SourceModel* best_input = nullptr);

// J0(rho) = (1/n) ln sum_y (sum_x P(x,y)^(1/(1+rho)))^(1+rho).
double source_j0(const JointSourceModel&, int n, Rho rho, int workers = 1);
double source_j0_enumerated(const JointSourceModel&, int n, Rho rho,
                            int workers = 1);

// rho_n = min{ -ln(eps)/2 / (n (ln|X| - t)), 1 }; t >= ln|X| forces 1.
Rho rho_n_source(Rate t, double epsilon_n, int n, double ln_alphabet);

// Verifies J0(rho_n) <= rho_n t + 3 ln2 / n with eps from the exact entropy
// spectrum at threshold t (strict upper tail).
BoundReport verify_theorem2(const JointSourceModel&, int n, Rate t,
                            int workers = 1);

// J(R) = max_{0<=rho<=1} { rho R - J0(rho) }.
ExponentPoint source_exponent(const JointSourceModel&, int n, Rate R,
                              int rho_grid_size = 33, int workers = 1);

// The rho-tilted pair distribution
//   T(x,y) = P(x,y)^(1/(1+rho)) (sum_x' P(x',y)^(1/(1+rho)))^rho / Z,
// normalized by Z = exp(n J0(rho)). Memoryless joints factor per position;
// other families carry the full table (y-major, budget-checked).
struct TiltedJoint {
  int n = 0;
  double rho = 0.0;
  Alphabet x, y;
  bool factored = false;
  std::vector<std::vector<double>> position_log_mass;  // factored, row-major
  std::vector<double> full_log_mass;  // [y_rank * |X|^n + x_rank]
  double log_normalizer = 0.0;        // equals n * J0(rho)

  double log_mass(std::span<const int> xn, std::span<const int> yn) const;
  double total_mass() const;
  // (1/n) H(X|Y) under the tilted distribution, which equals dJ0/drho.
  double conditional_entropy_rate() const;
};

TiltedJoint tilted_joint(const JointSourceModel&, int n, Rho rho);

// dJ0/drho evaluated through the tilted distribution.
double j0_derivative(const JointSourceModel&, int n, Rho rho);

// Solves (1/n) H(tilted at rho0) = R by bisection; R must lie strictly
// between the derivative at rho = 0 and rho = 1, else DomainError naming the
// interval. Then rho0 R - J0(rho0) reproduces source_exponent(R).
Rho solve_rho0(const JointSourceModel&, int n, Rate R);

}  // namespace infospec

#endif  // INFOSPEC_EXPONENTS_HPP
