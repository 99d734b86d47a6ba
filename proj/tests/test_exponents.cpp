#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "infospec/exponents.hpp"
#include "infospec/kernels.hpp"
#include "oracle.hpp"
#include "testmodels.hpp"

using namespace infospec;
namespace mdl = testmodels;

namespace {

std::vector<int> sv(std::initializer_list<int> v) { return v; }

const double kRhoGrid5[] = {0.0, 0.25, 0.5, 0.75, 1.0};

// dense grid-search reference for the 1-D exponent maximization
template <class F>
double grid_max(F&& f, int points = 10000) {
  double best = f(0.0);
  for (int i = 1; i < points; ++i) {
    double rho = static_cast<double>(i) / (points - 1);
    best = std::max(best, f(rho));
  }
  return best;
}

}  // namespace

TEST_CASE("gallager_e0 closed forms") {
  auto u = mdl::uniform_source();
  // rho = 0 collapses to 0 for any model
  CHECK(std::abs(gallager_e0(u, mdl::bsc(0.11), 5, Rho(0.0))) <= 1e-12);
  CHECK(std::abs(gallager_e0(u, mdl::identity_channel(), 3, Rho(0.0))) <=
        1e-12);

  // identity channel: E0(rho) = rho ln 2
  for (double rho : kRhoGrid5)
    CHECK(std::abs(gallager_e0(u, mdl::identity_channel(), 4, Rho(rho)) -
                   rho * kLn2) <= 1e-12);

  // BSC(0.11) at rho = 1: ln 2 - 2 ln(sqrt(0.11) + sqrt(0.89))
  double want = static_cast<double>(
      std::log(2.0L) - 2.0L * std::log(std::sqrt(0.11L) + std::sqrt(0.89L)));
  for (int n : {1, 2, 3})
    CHECK(std::abs(gallager_e0(u, mdl::bsc(0.11), n, Rho(1.0)) - want) <=
          1e-10);
}

TEST_CASE("gallager_e0 fast path equals enumeration and brute force") {
  struct Case {
    SourceModel s;
    ChannelModel c;
  };
  std::vector<Case> cases{
      {mdl::uniform_source(), mdl::identity_channel()},
      {mdl::uniform_source(), mdl::bsc(0.11)},
      {mdl::bernoulli_source(0.3), mdl::bsc(0.3)},
      {mdl::time_varying_source({{0.5, 0.5}, {0.7, 0.3}}),
       mdl::time_varying_channel({{0.89, 0.11, 0.11, 0.89},
                                 {0.8, 0.2, 0.2, 0.8}},
                                2, 2)}};
  for (const auto& [s, c] : cases)
    for (int n : {1, 2, 4, 6})
      for (double rho : kRhoGrid5) {
        double fast = gallager_e0(s, c, n, Rho(rho));
        double enumd = gallager_e0_enumerated(s, c, n, Rho(rho));
        CHECK(std::abs(fast - enumd) <= 1e-10);
        double brute =
            static_cast<double>(oracle::e0_brute(s, c, n, rho));
        CHECK(std::abs(fast - brute) <= 1e-10);
      }
}

TEST_CASE("kernel variants agree end to end on the enumeration path") {
  namespace k = infospec::kernels;
  if (!k::avx2_ops()) {
    MESSAGE("AVX2 unavailable; nothing to compare");
    return;
  }
  auto mixc = mdl::mixture_channel({0.5, 0.5}, {mdl::bsc(0.02), mdl::bsc(0.3)});
  auto mixj = mdl::mixture_joint({0.5, 0.5}, {mdl::dsbs(0.05), mdl::dsbs(0.3)});
  auto u = mdl::uniform_source();
  k::force("scalar");
  double e0_s = gallager_e0_enumerated(u, mixc, 6, Rho(0.45));
  double j0_s = source_j0_enumerated(mixj, 6, Rho(0.45));
  k::force("avx2");
  double e0_v = gallager_e0_enumerated(u, mixc, 6, Rho(0.45));
  double j0_v = source_j0_enumerated(mixj, 6, Rho(0.45));
  k::force("auto");
  CHECK(std::abs(e0_s - e0_v) <= 1e-11);
  CHECK(std::abs(j0_s - j0_v) <= 1e-11);
}

TEST_CASE("gallager_e0 enumeration handles mixtures and is worker-invariant") {
  auto mixc = mdl::mixture_channel({0.5, 0.5}, {mdl::bsc(0.02), mdl::bsc(0.3)});
  auto u = mdl::uniform_source();
  for (int n : {1, 2, 4})
    for (double rho : {0.3, 1.0}) {
      double got = gallager_e0(u, mixc, n, Rho(rho));
      double brute = static_cast<double>(oracle::e0_brute(u, mixc, n, rho));
      CHECK(std::abs(got - brute) <= 1e-10);
    }
  double w1 = gallager_e0(u, mixc, 9, Rho(0.6), 1);
  double w3 = gallager_e0(u, mixc, 9, Rho(0.6), 3);
  double w8 = gallager_e0(u, mixc, 9, Rho(0.6), 8);
  CHECK(w1 == w3);
  CHECK(w1 == w8);
}

TEST_CASE("source_j0 closed forms and routes") {
  // rho = 0 collapse
  CHECK(std::abs(source_j0(mdl::dsbs(0.11), 4, Rho(0.0))) <= 1e-12);
  // uniform X independent of Y: rho ln 2 at every n
  auto ind = mdl::independent_joint(0.5);
  for (double rho : kRhoGrid5)
    for (int n : {1, 3, 5})
      CHECK(std::abs(source_j0(ind, n, Rho(rho)) - rho * kLn2) <= 1e-12);
  // doubly symmetric at rho = 1: 2 ln(sqrt(0.11) + sqrt(0.89)) - ln 2 + ln 2
  double want = static_cast<double>(
      2.0L * std::log(std::sqrt(0.11L) + std::sqrt(0.89L)));
  for (int n : {1, 2, 3})
    CHECK(std::abs(source_j0(mdl::dsbs(0.11), n, Rho(1.0)) - want) <= 1e-10);

  std::vector<JointSourceModel> joints{
      mdl::dsbs(0.11), mdl::dsbs(0.25), mdl::correlated_uniform(),
      mdl::independent_joint(0.3), mdl::time_varying_joint()};
  for (const auto& j : joints)
    for (int n : {1, 2, 4, 6})
      for (double rho : kRhoGrid5) {
        double fast = source_j0(j, n, Rho(rho));
        CHECK(std::abs(fast - source_j0_enumerated(j, n, Rho(rho))) <= 1e-10);
        CHECK(std::abs(fast -
                       static_cast<double>(oracle::j0_brute(j, n, rho))) <=
              1e-10);
      }

  // mixtures and markov take the enumeration route
  auto mix = mdl::mixture_joint({0.5, 0.5}, {mdl::dsbs(0.05), mdl::dsbs(0.3)});
  for (double rho : {0.25, 1.0})
    CHECK(std::abs(source_j0(mix, 3, Rho(rho)) -
                   static_cast<double>(oracle::j0_brute(mix, 3, rho))) <=
          1e-10);
  auto mk = mdl::markov_joint_example();
  for (double rho : {0.5, 1.0})
    CHECK(std::abs(source_j0(mk, 3, Rho(rho)) -
                   static_cast<double>(oracle::j0_brute(mk, 3, rho))) <=
          1e-10);
}

TEST_CASE("E0 and J0 shape properties on a 50-point grid") {
  auto u = mdl::uniform_source();
  auto b = mdl::bsc(0.11);
  auto ds = mdl::dsbs(0.11);
  std::vector<double> e0(50), j0(50);
  for (int i = 0; i < 50; ++i) {
    double rho = static_cast<double>(i) / 49.0;
    e0[i] = gallager_e0(u, b, 4, Rho(rho));
    j0[i] = source_j0(ds, 4, Rho(rho));
  }
  for (int i = 0; i < 50; ++i) {
    CHECK(e0[i] >= -1e-12);
    CHECK(j0[i] >= -1e-12);
    CHECK(j0[i] <= (static_cast<double>(i) / 49.0) * kLn2 + 1e-12);
    if (i > 0) {
      CHECK(e0[i] >= e0[i - 1] - 1e-12);
      CHECK(j0[i] >= j0[i - 1] - 1e-12);
    }
    if (i > 1) {
      // E0 concave, J0 convex
      CHECK(e0[i] - 2 * e0[i - 1] + e0[i - 2] <= 1e-10);
      CHECK(j0[i] - 2 * j0[i - 1] + j0[i - 2] >= -1e-10);
    }
  }
}

TEST_CASE("rho_n formulas") {
  CHECK(rho_n_channel(Rate(0.5), std::exp(-4.0), 2).value == 1.0);
  CHECK(rho_n_channel(Rate(0.1), 0.01, 100).value ==
        doctest::Approx(-0.5 * std::log(0.01) / 10.0).epsilon(1e-14));
  CHECK(rho_n_channel(Rate(0.1), 0.01, 100).value ==
        doctest::Approx(0.230258509299).epsilon(1e-10));
  CHECK(rho_n_channel(Rate(0.3), 0.0, 7).value == 1.0);
  CHECK(rho_n_channel(Rate(0.3), 1.0, 7).value == 0.0);
  CHECK_THROWS_AS(rho_n_channel(Rate(0.0), 0.5, 4), InputError);

  CHECK(rho_n_source(Rate(kLn2), 0.5, 4, kLn2).value == 1.0);
  CHECK(rho_n_source(Rate(kLn2 - 0.1), 0.01, 100, kLn2).value ==
        doctest::Approx(0.230258509299).epsilon(1e-10));
  CHECK(rho_n_source(Rate(0.2), 1.0, 5, kLn2).value == 0.0);
  CHECK(rho_n_source(Rate(0.2), 0.0, 5, kLn2).value == 1.0);
  CHECK_THROWS_AS(rho_n_source(Rate(0.2), 0.5, 5, 0.0), InputError);
}

TEST_CASE("verify_theorem1 across families") {
  auto u = mdl::uniform_source();
  // identity channel, eps = 0 branch: all fields pinned by arithmetic
  auto rep = verify_theorem1(u, mdl::identity_channel(), 4,
                             Rate(kLn2 - 0.05));
  CHECK(rep.epsilon_n == 0.0);
  CHECK(rep.rho_n == 1.0);
  CHECK(rep.lhs == doctest::Approx(kLn2).epsilon(1e-12));
  CHECK(rep.rhs ==
        doctest::Approx(kLn2 - 0.05 - 3 * kLn2 / 4).epsilon(1e-12));
  CHECK(rep.holds);
  CHECK(rep.slack == doctest::Approx(rep.lhs - rep.rhs).epsilon(1e-15));

  auto rep2 = verify_theorem1(u, mdl::bsc(0.11), 8, Rate(0.2966));
  CHECK(rep2.holds);
  CHECK(rep2.slack > 0.0);

  auto mixc = mdl::mixture_channel({0.5, 0.5}, {mdl::bsc(0.02), mdl::bsc(0.3)});
  CHECK(verify_theorem1(u, mixc, 6, Rate(0.05)).holds);

  // holds across a threshold grid up to n = 10
  for (int k = 1; k <= 5; ++k) {
    CHECK(verify_theorem1(u, mdl::bsc(0.11), 10, Rate(0.3466 * k / 6.0), 2)
              .holds);
    CHECK(verify_theorem1(u, mixc, 10, Rate(0.08 * k / 6.0), 2).holds);
  }

  // thresholds well past the mixture's limit rate still satisfy the bound
  // (the estimate is threshold-parameterized, not tied to the limit)
  for (double t : {0.4, 0.6})
    for (int n : {4, 8}) CHECK(verify_theorem1(u, mixc, n, Rate(t), 2).holds);
}

TEST_CASE("verify_theorem2 across families") {
  auto rep = verify_theorem2(mdl::correlated_uniform(), 4, Rate(0.1));
  CHECK(rep.epsilon_n == 0.0);
  CHECK(rep.rho_n == 1.0);
  CHECK(std::abs(rep.lhs) <= 1e-12);
  CHECK(rep.rhs == doctest::Approx(0.1 + 3 * kLn2 / 4).epsilon(1e-12));
  CHECK(rep.holds);

  double hb11 = static_cast<double>(oracle::binary_entropy(0.11L));
  CHECK(verify_theorem2(mdl::dsbs(0.11), 8, Rate(hb11 + 0.05)).holds);

  auto mix = mdl::mixture_joint({0.5, 0.5}, {mdl::dsbs(0.05), mdl::dsbs(0.3)});
  double hb3 = static_cast<double>(oracle::binary_entropy(0.3L));
  CHECK(verify_theorem2(mix, 6, Rate(hb3 + 0.1)).holds);

  // holds across a threshold grid up to n = 10
  for (int k = 1; k <= 5; ++k) {
    double t = hb11 + (kLn2 - hb11) * k / 6.0;
    CHECK(verify_theorem2(mdl::dsbs(0.11), 10, Rate(t), 2).holds);
    double tm2 = hb3 + (kLn2 - hb3) * k / 6.0;
    CHECK(verify_theorem2(mix, 10, Rate(tm2), 2).holds);
  }

  // markov joints go through the enumeration route and still satisfy it
  auto mk = mdl::markov_joint_example();
  for (int n : {2, 4, 6})
    for (double t : {0.2, 0.45, 0.65})
      CHECK(verify_theorem2(mk, n, Rate(t), 2).holds);
}

TEST_CASE("channel_exponent maximization") {
  auto u = mdl::uniform_source();
  auto b = mdl::bsc(0.11);
  // R = 0: exponent is E0(1) at rho = 1
  auto p0 = channel_exponent(u, b, 4, Rate(0.0));
  CHECK(p0.argmax.value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(p0.exponent ==
        doctest::Approx(gallager_e0(u, b, 4, Rho(1.0))).epsilon(1e-9));

  // huge rate: objective nonpositive, maximum 0 at rho = 0
  auto p1 = channel_exponent(u, b, 4, Rate(10.0));
  CHECK(p1.exponent == 0.0);
  CHECK(p1.argmax.value == 0.0);

  // dense-grid oracle at R = 0.2
  auto p2 = channel_exponent(u, b, 4, Rate(0.2));
  double want = grid_max(
      [&](double rho) { return gallager_e0(u, b, 4, Rho(rho)) - rho * 0.2; });
  CHECK(std::abs(p2.exponent - want) <= 1e-8);
}

TEST_CASE("source_exponent maximization") {
  auto ds = mdl::dsbs(0.11);
  auto p0 = source_exponent(ds, 4, Rate(0.0));
  CHECK(p0.exponent == 0.0);
  CHECK(p0.argmax.value == 0.0);

  // R > ln|X|: objective increasing, maximum at rho = 1
  auto p1 = source_exponent(ds, 4, Rate(kLn2 + 0.2));
  CHECK(p1.argmax.value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(p1.exponent == doctest::Approx(kLn2 + 0.2 -
                                       source_j0(ds, 4, Rho(1.0)))
                           .epsilon(1e-9));

  auto p2 = source_exponent(ds, 4, Rate(0.45));
  double want = grid_max(
      [&](double rho) { return rho * 0.45 - source_j0(ds, 4, Rho(rho)); });
  CHECK(std::abs(p2.exponent - want) <= 1e-8);
}

TEST_CASE("input optimization recovers the uniform input for the BSC") {
  SourceModel best;
  auto pt = channel_exponent_optimized(mdl::bsc(0.11), 1, Rate(0.2), 33, 1,
                                       &best);
  auto uni = channel_exponent(mdl::uniform_source(), mdl::bsc(0.11), 1,
                              Rate(0.2));
  CHECK(pt.exponent >= uni.exponent - 1e-9);
  CHECK(std::abs(best.dists[0][0] - 0.5) < 1e-3);
}

TEST_CASE("tilted_joint") {
  auto ds = mdl::dsbs(0.11);
  // rho = 0 reproduces the base joint pointwise
  auto t0 = tilted_joint(ds, 2, Rho(0.0));
  for (const auto& x : oracle::all_sequences(2, 2))
    for (const auto& y : oracle::all_sequences(2, 2)) {
      double want = joint_log_prob(ds, x, y);
      CHECK(std::abs(t0.log_mass(x, y) - want) <= 1e-12);
    }
  CHECK(std::abs(t0.total_mass() - 1.0) <= 1e-10);

  // hand-computed 4-cell tilt at n=1, rho=1
  auto t1 = tilted_joint(ds, 1, Rho(1.0));
  long double col = std::sqrt(0.055L) + std::sqrt(0.445L);
  long double z = 2.0L * col * col;
  long double diag = std::sqrt(0.445L) * col / z;
  long double off = std::sqrt(0.055L) * col / z;
  CHECK(t1.log_mass(sv({0}), sv({0})) ==
        doctest::Approx(static_cast<double>(std::log(diag))).epsilon(1e-12));
  CHECK(t1.log_mass(sv({0}), sv({1})) ==
        doctest::Approx(static_cast<double>(std::log(off))).epsilon(1e-12));
  CHECK(std::abs(t1.total_mass() - 1.0) <= 1e-10);

  // normalizer ties to J0 for both storage layouts
  for (int n : {1, 2, 3}) {
    auto ft = tilted_joint(ds, n, Rho(0.37));
    CHECK(ft.factored);
    CHECK(std::abs(ft.log_normalizer - n * source_j0(ds, n, Rho(0.37))) <=
          1e-10);
    auto mix =
        mdl::mixture_joint({0.5, 0.5}, {mdl::dsbs(0.05), mdl::dsbs(0.3)});
    auto et = tilted_joint(mix, n, Rho(0.37));
    CHECK_FALSE(et.factored);
    CHECK(std::abs(et.log_normalizer - n * source_j0(mix, n, Rho(0.37))) <=
          1e-10);
    CHECK(std::abs(et.total_mass() - 1.0) <= 1e-10);
  }

  // factored and full-table storage agree on a memoryless model
  auto full_path = mdl::dsbs(0.25);
  auto fac = tilted_joint(full_path, 2, Rho(0.8));
  JointSourceModel as_mix = mdl::mixture_joint({1.0}, {mdl::dsbs(0.25)});
  // weight-1 mixtures are rejected by validate but evaluate fine; force the
  // enumeration route through the mixture wrapper
  auto ful = tilted_joint(as_mix, 2, Rho(0.8));
  for (const auto& x : oracle::all_sequences(2, 2))
    for (const auto& y : oracle::all_sequences(2, 2))
      CHECK(std::abs(fac.log_mass(x, y) - ful.log_mass(x, y)) <= 1e-11);
}

TEST_CASE("j0_derivative identity") {
  // rho = 0: (1/n) H(X|Y) of the base joint
  auto ds = mdl::dsbs(0.11);
  for (int n : {1, 2, 3}) {
    double want = static_cast<double>(oracle::cond_entropy_brute(ds, n));
    CHECK(std::abs(j0_derivative(ds, n, Rho(0.0)) - want) <= 1e-11);
  }
  // uniform independent: ln 2 at any rho
  auto ind = mdl::independent_joint(0.5);
  for (double rho : {0.0, 0.4, 1.0})
    CHECK(std::abs(j0_derivative(ind, 3, Rho(rho)) - kLn2) <= 1e-12);

  // central differences of J0, three models, rho in {0.1, 0.5, 0.9}
  std::vector<JointSourceModel> joints{
      mdl::dsbs(0.11), mdl::dsbs(0.25),
      mdl::mixture_joint({0.5, 0.5}, {mdl::dsbs(0.05), mdl::dsbs(0.3)})};
  const double h = 1e-5;
  for (const auto& j : joints)
    for (double rho : {0.1, 0.5, 0.9}) {
      int n = 2;
      double fd = (source_j0(j, n, Rho(rho + h)) -
                   source_j0(j, n, Rho(rho - h))) /
                  (2 * h);
      double an = j0_derivative(j, n, Rho(rho));
      CHECK(std::abs(an - fd) / std::max(std::abs(fd), 1e-12) <= 1e-4);
    }
}

TEST_CASE("solve_rho0 and the exponent round trip") {
  auto ds = mdl::dsbs(0.11);
  const int n = 2;
  double d0 = j0_derivative(ds, n, Rho(0.0));
  double d1 = j0_derivative(ds, n, Rho(1.0));
  CHECK(d0 < d1);

  // interior rates reproduce the direct maximization
  for (double frac : {0.15, 0.35, 0.5, 0.65, 0.85}) {
    double R = d0 + (d1 - d0) * frac;
    Rho rho0 = solve_rho0(ds, n, Rate(R));
    double via_rho0 = rho0.value * R - source_j0(ds, n, rho0);
    double direct = source_exponent(ds, n, Rate(R)).exponent;
    CHECK(std::abs(via_rho0 - direct) <= 1e-8);
    CHECK(std::abs(j0_derivative(ds, n, rho0) - R) <= 1e-9);
  }

  // endpoints approached from inside
  Rho lo = solve_rho0(ds, n, Rate(d0 + 1e-6));
  CHECK(lo.value < 0.05);
  Rho hi = solve_rho0(ds, n, Rate(d1 - 1e-6));
  CHECK(hi.value > 0.95);

  // outside the interval: domain error naming the interval
  CHECK_THROWS_AS(solve_rho0(ds, n, Rate(d0 - 0.01)), DomainError);
  CHECK_THROWS_AS(solve_rho0(ds, n, Rate(d1 + 0.01)), DomainError);
  // degenerate flat case: deterministic coupling has J0 identically 0
  CHECK_THROWS_AS(solve_rho0(mdl::correlated_uniform(), 2, Rate(0.2)),
                  DomainError);
}

TEST_CASE("rho clamping") {
  CHECK(Rho(-1e-12).value == 0.0);
  CHECK(Rho(1.0 + 1e-12).value == 1.0);
  CHECK_THROWS_AS(Rho(1.5), InputError);
  CHECK_THROWS_AS(Rho(-0.5), InputError);
  CHECK_THROWS_AS(Rate(-0.1), InputError);
}

TEST_CASE("n rho_n grows along a verified grid") {
  // The tail at t = 0.15 keeps shrinking over n in {4, 8, 16}, so n rho_n
  // increases strictly; see the acceptance notes for why t = 0.29 does not
  // give a monotone triple at these blocklengths.
  auto u = mdl::uniform_source();
  auto b = mdl::bsc(0.11);
  double prev = 0.0;
  for (int n : {4, 8, 16}) {
    auto spec = exact_spectrum(u, b, n);
    double eps = epsilon_at(spec, 0.15, Tail::BelowStrict).epsilon;
    double nrho = n * rho_n_channel(Rate(0.15), eps, n).value;
    CHECK(nrho > prev);
    prev = nrho;
  }
}
