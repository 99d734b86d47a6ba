#include "infospec/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "infospec/golden.hpp"
#include "infospec/kernels.hpp"
#include "infospec/parallel.hpp"

namespace infospec {

namespace {

constexpr std::uint64_t kYBlock = 256;
constexpr std::size_t kChunk = 8192;

int saturating_index(std::size_t len, int pos) {
  return pos < static_cast<int>(len) ? pos : static_cast<int>(len) - 1;
}

// streaming log-sum-exp with fixed-size chunks so the reduction order is
// independent of callers' loop structure
struct ChunkedLse {
  kernels::LsePartial part;
  std::vector<double> buf;

  ChunkedLse() { buf.reserve(kChunk); }
  void push(double v) {
    buf.push_back(v);
    if (buf.size() == kChunk) flush();
  }
  void flush() {
    if (!buf.empty()) {
      part.add_block(buf.data(), buf.size());
      buf.clear();
    }
  }
  double take() {
    flush();
    return part.value();
  }
};

}  // namespace

Rho::Rho(double v) {
  if (v >= 0.0 && v <= 1.0) {
    value = v;
    return;
  }
  if (v >= -1e-9 && v <= 1.0 + 1e-9) {
    if (v < -1e-12 || v > 1.0 + 1e-12)
      std::fprintf(stderr, "infospec: clamping rho %.17g into [0,1]\n", v);
    value = std::clamp(v, 0.0, 1.0);
    return;
  }
  throw InputError("rho outside [0,1]: " + std::to_string(v));
}

Rate::Rate(double v) {
  if (!std::isfinite(v) || v < 0.0)
    throw InputError("rate must be finite and nonnegative: " +
                     std::to_string(v));
  value = v;
}

// ------------------------------------------------------------------- E0

namespace {

double e0_single_letter(std::span<const double> dist,
                        std::span<const double> mat, int nx, int ny,
                        double rho) {
  const double c = 1.0 / (1.0 + rho);
  double s = 0.0;
  for (int y = 0; y < ny; ++y) {
    double inner = 0.0;
    for (int x = 0; x < nx; ++x) {
      double w = mat[x * ny + y];
      if (w > 0.0 && dist[x] > 0.0) inner += dist[x] * std::pow(w, c);
    }
    if (inner > 0.0) s += std::pow(inner, 1.0 + rho);
  }
  return -std::log(s);
}

double j0_single_letter(std::span<const double> table, int nx, int ny,
                        double rho) {
  const double c = 1.0 / (1.0 + rho);
  double s = 0.0;
  for (int y = 0; y < ny; ++y) {
    double inner = 0.0;
    for (int x = 0; x < nx; ++x) {
      double q = table[x * ny + y];
      if (q > 0.0) inner += std::pow(q, c);
    }
    if (inner > 0.0) s += std::pow(inner, 1.0 + rho);
  }
  return std::log(s);
}

// shared enumeration skeleton for E0 / J0: outer walk over y^n, inner walk
// over x^n pushing one log term per pair, then the (1+rho)-power sum over y
template <class InnerTerm>
double power_sum_enumerated(int n, int nx, int ny, double rho, int workers,
                            const std::vector<const PrefixEvaluator*>& xevals,
                            InnerTerm&& term) {
  const std::uint64_t ytotal = pow_u64(static_cast<std::uint64_t>(ny), n);
  const std::uint64_t xtotal = pow_u64(static_cast<std::uint64_t>(nx), n);
  const std::uint64_t nblocks = (ytotal + kYBlock - 1) / kYBlock;
  std::vector<kernels::LsePartial> parts(nblocks);
  parallel_blocks(nblocks, workers, [&](std::size_t blk) {
    SequenceWalker ywalk(n, ny, SequenceWalker::Side::Y, {});
    SequenceWalker xwalk(n, nx, SequenceWalker::Side::X, xevals);
    ChunkedLse outer;
    const std::uint64_t ybegin = blk * kYBlock;
    const std::uint64_t yend = std::min(ytotal, ybegin + kYBlock);
    ywalk.run(ybegin, yend, [&](std::uint64_t, std::span<const int> yn,
                                std::span<const double>) {
      xwalk.set_fixed_other(yn);
      ChunkedLse inner;
      xwalk.run(0, xtotal, [&](std::uint64_t, std::span<const int>,
                               std::span<const double> xvals) {
        inner.push(term(xvals));
      });
      double s_y = inner.take();
      if (s_y != kNegInf) outer.push((1.0 + rho) * s_y);
    });
    outer.flush();
    parts[blk] = outer.part;
  });
  return kernels::merge_tree(std::move(parts)).value();
}

}  // namespace

double gallager_e0_enumerated(const SourceModel& src, const ChannelModel& chan,
                              int n, Rho rho, int workers) {
  if (src.alphabet.size != chan.in.size)
    throw InputError("source and channel input alphabets differ");
  if (n < 1) throw InputError("blocklength must be >= 1");
  check_enum_budget(static_cast<std::uint64_t>(src.alphabet.size) *
                        static_cast<std::uint64_t>(chan.out.size),
                    n, "E0");
  const double c = 1.0 / (1.0 + rho.value);
  PrefixEvaluator sx(src, n);
  PrefixEvaluator cxy(chan, n);
  double lse = power_sum_enumerated(
      n, src.alphabet.size, chan.out.size, rho.value, workers, {&sx, &cxy},
      [c](std::span<const double> v) { return v[0] + c * v[1]; });
  return -lse / n;
}

double gallager_e0(const SourceModel& src, const ChannelModel& chan, int n,
                   Rho rho, int workers) {
  if (src.alphabet.size != chan.in.size)
    throw InputError("source and channel input alphabets differ");
  if (n < 1) throw InputError("blocklength must be >= 1");
  if (src.family == Family::Memoryless && chan.family == Family::Memoryless) {
    double sum = 0.0;
    int last_di = -1, last_wi = -1;
    double cached = 0.0;
    for (int p = 0; p < n; ++p) {
      int di = saturating_index(src.dists.size(), p);
      int wi = saturating_index(chan.matrices.size(), p);
      if (di != last_di || wi != last_wi) {
        cached = e0_single_letter(src.dists[di], chan.matrices[wi],
                                  src.alphabet.size, chan.out.size, rho.value);
        last_di = di;
        last_wi = wi;
      }
      sum += cached;
    }
    return sum / n;
  }
  return gallager_e0_enumerated(src, chan, n, rho, workers);
}

double source_j0_enumerated(const JointSourceModel& joint, int n, Rho rho,
                            int workers) {
  if (n < 1) throw InputError("blocklength must be >= 1");
  check_enum_budget(static_cast<std::uint64_t>(joint.x.size) *
                        static_cast<std::uint64_t>(joint.y.size),
                    n, "J0");
  const double c = 1.0 / (1.0 + rho.value);
  PrefixEvaluator jxy(joint, PrefixEvaluator::Role::JointXY, n);
  double lse = power_sum_enumerated(
      n, joint.x.size, joint.y.size, rho.value, workers, {&jxy},
      [c](std::span<const double> v) { return c * v[0]; });
  return lse / n;
}

double source_j0(const JointSourceModel& joint, int n, Rho rho, int workers) {
  if (n < 1) throw InputError("blocklength must be >= 1");
  if (joint.family == Family::Memoryless) {
    double sum = 0.0;
    int last = -1;
    double cached = 0.0;
    for (int p = 0; p < n; ++p) {
      int ti = saturating_index(joint.tables.size(), p);
      if (ti != last) {
        cached = j0_single_letter(joint.tables[ti], joint.x.size, joint.y.size,
                                  rho.value);
        last = ti;
      }
      sum += cached;
    }
    return sum / n;
  }
  return source_j0_enumerated(joint, n, rho, workers);
}

// ----------------------------------------------------------------- rho_n

Rho rho_n_channel(Rate t, double epsilon_n, int n) {
  if (!(t.value > 0.0)) throw InputError("threshold must be positive");
  if (epsilon_n < 0.0 || epsilon_n > 1.0)
    throw InputError("epsilon must lie in [0,1]");
  if (n < 1) throw InputError("blocklength must be >= 1");
  if (epsilon_n == 0.0) return Rho(1.0);
  double r = -0.5 * std::log(epsilon_n) / (n * t.value);
  return Rho(std::min(1.0, r));
}

Rho rho_n_source(Rate t, double epsilon_n, int n, double ln_alphabet) {
  if (!(ln_alphabet > 0.0)) throw InputError("ln|X| must be positive");
  if (epsilon_n < 0.0 || epsilon_n > 1.0)
    throw InputError("epsilon must lie in [0,1]");
  if (n < 1) throw InputError("blocklength must be >= 1");
  if (t.value >= ln_alphabet) return Rho(1.0);
  if (epsilon_n == 0.0) return Rho(1.0);
  double r = -0.5 * std::log(epsilon_n) / (n * (ln_alphabet - t.value));
  return Rho(std::min(1.0, r));
}

// ------------------------------------------------------------- verifiers

BoundReport verify_theorem1(const SourceModel& src, const ChannelModel& chan,
                            int n, Rate t, int workers) {
  SpectrumCdf spec = exact_spectrum(src, chan, n, workers);
  TailProbe probe = epsilon_at(spec, t.value, Tail::BelowStrict);
  Rho rn = rho_n_channel(t, probe.epsilon, n);
  BoundReport rep;
  rep.n = n;
  rep.threshold = t.value;
  rep.epsilon_n = probe.epsilon;
  rep.rho_n = rn.value;
  rep.lhs = gallager_e0(src, chan, n, rn, workers);
  rep.rhs = rn.value * t.value - 3.0 * kLn2 / n;
  rep.slack = rep.lhs - rep.rhs;
  rep.holds = rep.slack >= -kBoundSlackTol;
  return rep;
}

BoundReport verify_theorem2(const JointSourceModel& joint, int n, Rate t,
                            int workers) {
  SpectrumCdf spec = exact_spectrum(joint, n, DensityKind::Entropy, workers);
  TailProbe probe = epsilon_at(spec, t.value, Tail::AboveStrict);
  const double ln_alpha = std::log(static_cast<double>(joint.x.size));
  Rho rn = rho_n_source(t, probe.epsilon, n, ln_alpha);
  BoundReport rep;
  rep.n = n;
  rep.threshold = t.value;
  rep.epsilon_n = probe.epsilon;
  rep.rho_n = rn.value;
  rep.lhs = source_j0(joint, n, rn, workers);
  rep.rhs = rn.value * t.value + 3.0 * kLn2 / n;
  rep.slack = rep.rhs - rep.lhs;
  rep.holds = rep.slack >= -kBoundSlackTol;
  return rep;
}

// ------------------------------------------------------------- exponents

ExponentPoint channel_exponent(const SourceModel& src,
                               const ChannelModel& chan, int n, Rate R,
                               int rho_grid_size, int workers) {
  if (rho_grid_size < 2) throw InputError("rho grid needs at least 2 points");
  auto objective = [&](double rho) {
    return gallager_e0(src, chan, n, Rho(rho), workers) - rho * R.value;
  };
  auto [x, v] = maximize_unimodal(objective, 0.0, 1.0, rho_grid_size);
  return {v, Rho(x)};
}

ExponentPoint channel_exponent_optimized(const ChannelModel& chan, int n,
                                         Rate R, int rho_grid_size,
                                         int workers,
                                         SourceModel* best_input) {
  if (chan.family != Family::Memoryless)
    throw InputError("input optimization needs a memoryless channel");
  const int k = chan.in.size;
  SourceModel input;
  input.family = Family::Memoryless;
  input.alphabet = chan.in;
  input.dists = {std::vector<double>(k, 1.0 / k)};
  auto value = [&](const SourceModel& s) {
    return channel_exponent(s, chan, n, R, rho_grid_size, workers).exponent;
  };
  double best = value(input);
  // coordinate ascent: reoptimize one symbol's share against the rest
  for (int sweep = 0; sweep < 50; ++sweep) {
    double sweep_start = best;
    for (int j = 0; j < k; ++j) {
      double pj = input.dists[0][j];
      if (pj >= 1.0) continue;
      auto with_share = [&](double lam) {
        SourceModel s = input;
        double scale = (1.0 - lam) / (1.0 - pj);
        for (int i = 0; i < k; ++i)
          s.dists[0][i] = i == j ? lam : s.dists[0][i] * scale;
        return s;
      };
      auto obj = [&](double lam) { return value(with_share(lam)); };
      auto [lam, v] = maximize_unimodal(obj, 0.0, 1.0, 33, 1e-6);
      if (v > best + 1e-15) {
        best = v;
        input = with_share(lam);
      }
    }
    if (best - sweep_start < 1e-12) break;
  }
  auto pt = channel_exponent(input, chan, n, R, rho_grid_size, workers);
  if (best_input) *best_input = input;
  return pt;
}

ExponentPoint source_exponent(const JointSourceModel& joint, int n, Rate R,
                              int rho_grid_size, int workers) {
  if (rho_grid_size < 2) throw InputError("rho grid needs at least 2 points");
  auto objective = [&](double rho) {
    return rho * R.value - source_j0(joint, n, Rho(rho), workers);
  };
  auto [x, v] = maximize_unimodal(objective, 0.0, 1.0, rho_grid_size);
  return {v, Rho(x)};
}

// ---------------------------------------------------------------- tilting

double TiltedJoint::log_mass(std::span<const int> xn,
                             std::span<const int> yn) const {
  if (factored) {
    double s = 0.0;
    for (int p = 0; p < n; ++p) {
      const auto& t = position_log_mass[p];
      s += t[xn[p] * y.size + yn[p]];
    }
    return s;
  }
  std::uint64_t xr = sequence_rank(xn, x.size);
  std::uint64_t yr = sequence_rank(yn, y.size);
  return full_log_mass[yr * pow_u64(x.size, n) + xr];
}

double TiltedJoint::total_mass() const {
  if (factored) {
    double prod = 1.0;
    for (const auto& t : position_log_mass) {
      double s = 0.0;
      for (double lv : t) s += std::exp(lv);
      prod *= s;
    }
    return prod;
  }
  const auto& k = kernels::active();
  return k.sum_exp(full_log_mass.data(), full_log_mass.size(), 0.0);
}

double TiltedJoint::conditional_entropy_rate() const {
  if (factored) {
    double h = 0.0;
    for (const auto& t : position_log_mass) {
      std::vector<double> py(y.size, 0.0);
      for (int xi = 0; xi < x.size; ++xi)
        for (int yi = 0; yi < y.size; ++yi)
          py[yi] += std::exp(t[xi * y.size + yi]);
      for (int xi = 0; xi < x.size; ++xi)
        for (int yi = 0; yi < y.size; ++yi) {
          double m = std::exp(t[xi * y.size + yi]);
          if (m > 0.0) h += m * (std::log(py[yi]) - t[xi * y.size + yi]);
        }
    }
    return h / n;
  }
  const std::uint64_t xtotal = pow_u64(x.size, n);
  const std::uint64_t ytotal = pow_u64(y.size, n);
  double h = 0.0;
  std::vector<double> b(xtotal);
  for (std::uint64_t yr = 0; yr < ytotal; ++yr) {
    const double* slice = full_log_mass.data() + yr * xtotal;
    double log_ty = kernels::log_sum_exp(slice, xtotal);
    if (log_ty == kNegInf) continue;
    for (std::uint64_t xr = 0; xr < xtotal; ++xr) b[xr] = log_ty - slice[xr];
    h += kernels::active().sum_exp_mul(slice, b.data(), xtotal, 0.0);
  }
  return h / n;
}

TiltedJoint tilted_joint(const JointSourceModel& joint, int n, Rho rho) {
  if (n < 1) throw InputError("blocklength must be >= 1");
  const double c = 1.0 / (1.0 + rho.value);
  TiltedJoint out;
  out.n = n;
  out.rho = rho.value;
  out.x = joint.x;
  out.y = joint.y;
  if (joint.family == Family::Memoryless) {
    out.factored = true;
    const int nx = joint.x.size, ny = joint.y.size;
    double log_norm = 0.0;
    for (int p = 0; p < n; ++p) {
      const auto& q = joint.tables[saturating_index(joint.tables.size(), p)];
      std::vector<double> a(nx * ny, 0.0), col(ny, 0.0);
      for (int xi = 0; xi < nx; ++xi)
        for (int yi = 0; yi < ny; ++yi) {
          double v = q[xi * ny + yi];
          a[xi * ny + yi] = v > 0.0 ? std::pow(v, c) : 0.0;
          col[yi] += a[xi * ny + yi];
        }
      double z = 0.0;
      for (int yi = 0; yi < ny; ++yi)
        if (col[yi] > 0.0) z += std::pow(col[yi], 1.0 + rho.value);
      std::vector<double> lt(nx * ny, kNegInf);
      for (int xi = 0; xi < nx; ++xi)
        for (int yi = 0; yi < ny; ++yi) {
          double v = a[xi * ny + yi];
          if (v > 0.0)
            lt[xi * ny + yi] = std::log(v) +
                               rho.value * std::log(col[yi]) - std::log(z);
        }
      out.position_log_mass.push_back(std::move(lt));
      log_norm += std::log(z);
    }
    out.log_normalizer = log_norm;
    return out;
  }
  check_enum_budget(static_cast<std::uint64_t>(joint.x.size) *
                        static_cast<std::uint64_t>(joint.y.size),
                    n, "tilted joint");
  const std::uint64_t xtotal = pow_u64(joint.x.size, n);
  const std::uint64_t ytotal = pow_u64(joint.y.size, n);
  PrefixEvaluator jxy(joint, PrefixEvaluator::Role::JointXY, n);
  std::vector<double> logq(ytotal * xtotal);
  std::vector<double> logcol(ytotal);
  SequenceWalker ywalk(n, joint.y.size, SequenceWalker::Side::Y, {});
  SequenceWalker xwalk(n, joint.x.size, SequenceWalker::Side::X, {&jxy});
  std::vector<double> scaled(xtotal);
  ywalk.run(0, ytotal, [&](std::uint64_t yr, std::span<const int> yn,
                           std::span<const double>) {
    xwalk.set_fixed_other(yn);
    double* row = logq.data() + yr * xtotal;
    xwalk.run(0, xtotal, [&](std::uint64_t xr, std::span<const int>,
                             std::span<const double> v) { row[xr] = v[0]; });
    for (std::uint64_t xr = 0; xr < xtotal; ++xr) scaled[xr] = c * row[xr];
    logcol[yr] = kernels::log_sum_exp(scaled.data(), xtotal);
  });
  std::vector<double> outer(ytotal);
  for (std::uint64_t yr = 0; yr < ytotal; ++yr)
    outer[yr] = (1.0 + rho.value) * logcol[yr];
  double log_z = kernels::log_sum_exp(outer.data(), ytotal);
  out.full_log_mass.resize(ytotal * xtotal);
  for (std::uint64_t yr = 0; yr < ytotal; ++yr) {
    const double* row = logq.data() + yr * xtotal;
    double* trow = out.full_log_mass.data() + yr * xtotal;
    for (std::uint64_t xr = 0; xr < xtotal; ++xr)
      trow[xr] = row[xr] == kNegInf
                     ? kNegInf
                     : c * row[xr] + rho.value * logcol[yr] - log_z;
  }
  out.log_normalizer = log_z;
  return out;
}

double j0_derivative(const JointSourceModel& joint, int n, Rho rho) {
  return tilted_joint(joint, n, rho).conditional_entropy_rate();
}

Rho solve_rho0(const JointSourceModel& joint, int n, Rate R) {
  auto deriv = [&](double rho) {
    return j0_derivative(joint, n, Rho(rho));
  };
  const double d0 = deriv(0.0);
  const double d1 = deriv(1.0);
  if (!(d0 < R.value && R.value < d1)) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "rate %.12g outside the solvable interval (%.12g, %.12g)",
                  R.value, d0, d1);
    throw DomainError(buf);
  }
  double lo = 0.0, hi = 1.0;
  double mid = 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    mid = 0.5 * (lo + hi);
    double dm = deriv(mid);
    if (std::abs(dm - R.value) <= 1e-10) return Rho(mid);
    (dm < R.value ? lo : hi) = mid;
  }
  mid = 0.5 * (lo + hi);
  if (std::abs(deriv(mid) - R.value) > 1e-9)
    throw DomainError("tilted-entropy bisection failed to reach the target");
  return Rho(mid);
}

}  // namespace infospec
