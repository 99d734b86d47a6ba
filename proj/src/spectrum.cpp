#include "infospec/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include "infospec/kernels.hpp"
#include "infospec/parallel.hpp"

namespace infospec {

namespace {

constexpr double kMergeTol = 1e-12;
constexpr std::uint64_t kYBlock = 256;        // y sequences per work block
constexpr std::uint64_t kSampleBlock = 4096;  // Monte Carlo samples per block

using RawAtoms = std::vector<SpectrumAtom>;

// sort by value, fold points within kMergeTol of the running anchor
void sort_and_merge(RawAtoms& atoms) {
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const SpectrumAtom& a, const SpectrumAtom& b) {
                     return a.value < b.value;
                   });
  RawAtoms out;
  out.reserve(atoms.size());
  for (const auto& a : atoms) {
    if (!out.empty() && a.value - out.back().value <= kMergeTol)
      out.back().mass += a.mass;
    else
      out.push_back(a);
  }
  atoms.swap(out);
}

RawAtoms convolve(const RawAtoms& a, const RawAtoms& b) {
  if (a.size() * b.size() > kEnumBudget)
    throw CapacityError(
        "spectrum convolution support exceeds budget; use the Monte Carlo "
        "route instead");
  RawAtoms out;
  out.reserve(a.size() * b.size());
  for (const auto& pa : a)
    for (const auto& pb : b)
      out.push_back({pa.value + pb.value, pa.mass * pb.mass});
  sort_and_merge(out);
  return out;
}

int saturating_index(std::size_t len, int pos) {
  return pos < static_cast<int>(len) ? pos : static_cast<int>(len) - 1;
}

// Per-position density atoms (unnormalized: raw log ratio per symbol).
// Zero-probability cells carry no mass and are dropped: every atom that
// survives has a finite value.
RawAtoms position_atoms_pair(std::span<const double> dist,
                             std::span<const double> mat, int nx, int ny) {
  std::vector<double> py(ny, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) py[y] += dist[x] * mat[x * ny + y];
  RawAtoms atoms;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      double m = dist[x] * mat[x * ny + y];
      if (m <= 0.0) continue;
      atoms.push_back({std::log(mat[x * ny + y]) - std::log(py[y]), m});
    }
  sort_and_merge(atoms);
  return atoms;
}

RawAtoms position_atoms_joint(std::span<const double> table, int nx, int ny,
                              DensityKind kind) {
  std::vector<double> px(nx, 0.0), py(ny, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      px[x] += table[x * ny + y];
      py[y] += table[x * ny + y];
    }
  RawAtoms atoms;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      double m = table[x * ny + y];
      if (m <= 0.0) continue;
      double v = kind == DensityKind::Information
                     ? std::log(m) - std::log(px[x]) - std::log(py[y])
                     : -(std::log(m) - std::log(py[y]));
      atoms.push_back({v, m});
    }
  sort_and_merge(atoms);
  return atoms;
}

SpectrumCdf finish_exact(RawAtoms atoms, int n, DensityKind kind) {
  for (auto& a : atoms) a.value /= n;
  sort_and_merge(atoms);
  SpectrumCdf cdf;
  cdf.n = n;
  cdf.kind = kind;
  cdf.mode = SpectrumMode::Exact;
  cdf.atoms = std::move(atoms);
  return cdf;
}

bool all_memoryless(const SourceModel& s) {
  return s.family == Family::Memoryless;
}
bool all_memoryless(const ChannelModel& c) {
  return c.family == Family::Memoryless;
}

// Enumeration core shared by the mixture/Markov spectra and the proof-set
// diagnostic. For every y^n with positive marginal, visits every x^n and
// hands (density, linear mass, y-rank, per-y marginal) to the sink. Blocks
// of y-ranks may run on different workers; sinks write per-block state only.
template <class PerY, class PerPair>
void enumerate_pairs(const PrefixEvaluator* mass_src,
                     const PrefixEvaluator* mass_chan,
                     const PrefixEvaluator* mass_joint,
                     const PrefixEvaluator* marg_y,
                     const PrefixEvaluator* marg_x, int n, int nx, int ny,
                     int workers, PerY&& per_y, PerPair&& per_pair) {
  const std::uint64_t ytotal = pow_u64(static_cast<std::uint64_t>(ny), n);
  const std::uint64_t nblocks = (ytotal + kYBlock - 1) / kYBlock;
  parallel_blocks(nblocks, workers, [&](std::size_t blk) {
    std::vector<const PrefixEvaluator*> yevals{marg_y};
    SequenceWalker ywalk(n, ny, SequenceWalker::Side::Y, yevals);
    std::vector<const PrefixEvaluator*> xevals;
    if (mass_joint) {
      xevals = {mass_joint};
      if (marg_x) xevals.push_back(marg_x);
    } else {
      xevals = {mass_src, mass_chan};
    }
    SequenceWalker xwalk(n, nx, SequenceWalker::Side::X, xevals);
    const std::uint64_t ybegin = blk * kYBlock;
    const std::uint64_t yend = std::min(ytotal, ybegin + kYBlock);
    ywalk.run(ybegin, yend, [&](std::uint64_t yrank, std::span<const int> yn,
                                std::span<const double> yvals) {
      const double log_py = yvals[0];
      if (log_py == kNegInf) return;  // zero-probability output sequence
      per_y(blk, yrank, log_py);
      xwalk.set_fixed_other(yn);
      const std::uint64_t xtotal = pow_u64(static_cast<std::uint64_t>(nx), n);
      xwalk.run(0, xtotal, [&](std::uint64_t xrank, std::span<const int>,
                               std::span<const double> xvals) {
        double log_mass, density_num;
        if (mass_joint) {
          log_mass = xvals[0];
          if (marg_x)
            density_num = log_mass - xvals[1] - log_py;  // information
          else
            density_num = -(log_mass - log_py);  // entropy
        } else {
          log_mass = xvals[0] + xvals[1];
          density_num = xvals[1] - log_py;  // ln W - ln P_Y
        }
        per_pair(blk, yrank, xrank, density_num / n, log_mass, log_py);
      });
    });
  });
}

struct EnumEvals {
  // owning holder for whichever evaluators an enumeration needs
  std::vector<PrefixEvaluator> store;
};

}  // namespace

double SpectrumCdf::total_mass() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.mass;
  return s;
}

double SpectrumCdf::mean() const {
  if (mode == SpectrumMode::Exact) {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass * a.value;
    return s;
  }
  double s = 0.0;
  for (double v : samples) s += v;
  return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
}

// ------------------------------------------------------------- densities

double information_density(const SourceModel& src, const ChannelModel& chan,
                           std::span<const int> xn, std::span<const int> yn) {
  const int n = static_cast<int>(xn.size());
  double lw = channel_log_prob(chan, xn, yn);
  JointSourceModel joint = induce_joint(src, chan);
  double lpy = marginal_y_log_prob(joint, yn);
  if (lpy == kNegInf)
    throw DomainError("information density undefined: P_Y(y^n) = 0");
  return (lw - lpy) / n;
}

double information_density(const JointSourceModel& joint,
                           std::span<const int> xn, std::span<const int> yn) {
  const int n = static_cast<int>(xn.size());
  double lq = joint_log_prob(joint, xn, yn);
  double lpx = marginal_x_log_prob(joint, xn);
  double lpy = marginal_y_log_prob(joint, yn);
  if (lpy == kNegInf)
    throw DomainError("information density undefined: P_Y(y^n) = 0");
  if (lpx == kNegInf)
    throw DomainError("information density undefined: P_X(x^n) = 0");
  return (lq - lpx - lpy) / n;
}

double entropy_density(const JointSourceModel& joint, std::span<const int> xn,
                       std::span<const int> yn) {
  const int n = static_cast<int>(xn.size());
  double lq = joint_log_prob(joint, xn, yn);
  double lpy = marginal_y_log_prob(joint, yn);
  if (lpy == kNegInf)
    throw DomainError("entropy density undefined: P_Y(y^n) = 0");
  return -(lq - lpy) / n;
}

// --------------------------------------------------------- exact spectra

namespace {

SpectrumCdf exact_spectrum_enumerated_joint(const JointSourceModel& joint,
                                            int n, DensityKind kind,
                                            int workers) {
  check_enum_budget(static_cast<std::uint64_t>(joint.x.size) *
                        static_cast<std::uint64_t>(joint.y.size),
                    n, "exact spectrum");
  PrefixEvaluator jxy(joint, PrefixEvaluator::Role::JointXY, n);
  PrefixEvaluator my(joint, PrefixEvaluator::Role::MarginalY, n);
  PrefixEvaluator mx(joint, PrefixEvaluator::Role::MarginalX, n);
  const bool info = kind == DensityKind::Information;
  const std::uint64_t ytotal =
      pow_u64(static_cast<std::uint64_t>(joint.y.size), n);
  const std::uint64_t nblocks = (ytotal + kYBlock - 1) / kYBlock;
  std::vector<RawAtoms> block_atoms(nblocks);
  enumerate_pairs(
      nullptr, nullptr, &jxy, &my, info ? &mx : nullptr, n, joint.x.size,
      joint.y.size, workers, [&](std::size_t, std::uint64_t, double) {},
      [&](std::size_t blk, std::uint64_t, std::uint64_t, double density,
          double log_mass, double) {
        if (log_mass == kNegInf) return;
        block_atoms[blk].push_back({density, std::exp(log_mass)});
      });
  RawAtoms atoms;
  for (auto& b : block_atoms) {
    sort_and_merge(b);
    atoms.insert(atoms.end(), b.begin(), b.end());
  }
  sort_and_merge(atoms);
  SpectrumCdf cdf;
  cdf.n = n;
  cdf.kind = kind;
  cdf.mode = SpectrumMode::Exact;
  cdf.atoms = std::move(atoms);
  return cdf;
}

}  // namespace

SpectrumCdf exact_spectrum(const SourceModel& src, const ChannelModel& chan,
                           int n, int workers) {
  if (src.alphabet.size != chan.in.size)
    throw InputError("source and channel input alphabets differ");
  if (n < 1) throw InputError("blocklength must be >= 1");
  if (all_memoryless(src) && all_memoryless(chan)) {
    RawAtoms acc{{0.0, 1.0}};
    for (int p = 0; p < n; ++p) {
      const auto& d = src.dists[saturating_index(src.dists.size(), p)];
      const auto& w = chan.matrices[saturating_index(chan.matrices.size(), p)];
      acc = convolve(acc, position_atoms_pair(d, w, src.alphabet.size,
                                              chan.out.size));
    }
    return finish_exact(std::move(acc), n, DensityKind::Information);
  }
  // general pair: enumerate with the channel's own kernel
  check_enum_budget(static_cast<std::uint64_t>(src.alphabet.size) *
                        static_cast<std::uint64_t>(chan.out.size),
                    n, "exact spectrum");
  JointSourceModel joint = induce_joint(src, chan);
  PrefixEvaluator sx(src, n);
  PrefixEvaluator cxy(chan, n);
  PrefixEvaluator my(joint, PrefixEvaluator::Role::MarginalY, n);
  const std::uint64_t ytotal =
      pow_u64(static_cast<std::uint64_t>(chan.out.size), n);
  const std::uint64_t nblocks = (ytotal + kYBlock - 1) / kYBlock;
  std::vector<RawAtoms> block_atoms(nblocks);
  enumerate_pairs(
      &sx, &cxy, nullptr, &my, nullptr, n, src.alphabet.size, chan.out.size,
      workers, [&](std::size_t, std::uint64_t, double) {},
      [&](std::size_t blk, std::uint64_t, std::uint64_t, double density,
          double log_mass, double) {
        if (log_mass == kNegInf) return;
        block_atoms[blk].push_back({density, std::exp(log_mass)});
      });
  RawAtoms atoms;
  for (auto& b : block_atoms) {
    sort_and_merge(b);
    atoms.insert(atoms.end(), b.begin(), b.end());
  }
  sort_and_merge(atoms);
  SpectrumCdf cdf;
  cdf.n = n;
  cdf.kind = DensityKind::Information;
  cdf.mode = SpectrumMode::Exact;
  cdf.atoms = std::move(atoms);
  return cdf;
}

SpectrumCdf exact_spectrum(const JointSourceModel& joint, int n,
                           DensityKind kind, int workers) {
  if (n < 1) throw InputError("blocklength must be >= 1");
  if (joint.family == Family::Memoryless) {
    RawAtoms acc{{0.0, 1.0}};
    for (int p = 0; p < n; ++p) {
      const auto& t = joint.tables[saturating_index(joint.tables.size(), p)];
      acc = convolve(acc,
                     position_atoms_joint(t, joint.x.size, joint.y.size, kind));
    }
    return finish_exact(std::move(acc), n, kind);
  }
  return exact_spectrum_enumerated_joint(joint, n, kind, workers);
}

// ------------------------------------------------------------- tail probes

TailProbe epsilon_at(const SpectrumCdf& cdf, double t, Tail tail) {
  if (cdf.kind == DensityKind::Information && tail != Tail::BelowStrict)
    throw InputError("information spectra use the strict lower tail");
  if (cdf.kind == DensityKind::Entropy && tail != Tail::AboveStrict)
    throw InputError("entropy spectra use the strict upper tail");
  TailProbe probe;
  probe.threshold = t;
  probe.mode = cdf.mode;
  if (cdf.mode == SpectrumMode::Exact) {
    double eps = 0.0;
    for (const auto& a : cdf.atoms) {
      if (tail == Tail::BelowStrict ? a.value < t : a.value > t)
        eps += a.mass;
    }
    // accumulation rounding can push a full-mass tail past 1
    probe.epsilon = std::clamp(eps, 0.0, 1.0);
    return probe;
  }
  std::size_t hit = 0;
  for (double v : cdf.samples)
    if (tail == Tail::BelowStrict ? v < t : v > t) ++hit;
  probe.epsilon = cdf.samples.empty()
                      ? 0.0
                      : static_cast<double>(hit) /
                            static_cast<double>(cdf.samples.size());
  probe.ci_halfwidth = hoeffding99_halfwidth(cdf.samples.size());
  return probe;
}

// ------------------------------------------------------------- Monte Carlo

namespace {

constexpr std::uint64_t kTagSpectrumSample = 0x5bec;

template <class DrawAndScore>
SpectrumCdf mc_run(int n, DensityKind kind, std::size_t samples,
                   std::uint64_t seed, int workers, DrawAndScore&& draw) {
  if (samples < 1) throw InputError("need at least one sample");
  SpectrumCdf cdf;
  cdf.n = n;
  cdf.kind = kind;
  cdf.mode = SpectrumMode::MonteCarlo;
  cdf.seed = seed;
  cdf.sample_count = samples;
  cdf.samples.resize(samples);
  const std::uint64_t nblocks = (samples + kSampleBlock - 1) / kSampleBlock;
  parallel_blocks(nblocks, workers, [&](std::size_t blk) {
    std::vector<int> xn(n), yn(n);
    const std::size_t begin = blk * kSampleBlock;
    const std::size_t end =
        std::min<std::size_t>(samples, begin + kSampleBlock);
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = Rng::stream(seed, kTagSpectrumSample, i);
      cdf.samples[i] = draw(rng, xn, yn);
    }
  });
  return cdf;
}

double eval_path(const PrefixEvaluator& ev, std::span<const int> xn,
                 std::span<const int> yn) {
  std::vector<double> a(ev.width()), b(ev.width());
  ev.init(a.data());
  double* in = a.data();
  double* out = b.data();
  const int n = ev.length();
  for (int p = 0; p < n; ++p) {
    int x = xn.empty() ? -1 : xn[p];
    int y = yn.empty() ? -1 : yn[p];
    int px = p > 0 && !xn.empty() ? xn[p - 1] : -1;
    int py = p > 0 && !yn.empty() ? yn[p - 1] : -1;
    ev.step(in, out, p, px, py, x, y);
    std::swap(in, out);
  }
  return ev.value(in);
}

}  // namespace

SpectrumCdf monte_carlo_spectrum(const SourceModel& src,
                                 const ChannelModel& chan, int n,
                                 std::size_t samples, std::uint64_t seed,
                                 int workers) {
  if (src.alphabet.size != chan.in.size)
    throw InputError("source and channel input alphabets differ");
  if (n < 1) throw InputError("blocklength must be >= 1");
  JointSourceModel joint = induce_joint(src, chan);
  PrefixEvaluator cxy(chan, n);
  PrefixEvaluator my(joint, PrefixEvaluator::Role::MarginalY, n);
  return mc_run(n, DensityKind::Information, samples, seed, workers,
                [&](Rng& rng, std::vector<int>& xn, std::vector<int>& yn) {
                  sample_source(src, n, rng, xn);
                  sample_channel(chan, xn, rng, yn);
                  double lw = eval_path(cxy, xn, yn);
                  double lpy = eval_path(my, {}, yn);
                  return (lw - lpy) / n;
                });
}

SpectrumCdf monte_carlo_spectrum(const JointSourceModel& joint, int n,
                                 DensityKind kind, std::size_t samples,
                                 std::uint64_t seed, int workers) {
  if (n < 1) throw InputError("blocklength must be >= 1");
  PrefixEvaluator jxy(joint, PrefixEvaluator::Role::JointXY, n);
  PrefixEvaluator my(joint, PrefixEvaluator::Role::MarginalY, n);
  PrefixEvaluator mx(joint, PrefixEvaluator::Role::MarginalX, n);
  const bool info = kind == DensityKind::Information;
  return mc_run(n, kind, samples, seed, workers,
                [&](Rng& rng, std::vector<int>& xn, std::vector<int>& yn) {
                  sample_joint(joint, n, rng, xn, yn);
                  double lq = eval_path(jxy, xn, yn);
                  double lpy = eval_path(my, {}, yn);
                  if (info) {
                    double lpx = eval_path(mx, xn, {});
                    return (lq - lpx - lpy) / n;
                  }
                  return -(lq - lpy) / n;
                });
}

// ---------------------------------------------------------- proof sets

namespace {

struct ProofAccum {
  // per y-rank: conditional mass outside A, and P_Y(y)
  std::vector<double> outside_mass;  // joint mass of A(y)^c
  std::vector<double> py_mass;
};

template <class DensityGood>
ProofSetReport proof_set_run(const PrefixEvaluator* mass_src,
                             const PrefixEvaluator* mass_chan,
                             const PrefixEvaluator* mass_joint,
                             const PrefixEvaluator* marg_y,
                             const PrefixEvaluator* marg_x, int n, int nx,
                             int ny, int workers, DensityGood&& good) {
  const std::uint64_t ytotal = pow_u64(static_cast<std::uint64_t>(ny), n);
  ProofAccum acc;
  acc.outside_mass.assign(ytotal, 0.0);
  acc.py_mass.assign(ytotal, 0.0);
  enumerate_pairs(
      mass_src, mass_chan, mass_joint, marg_y, marg_x, n, nx, ny, workers,
      [&](std::size_t, std::uint64_t yrank, double log_py) {
        acc.py_mass[yrank] = std::exp(log_py);
      },
      [&](std::size_t, std::uint64_t yrank, std::uint64_t, double density,
          double log_mass, double) {
        if (log_mass == kNegInf) return;
        if (!good(density)) acc.outside_mass[yrank] += std::exp(log_mass);
      });
  ProofSetReport rep;
  double eps = 0.0;
  for (double v : acc.outside_mass) eps += v;
  rep.epsilon = eps;
  rep.bound_sqrt_epsilon = std::sqrt(eps);
  if (eps == 0.0) {
    // A carries all conditional mass; B^c is empty by convention
    rep.mass_b_complement = 0.0;
    rep.holds = true;
    return rep;
  }
  double bc = 0.0;
  for (std::uint64_t yr = 0; yr < ytotal; ++yr) {
    if (acc.py_mass[yr] <= 0.0) continue;
    double cond = acc.outside_mass[yr] / acc.py_mass[yr];
    if (!(cond < rep.bound_sqrt_epsilon)) bc += acc.py_mass[yr];
  }
  rep.mass_b_complement = bc;
  rep.holds = bc <= rep.bound_sqrt_epsilon + 1e-12;
  return rep;
}

}  // namespace

ProofSetReport proof_set_diagnostic(const SourceModel& src,
                                    const ChannelModel& chan, int n, double t,
                                    int workers) {
  if (src.alphabet.size != chan.in.size)
    throw InputError("source and channel input alphabets differ");
  check_enum_budget(static_cast<std::uint64_t>(src.alphabet.size) *
                        static_cast<std::uint64_t>(chan.out.size),
                    n, "proof-set diagnostic");
  JointSourceModel joint = induce_joint(src, chan);
  PrefixEvaluator sx(src, n);
  PrefixEvaluator cxy(chan, n);
  PrefixEvaluator my(joint, PrefixEvaluator::Role::MarginalY, n);
  // A(y, t) = { x : density >= t }
  return proof_set_run(&sx, &cxy, nullptr, &my, nullptr, n, src.alphabet.size,
                       chan.out.size, workers,
                       [t](double d) { return d >= t; });
}

ProofSetReport proof_set_diagnostic(const JointSourceModel& joint, int n,
                                    double t, DensityKind kind, int workers) {
  check_enum_budget(static_cast<std::uint64_t>(joint.x.size) *
                        static_cast<std::uint64_t>(joint.y.size),
                    n, "proof-set diagnostic");
  PrefixEvaluator jxy(joint, PrefixEvaluator::Role::JointXY, n);
  PrefixEvaluator my(joint, PrefixEvaluator::Role::MarginalY, n);
  if (kind == DensityKind::Information) {
    PrefixEvaluator mx(joint, PrefixEvaluator::Role::MarginalX, n);
    return proof_set_run(nullptr, nullptr, &jxy, &my, &mx, n, joint.x.size,
                         joint.y.size, workers,
                         [t](double d) { return d >= t; });
  }
  // source kind: A(y, t) = { x : density <= t }
  return proof_set_run(nullptr, nullptr, &jxy, &my, nullptr, n, joint.x.size,
                       joint.y.size, workers,
                       [t](double d) { return d <= t; });
}

}  // namespace infospec
