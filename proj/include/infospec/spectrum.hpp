#ifndef INFOSPEC_SPECTRUM_HPP
#define INFOSPEC_SPECTRUM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "infospec/models.hpp"

namespace infospec {

enum class DensityKind { Information, Entropy };
enum class SpectrumMode { Exact, MonteCarlo };
enum class Tail { BelowStrict, AboveStrict };

struct SpectrumAtom {
  double value;  // nats per symbol
  double mass;
};

// Distribution of the normalized information density
// (1/n) ln W(y|x)/P_Y(y) or entropy density (1/n) ln 1/P(x|y) at
// blocklength n. Exact mode carries atoms sorted by value; Monte Carlo mode
// carries one density value per sample index.
struct SpectrumCdf {
  int n = 0;
  DensityKind kind = DensityKind::Information;
  SpectrumMode mode = SpectrumMode::Exact;
  std::vector<SpectrumAtom> atoms;
  std::vector<double> samples;
  std::uint64_t seed = 0;
  std::size_t sample_count = 0;

  double total_mass() const;
  double mean() const;
};

struct TailProbe {
  double threshold = 0.0;
  double epsilon = 0.0;
  SpectrumMode mode = SpectrumMode::Exact;
  double ci_halfwidth = 0.0;  // 99% Hoeffding, Monte Carlo only
};

// Per-sequence densities (nats/symbol). The pair forms use the channel
// directly; the joint forms use the conditional induced by the joint.
double information_density(const SourceModel&, const ChannelModel&,
                           std::span<const int> xn, std::span<const int> yn);
double information_density(const JointSourceModel&, std::span<const int> xn,
                           std::span<const int> yn);
double entropy_density(const JointSourceModel&, std::span<const int> xn,
                       std::span<const int> yn);

// Exact law of the density at blocklength n. Memoryless models convolve
// per-position densities (support merged at 1e-12); mixtures and Markov
// models enumerate all pairs within the budget, evaluating the full model's
// density under the full model's measure.
SpectrumCdf exact_spectrum(const SourceModel&, const ChannelModel&, int n,
                           int workers = 1);
SpectrumCdf exact_spectrum(const JointSourceModel&, int n, DensityKind kind,
                           int workers = 1);

// Tail probability at threshold t. Information spectra pair with
// Tail::BelowStrict (Pr{density < t}), entropy spectra with
// Tail::AboveStrict (Pr{density > t}).
TailProbe epsilon_at(const SpectrumCdf&, double t, Tail tail);

// i.i.d. draws from the model with the density evaluated per draw. Sample i
// uses its own counter-based stream of `seed`, so the result is identical
// for any worker count.
SpectrumCdf monte_carlo_spectrum(const SourceModel&, const ChannelModel&,
                                 int n, std::size_t samples,
                                 std::uint64_t seed, int workers = 1);
SpectrumCdf monte_carlo_spectrum(const JointSourceModel&, int n,
                                 DensityKind kind, std::size_t samples,
                                 std::uint64_t seed, int workers = 1);

// Exhaustive check of the proof sets behind the bounds: A(y, t) collects the
// x with density on the good side of t, B the y whose conditional mass
// outside A stays below sqrt(eps), and P_Y(B^c) <= sqrt(eps) is the claimed
// inequality. eps == 0 gives an empty B^c by convention.
struct ProofSetReport {
  double epsilon = 0.0;
  double mass_b_complement = 0.0;
  double bound_sqrt_epsilon = 0.0;
  bool holds = false;
};
ProofSetReport proof_set_diagnostic(const SourceModel&, const ChannelModel&,
                                    int n, double t, int workers = 1);
ProofSetReport proof_set_diagnostic(const JointSourceModel&, int n, double t,
                                    DensityKind kind, int workers = 1);

}  // namespace infospec

#endif  // INFOSPEC_SPECTRUM_HPP
