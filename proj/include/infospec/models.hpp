#ifndef INFOSPEC_MODELS_HPP
#define INFOSPEC_MODELS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "infospec/common.hpp"
#include "infospec/rng.hpp"

namespace infospec {

struct Alphabet {
  int size = 0;
};

enum class Family { Memoryless, Markov, Mixture };

// Finite-alphabet process families. "Memoryless" is time varying: one
// distribution per position, positions past the end of the list reuse the
// last entry (a single entry is the stationary case). Mixtures are finite
// with positive weights summing to one; components must not be mixtures
// themselves. All probabilities are stored in linear space; evaluation
// happens in the log domain.
struct SourceModel {
  Family family = Family::Memoryless;
  Alphabet alphabet;
  std::vector<std::vector<double>> dists;       // memoryless, per position
  std::vector<double> initial;                  // markov
  std::vector<std::vector<double>> transition;  // markov, [from][to]
  std::vector<double> weights;                  // mixture
  std::vector<SourceModel> components;          // mixture
};

// Channels are memoryless-time-varying or mixtures thereof.
struct ChannelModel {
  Family family = Family::Memoryless;
  Alphabet in, out;
  // per-position |in| x |out| stochastic matrices, row-major W[x*|out| + y]
  std::vector<std::vector<double>> matrices;
  std::vector<double> weights;
  std::vector<ChannelModel> components;
};

struct JointSourceModel {
  Family family = Family::Memoryless;
  Alphabet x, y;
  // memoryless: per-position |x|*|y| joint tables, row-major P[xi*|y| + yi]
  std::vector<std::vector<double>> tables;
  // markov over pair states, pair rank = xi*|y| + yi
  std::vector<double> initial;
  std::vector<std::vector<double>> transition;  // [from pair][to pair]
  std::vector<double> weights;
  std::vector<JointSourceModel> components;
};

struct Violation {
  std::string where;
  double residual = 0.0;
};

// Diagnostic check of the structural invariants (row sums, weight sums,
// shapes) at tolerance 1e-12. Returns one entry per problem; never throws.
std::vector<Violation> validate_model(const SourceModel& m);
std::vector<Violation> validate_model(const ChannelModel& m);
std::vector<Violation> validate_model(const JointSourceModel& m);

// Sequence log-probabilities in nats; -inf for zero probability.
double source_log_prob(const SourceModel&, std::span<const int> xn);
double channel_log_prob(const ChannelModel&, std::span<const int> xn,
                        std::span<const int> yn);
double joint_log_prob(const JointSourceModel&, std::span<const int> xn,
                      std::span<const int> yn);
double marginal_y_log_prob(const JointSourceModel&, std::span<const int> yn);
double marginal_x_log_prob(const JointSourceModel&, std::span<const int> xn);

// P_{X^nY^n} = P_{X^n} * W^n. memoryless x memoryless composes to memoryless;
// anything involving a mixture composes to a mixture of induced components.
// Markov inputs are not composable here.
JointSourceModel induce_joint(const SourceModel&, const ChannelModel&);

// Closed-form limit rates for families that have them (stationary memoryless
// and finite mixtures thereof: min mutual information / max conditional
// entropy over components); absent otherwise.
struct ModelReference {
  std::optional<double> inf_mutual_info;
  std::optional<double> sup_cond_entropy;
};
ModelReference reference_rates(const JointSourceModel&);
ModelReference reference_rates(const SourceModel&, const ChannelModel&);

// Single-letter helpers on a row-major nx*ny joint table (nats).
double single_letter_mutual_info(std::span<const double> q, int nx, int ny);
double single_letter_cond_entropy(std::span<const double> q, int nx, int ny);

// --- sampling ---

void sample_source(const SourceModel&, int n, Rng&, std::span<int> xn);
void sample_channel(const ChannelModel&, std::span<const int> xn, Rng&,
                    std::span<int> yn);
void sample_joint(const JointSourceModel&, int n, Rng&, std::span<int> xn,
                  std::span<int> yn);

// --- sequence ranks ---

inline std::uint64_t pow_u64(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

inline std::uint64_t sequence_rank(std::span<const int> s, int alphabet) {
  std::uint64_t r = 0;
  for (int v : s)
    r = r * static_cast<std::uint64_t>(alphabet) + static_cast<std::uint64_t>(v);
  return r;
}

inline void sequence_unrank(std::uint64_t rank, int alphabet,
                            std::span<int> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<int>(rank % static_cast<std::uint64_t>(alphabet));
    rank /= static_cast<std::uint64_t>(alphabet);
  }
}

// Throws CapacityError when base^n exceeds kEnumBudget.
void check_enum_budget(std::uint64_t base, int n, const char* what);

// --- prefix evaluation ---

// Log-probability of sequence prefixes, advanced one position at a time.
// States are caller-owned buffers of width() doubles, so enumeration loops
// can keep one state per depth and revisit prefixes cheaply. Instances are
// immutable after construction and safe to share across threads.
class PrefixEvaluator {
 public:
  enum class Role { SourceX, ChannelXY, JointXY, MarginalY, MarginalX };

  PrefixEvaluator(const SourceModel&, int n);   // Role::SourceX
  PrefixEvaluator(const ChannelModel&, int n);  // Role::ChannelXY
  PrefixEvaluator(const JointSourceModel&, Role, int n);

  int width() const { return width_; }
  int length() const { return n_; }
  void init(double* state) const;
  // Extend the prefix of length pos by (x, y). prev_x / prev_y are the
  // symbols at pos-1 (ignored at pos == 0); roles that ignore one side accept
  // any value there.
  void step(const double* in, double* out, int pos, int prev_x, int prev_y,
            int x, int y) const;
  double value(const double* state) const;

 private:
  struct Unit {
    Family family = Family::Memoryless;
    Role role = Role::SourceX;
    double log_weight = 0.0;
    int offset = 0, width = 1;
    int nx = 0, ny = 0;
    std::vector<int> pos_index;             // length n
    std::vector<std::vector<double>> tabs;  // per-position log tables
    std::vector<double> log_initial;        // markov
    std::vector<std::vector<double>> log_trans;
  };
  void add_unit(const SourceModel&, double log_w, int n);
  void add_unit(const ChannelModel&, double log_w, int n);
  void add_unit(const JointSourceModel&, Role, double log_w, int n);

  std::vector<Unit> units_;
  int width_ = 0;
  int n_ = 0;
};

// Iterates all sequences of length n over an alphabet in rank order
// (rank = s[0]*A^(n-1) + ... + s[n-1]), keeping evaluator states per depth.
// Side::X walks x with an optional fixed y sequence; Side::Y walks y.
class SequenceWalker {
 public:
  enum class Side { X, Y };

  SequenceWalker(int n, int alphabet, Side side,
                 std::vector<const PrefixEvaluator*> evals)
      : n_(n), a_(alphabet), side_(side), evals_(std::move(evals)) {
    seq_.resize(n_);
    for (const auto* e : evals_) {
      eval_off_.push_back(stride_);
      stride_ += e->width();
    }
    if (stride_ == 0) stride_ = 1;
    states_.resize(static_cast<std::size_t>(n_ + 1) * stride_);
    vals_.resize(evals_.size());
  }

  void set_fixed_other(std::span<const int> other) {
    other_.assign(other.begin(), other.end());
  }

  // leaf(rank, seq, values): values holds one finished log-probability per
  // attached evaluator.
  template <class Leaf>
  void run(std::uint64_t begin, std::uint64_t end, Leaf&& leaf) {
    if (begin >= end) return;
    sequence_unrank(begin, a_, seq_);
    for (std::size_t e = 0; e < evals_.size(); ++e)
      evals_[e]->init(states_.data() + eval_off_[e]);
    int dirty = 0;
    for (std::uint64_t rank = begin;; ++rank) {
      for (int d = dirty; d < n_; ++d) {
        const double* in = states_.data() + static_cast<std::size_t>(d) * stride_;
        double* out = states_.data() + static_cast<std::size_t>(d + 1) * stride_;
        int x, y, px, py;
        if (side_ == Side::X) {
          x = seq_[d];
          px = d > 0 ? seq_[d - 1] : -1;
          y = other_.empty() ? -1 : other_[d];
          py = (d > 0 && !other_.empty()) ? other_[d - 1] : -1;
        } else {
          y = seq_[d];
          py = d > 0 ? seq_[d - 1] : -1;
          x = -1;
          px = -1;
        }
        for (std::size_t e = 0; e < evals_.size(); ++e)
          evals_[e]->step(in + eval_off_[e], out + eval_off_[e], d, px, py, x,
                          y);
      }
      dirty = n_;
      const double* top =
          states_.data() + static_cast<std::size_t>(n_) * stride_;
      for (std::size_t e = 0; e < evals_.size(); ++e)
        vals_[e] = evals_[e]->value(top + eval_off_[e]);
      leaf(rank, std::span<const int>(seq_), std::span<const double>(vals_));
      if (rank + 1 == end) return;
      int d = n_ - 1;
      while (seq_[d] == a_ - 1) {
        seq_[d] = 0;
        --d;
      }
      ++seq_[d];
      dirty = d;
    }
  }

 private:
  int n_, a_;
  Side side_;
  std::vector<const PrefixEvaluator*> evals_;
  std::vector<int> seq_, other_;
  std::vector<double> states_, vals_;
  std::vector<int> eval_off_;
  int stride_ = 0;
};

// --- model files ---

using AnyModel = std::variant<SourceModel, JointSourceModel, ChannelModel>;

// Loads a JSON model description. Probability rows are validated at tolerance
// 1e-9 and renormalized; larger residuals, negative entries, or shape
// problems raise InputError.
AnyModel load_model_file(const std::string& path);
AnyModel parse_model_json(const std::string& text);

}  // namespace infospec

#endif  // INFOSPEC_MODELS_HPP
