#include "infospec/codingsim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "infospec/parallel.hpp"

namespace infospec {

namespace {

constexpr std::uint64_t kTagCodebook = 0xC0DE;
constexpr std::uint64_t kTagTransmission = 0x7247;
constexpr std::uint64_t kTagSwTrial = 0x5313;
constexpr std::uint64_t kSwBlock = 1024;

std::uint64_t code_size(int n, double rate, const char* what) {
  double raw = std::exp(n * rate);
  if (!(raw < static_cast<double>(std::uint64_t{1} << 40)))
    throw CapacityError(std::string(what) + ": exp(nR) too large");
  return static_cast<std::uint64_t>(std::ceil(raw));
}

double eval_path(const PrefixEvaluator& ev, std::span<const int> xn,
                 std::span<const int> yn, std::vector<double>& a,
                 std::vector<double>& b) {
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

std::uint64_t bin_of_sequence(std::uint64_t bin_seed,
                              std::uint64_t sequence_rank,
                              std::uint64_t bin_count) {
  return mix64(bin_seed ^ sequence_rank) % bin_count;
}

SimResult simulate_channel_code(const ChannelSimConfig& cfg, int workers) {
  if (cfg.n < 1) throw InputError("blocklength must be >= 1");
  if (cfg.codebooks < 1 || cfg.transmissions < 1)
    throw InputError("need at least one codebook and one transmission");
  if (cfg.input.alphabet.size != cfg.channel.in.size)
    throw InputError("source and channel input alphabets differ");
  std::uint64_t m = std::max<std::uint64_t>(2, code_size(cfg.n, cfg.rate.value,
                                                         "channel code"));
  if (m > (std::uint64_t{1} << 22))
    throw CapacityError("channel code: too many codewords to scan");
  const std::size_t M = static_cast<std::size_t>(m);
  const int n = cfg.n;

  ExponentPoint ex =
      channel_exponent(cfg.input, cfg.channel, n, cfg.rate, 33, workers);
  const double bound = std::exp(-static_cast<double>(n) * ex.exponent);

  PrefixEvaluator chan_eval(cfg.channel, n);
  std::vector<std::uint64_t> errors(cfg.codebooks, 0);
  parallel_blocks(cfg.codebooks, workers, [&](std::size_t b) {
    std::vector<int> codebook(M * n);
    Rng cb_rng = Rng::stream(cfg.seed, kTagCodebook, b);
    for (std::size_t j = 0; j < M; ++j)
      sample_source(cfg.input, n, cb_rng,
                    std::span<int>(codebook.data() + j * n, n));
    std::vector<int> yn(n);
    std::vector<double> buf_a(chan_eval.width()), buf_b(chan_eval.width());
    std::uint64_t errs = 0;
    for (std::size_t tx = 0; tx < cfg.transmissions; ++tx) {
      Rng rng = Rng::stream(cfg.seed, kTagTransmission,
                            b * cfg.transmissions + tx);
      std::size_t msg = static_cast<std::size_t>(rng.next_below(M));
      std::span<const int> sent(codebook.data() + msg * n, n);
      sample_channel(cfg.channel, sent, rng, yn);
      double best = kNegInf;
      std::size_t chosen = 0, ties = 0;
      for (std::size_t j = 0; j < M; ++j) {
        std::span<const int> cw(codebook.data() + j * n, n);
        double score = eval_path(chan_eval, cw, yn, buf_a, buf_b);
        if (score > best) {
          best = score;
          chosen = j;
          ties = 1;
        } else if (score == best && best != kNegInf) {
          ++ties;
          if (rng.next_below(ties) == 0) chosen = j;
        }
      }
      if (chosen != msg) ++errs;
    }
    errors[b] = errs;
  });

  std::uint64_t total = 0;
  for (auto e : errors) total += e;
  SimResult res;
  res.trials = cfg.codebooks * cfg.transmissions;
  res.empirical_error =
      static_cast<double>(total) / static_cast<double>(res.trials);
  res.ci_halfwidth = hoeffding99_halfwidth(res.trials);
  res.analytic_bound = bound;
  res.bound_satisfied_within_ci =
      res.empirical_error <= bound + res.ci_halfwidth;
  return res;
}

SimResult simulate_slepian_wolf(const JointSourceModel& joint, int n, Rate R,
                                std::uint64_t bin_seed, std::size_t trials,
                                std::uint64_t seed, int workers) {
  if (n < 1) throw InputError("blocklength must be >= 1");
  if (trials < 1) throw InputError("need at least one trial");
  check_enum_budget(static_cast<std::uint64_t>(joint.x.size), n,
                    "Slepian-Wolf decoding");
  const std::uint64_t bins = code_size(n, R.value, "Slepian-Wolf binning");
  const std::uint64_t xtotal = pow_u64(joint.x.size, n);

  ExponentPoint ex = source_exponent(joint, n, R, 33, workers);
  const double reference = std::exp(-static_cast<double>(n) * ex.exponent);

  PrefixEvaluator jxy(joint, PrefixEvaluator::Role::JointXY, n);
  const std::uint64_t nblocks = (trials + kSwBlock - 1) / kSwBlock;
  std::vector<std::uint64_t> errors(nblocks, 0);
  parallel_blocks(nblocks, workers, [&](std::size_t blk) {
    std::vector<int> xn(n), yn(n);
    SequenceWalker xwalk(n, joint.x.size, SequenceWalker::Side::X, {&jxy});
    std::uint64_t errs = 0;
    const std::size_t begin = blk * kSwBlock;
    const std::size_t end = std::min<std::size_t>(trials, begin + kSwBlock);
    for (std::size_t trial = begin; trial < end; ++trial) {
      Rng rng = Rng::stream(seed, kTagSwTrial, trial);
      sample_joint(joint, n, rng, xn, yn);
      const std::uint64_t true_rank = sequence_rank(xn, joint.x.size);
      const std::uint64_t true_bin =
          bin_of_sequence(bin_seed, true_rank, bins);
      xwalk.set_fixed_other(yn);
      double best = kNegInf;
      std::uint64_t chosen = xtotal, ties = 0;
      xwalk.run(0, xtotal, [&](std::uint64_t rank, std::span<const int>,
                               std::span<const double> vals) {
        if (bin_of_sequence(bin_seed, rank, bins) != true_bin) return;
        double score = vals[0];  // proportional to P(x|y) at fixed y
        if (score == kNegInf) return;  // zero posterior, never the argmax
        if (score > best) {
          best = score;
          chosen = rank;
          ties = 1;
        } else if (score == best) {
          ++ties;
          if (rng.next_below(ties) == 0) chosen = rank;
        }
      });
      if (chosen != true_rank) ++errs;
    }
    errors[blk] = errs;
  });

  std::uint64_t total = 0;
  for (auto e : errors) total += e;
  SimResult res;
  res.trials = trials;
  res.empirical_error =
      static_cast<double>(total) / static_cast<double>(trials);
  res.ci_halfwidth = hoeffding99_halfwidth(trials);
  res.analytic_bound = reference;
  res.bound_satisfied_within_ci =
      res.empirical_error <= reference + res.ci_halfwidth;
  return res;
}

}  // namespace infospec
