// Independent long-double oracles used to freeze expected values. These walk
// the raw model tables directly (no shared code with the library's log-domain
// evaluators) so that agreement is a genuine cross-check.
#ifndef INFOSPEC_TESTS_ORACLE_HPP
#define INFOSPEC_TESTS_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "infospec/models.hpp"

namespace oracle {

using infospec::ChannelModel;
using infospec::Family;
using infospec::JointSourceModel;
using infospec::SourceModel;

inline std::vector<std::vector<int>> all_sequences(int alphabet, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  for (;;) {
    out.push_back(cur);
    int d = n - 1;
    while (d >= 0 && cur[d] == alphabet - 1) cur[d--] = 0;
    if (d < 0) break;
    ++cur[d];
  }
  return out;
}

inline long double src_prob(const SourceModel& m, const std::vector<int>& x) {
  switch (m.family) {
    case Family::Memoryless: {
      long double p = 1.0L;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& d =
            m.dists[std::min(i, m.dists.size() - 1)];
        p *= static_cast<long double>(d[x[i]]);
      }
      return p;
    }
    case Family::Markov: {
      long double p = m.initial[x[0]];
      for (std::size_t i = 1; i < x.size(); ++i)
        p *= static_cast<long double>(m.transition[x[i - 1]][x[i]]);
      return p;
    }
    case Family::Mixture: {
      long double p = 0.0L;
      for (std::size_t k = 0; k < m.components.size(); ++k)
        p += static_cast<long double>(m.weights[k]) *
             src_prob(m.components[k], x);
      return p;
    }
  }
  return 0.0L;
}

inline long double chan_prob(const ChannelModel& m, const std::vector<int>& x,
                             const std::vector<int>& y) {
  switch (m.family) {
    case Family::Memoryless: {
      long double p = 1.0L;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& mat = m.matrices[std::min(i, m.matrices.size() - 1)];
        p *= static_cast<long double>(mat[x[i] * m.out.size + y[i]]);
      }
      return p;
    }
    case Family::Mixture: {
      long double p = 0.0L;
      for (std::size_t k = 0; k < m.components.size(); ++k)
        p += static_cast<long double>(m.weights[k]) *
             chan_prob(m.components[k], x, y);
      return p;
    }
    case Family::Markov:
      return 0.0L;
  }
  return 0.0L;
}

inline long double joint_prob(const JointSourceModel& m,
                              const std::vector<int>& x,
                              const std::vector<int>& y) {
  switch (m.family) {
    case Family::Memoryless: {
      long double p = 1.0L;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& t = m.tables[std::min(i, m.tables.size() - 1)];
        p *= static_cast<long double>(t[x[i] * m.y.size + y[i]]);
      }
      return p;
    }
    case Family::Markov: {
      long double p = m.initial[x[0] * m.y.size + y[0]];
      for (std::size_t i = 1; i < x.size(); ++i)
        p *= static_cast<long double>(
            m.transition[x[i - 1] * m.y.size + y[i - 1]]
                        [x[i] * m.y.size + y[i]]);
      return p;
    }
    case Family::Mixture: {
      long double p = 0.0L;
      for (std::size_t k = 0; k < m.components.size(); ++k)
        p += static_cast<long double>(m.weights[k]) *
             joint_prob(m.components[k], x, y);
      return p;
    }
  }
  return 0.0L;
}

inline long double marginal_y_prob(const JointSourceModel& m,
                                   const std::vector<int>& y) {
  long double p = 0.0L;
  for (const auto& x : all_sequences(m.x.size, static_cast<int>(y.size())))
    p += joint_prob(m, x, y);
  return p;
}

inline long double marginal_x_prob(const JointSourceModel& m,
                                   const std::vector<int>& x) {
  long double p = 0.0L;
  for (const auto& y : all_sequences(m.y.size, static_cast<int>(x.size())))
    p += joint_prob(m, x, y);
  return p;
}

// E0 by direct linear-space summation
inline long double e0_brute(const SourceModel& src, const ChannelModel& chan,
                            int n, long double rho) {
  const long double c = 1.0L / (1.0L + rho);
  long double s = 0.0L;
  for (const auto& y : all_sequences(chan.out.size, n)) {
    long double inner = 0.0L;
    for (const auto& x : all_sequences(src.alphabet.size, n)) {
      long double w = chan_prob(chan, x, y);
      if (w > 0.0L) inner += src_prob(src, x) * std::pow(w, c);
    }
    if (inner > 0.0L) s += std::pow(inner, 1.0L + rho);
  }
  return -std::log(s) / n;
}

inline long double j0_brute(const JointSourceModel& m, int n,
                            long double rho) {
  const long double c = 1.0L / (1.0L + rho);
  long double s = 0.0L;
  for (const auto& y : all_sequences(m.y.size, n)) {
    long double inner = 0.0L;
    for (const auto& x : all_sequences(m.x.size, n)) {
      long double q = joint_prob(m, x, y);
      if (q > 0.0L) inner += std::pow(q, c);
    }
    if (inner > 0.0L) s += std::pow(inner, 1.0L + rho);
  }
  return std::log(s) / n;
}

struct BruteAtom {
  long double value;
  long double mass;
};

// exact law of the per-symbol density by full enumeration; values within
// merge_tol of the running anchor are folded together
inline std::vector<BruteAtom> spectrum_brute(const JointSourceModel& m, int n,
                                             bool information,
                                             long double merge_tol = 1e-12L) {
  std::vector<BruteAtom> raw;
  auto ys = all_sequences(m.y.size, n);
  auto xs = all_sequences(m.x.size, n);
  for (const auto& y : ys) {
    long double py = marginal_y_prob(m, y);
    if (py <= 0.0L) continue;
    for (const auto& x : xs) {
      long double q = joint_prob(m, x, y);
      if (q <= 0.0L) continue;
      long double v;
      if (information) {
        long double px = marginal_x_prob(m, x);
        v = std::log(q / (px * py)) / n;
      } else {
        v = -std::log(q / py) / n;
      }
      raw.push_back({v, q});
    }
  }
  std::sort(raw.begin(), raw.end(),
            [](const BruteAtom& a, const BruteAtom& b) {
              return a.value < b.value;
            });
  std::vector<BruteAtom> out;
  for (const auto& a : raw) {
    if (!out.empty() && a.value - out.back().value <= merge_tol)
      out.back().mass += a.mass;
    else
      out.push_back(a);
  }
  return out;
}

// information-density law of a (source, channel) pair under the channel's
// own kernel
inline std::vector<BruteAtom> pair_spectrum_brute(const SourceModel& src,
                                                  const ChannelModel& chan,
                                                  int n) {
  std::vector<BruteAtom> raw;
  auto ys = all_sequences(chan.out.size, n);
  auto xs = all_sequences(src.alphabet.size, n);
  for (const auto& y : ys) {
    long double py = 0.0L;
    for (const auto& x : xs) py += src_prob(src, x) * chan_prob(chan, x, y);
    if (py <= 0.0L) continue;
    for (const auto& x : xs) {
      long double w = chan_prob(chan, x, y);
      long double mass = src_prob(src, x) * w;
      if (mass <= 0.0L) continue;
      raw.push_back({std::log(w / py) / n, mass});
    }
  }
  std::sort(raw.begin(), raw.end(),
            [](const BruteAtom& a, const BruteAtom& b) {
              return a.value < b.value;
            });
  std::vector<BruteAtom> out;
  for (const auto& a : raw) {
    if (!out.empty() && a.value - out.back().value <= 1e-12L)
      out.back().mass += a.mass;
    else
      out.push_back(a);
  }
  return out;
}

inline long double tail_brute(const std::vector<BruteAtom>& atoms,
                              long double t, bool below_strict) {
  long double e = 0.0L;
  for (const auto& a : atoms)
    if (below_strict ? a.value < t : a.value > t) e += a.mass;
  return e;
}

// (1/n) I(X^n; Y^n) by enumeration
inline long double mutual_info_brute(const JointSourceModel& m, int n) {
  long double mi = 0.0L;
  for (const auto& y : all_sequences(m.y.size, n)) {
    long double py = marginal_y_prob(m, y);
    if (py <= 0.0L) continue;
    for (const auto& x : all_sequences(m.x.size, n)) {
      long double q = joint_prob(m, x, y);
      if (q <= 0.0L) continue;
      mi += q * std::log(q / (marginal_x_prob(m, x) * py));
    }
  }
  return mi / n;
}

// (1/n) H(X^n | Y^n) by enumeration
inline long double cond_entropy_brute(const JointSourceModel& m, int n) {
  long double h = 0.0L;
  for (const auto& y : all_sequences(m.y.size, n)) {
    long double py = marginal_y_prob(m, y);
    if (py <= 0.0L) continue;
    for (const auto& x : all_sequences(m.x.size, n)) {
      long double q = joint_prob(m, x, y);
      if (q <= 0.0L) continue;
      h += q * std::log(py / q);
    }
  }
  return h / n;
}

inline long double binary_entropy(long double p) {
  if (p <= 0.0L || p >= 1.0L) return 0.0L;
  return -p * std::log(p) - (1.0L - p) * std::log(1.0L - p);
}

}  // namespace oracle

#endif
