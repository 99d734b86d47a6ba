#include "infospec/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "infospec/kernels.hpp"
#include "json.hpp"

namespace infospec {

namespace {

constexpr double kValidateTol = 1e-12;
constexpr double kLoadTol = 1e-9;

std::vector<double> log_of(std::span<const double> p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::log(p[i]);
  return out;
}

void check_row(std::vector<Violation>& out, const std::string& where,
               std::span<const double> row, std::size_t expect_len) {
  if (row.size() != expect_len) {
    out.push_back({where + ": length " + std::to_string(row.size()) +
                       ", expected " + std::to_string(expect_len),
                   0.0});
    return;
  }
  double s = 0.0;
  for (double v : row) {
    if (v < 0.0 || !std::isfinite(v))
      out.push_back({where + ": negative or non-finite entry", v});
    s += v;
  }
  double resid = std::abs(s - 1.0);
  if (resid > kValidateTol) out.push_back({where + ": sum", resid});
}

int last_index(std::size_t len, int pos) {
  return pos < static_cast<int>(len) ? pos : static_cast<int>(len) - 1;
}

int categorical(std::span<const double> probs, Rng& rng) {
  double u = rng.next_double();
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    c += probs[i];
    if (u < c) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw InputError(msg);
}

}  // namespace

// ---------------------------------------------------------------- validate

std::vector<Violation> validate_model(const SourceModel& m) {
  std::vector<Violation> out;
  const std::size_t k = static_cast<std::size_t>(m.alphabet.size);
  if (m.alphabet.size < 1) out.push_back({"alphabet size", 0.0});
  switch (m.family) {
    case Family::Memoryless:
      if (m.dists.empty()) out.push_back({"no distributions", 0.0});
      for (std::size_t i = 0; i < m.dists.size(); ++i)
        check_row(out, "source position " + std::to_string(i), m.dists[i], k);
      break;
    case Family::Markov:
      check_row(out, "source initial", m.initial, k);
      if (m.transition.size() != k)
        out.push_back({"source transition row count", 0.0});
      for (std::size_t i = 0; i < m.transition.size(); ++i)
        check_row(out, "source transition row " + std::to_string(i),
                  m.transition[i], k);
      break;
    case Family::Mixture: {
      double s = 0.0;
      for (std::size_t i = 0; i < m.weights.size(); ++i) {
        if (m.weights[i] <= 0.0)
          out.push_back({"mixture weight " + std::to_string(i), m.weights[i]});
        s += m.weights[i];
      }
      double resid = std::abs(s - 1.0);
      if (resid > kValidateTol) out.push_back({"mixture weights sum", resid});
      if (m.weights.size() != m.components.size() || m.components.empty())
        out.push_back({"mixture component/weight count", 0.0});
      for (std::size_t i = 0; i < m.components.size(); ++i) {
        if (m.components[i].family == Family::Mixture)
          out.push_back({"nested mixture component " + std::to_string(i), 0.0});
        if (m.components[i].alphabet.size != m.alphabet.size)
          out.push_back({"component alphabet " + std::to_string(i), 0.0});
        for (auto& v : validate_model(m.components[i]))
          out.push_back({"component " + std::to_string(i) + " " + v.where,
                         v.residual});
      }
      break;
    }
  }
  return out;
}

std::vector<Violation> validate_model(const ChannelModel& m) {
  std::vector<Violation> out;
  const std::size_t nx = static_cast<std::size_t>(m.in.size);
  const std::size_t ny = static_cast<std::size_t>(m.out.size);
  if (m.in.size < 1 || m.out.size < 1) out.push_back({"alphabet size", 0.0});
  switch (m.family) {
    case Family::Memoryless:
      if (m.matrices.empty()) out.push_back({"no matrices", 0.0});
      for (std::size_t p = 0; p < m.matrices.size(); ++p) {
        if (m.matrices[p].size() != nx * ny) {
          out.push_back({"channel position " + std::to_string(p) + ": shape",
                         0.0});
          continue;
        }
        for (std::size_t x = 0; x < nx; ++x)
          check_row(out,
                    "channel position " + std::to_string(p) + " row " +
                        std::to_string(x),
                    std::span<const double>(m.matrices[p]).subspan(x * ny, ny),
                    ny);
      }
      break;
    case Family::Markov:
      out.push_back({"markov channels unsupported", 0.0});
      break;
    case Family::Mixture: {
      double s = 0.0;
      for (std::size_t i = 0; i < m.weights.size(); ++i) {
        if (m.weights[i] <= 0.0)
          out.push_back({"mixture weight " + std::to_string(i), m.weights[i]});
        s += m.weights[i];
      }
      double resid = std::abs(s - 1.0);
      if (resid > kValidateTol) out.push_back({"mixture weights sum", resid});
      if (m.weights.size() != m.components.size() || m.components.empty())
        out.push_back({"mixture component/weight count", 0.0});
      for (std::size_t i = 0; i < m.components.size(); ++i) {
        if (m.components[i].family == Family::Mixture)
          out.push_back({"nested mixture component " + std::to_string(i), 0.0});
        if (m.components[i].in.size != m.in.size ||
            m.components[i].out.size != m.out.size)
          out.push_back({"component alphabets " + std::to_string(i), 0.0});
        for (auto& v : validate_model(m.components[i]))
          out.push_back({"component " + std::to_string(i) + " " + v.where,
                         v.residual});
      }
      break;
    }
  }
  return out;
}

std::vector<Violation> validate_model(const JointSourceModel& m) {
  std::vector<Violation> out;
  const std::size_t nx = static_cast<std::size_t>(m.x.size);
  const std::size_t ny = static_cast<std::size_t>(m.y.size);
  if (m.x.size < 1 || m.y.size < 1) out.push_back({"alphabet size", 0.0});
  switch (m.family) {
    case Family::Memoryless:
      if (m.tables.empty()) out.push_back({"no tables", 0.0});
      for (std::size_t p = 0; p < m.tables.size(); ++p)
        check_row(out, "joint position " + std::to_string(p), m.tables[p],
                  nx * ny);
      break;
    case Family::Markov:
      check_row(out, "joint initial", m.initial, nx * ny);
      if (m.transition.size() != nx * ny)
        out.push_back({"joint transition row count", 0.0});
      for (std::size_t i = 0; i < m.transition.size(); ++i)
        check_row(out, "joint transition row " + std::to_string(i),
                  m.transition[i], nx * ny);
      break;
    case Family::Mixture: {
      double s = 0.0;
      for (std::size_t i = 0; i < m.weights.size(); ++i) {
        if (m.weights[i] <= 0.0)
          out.push_back({"mixture weight " + std::to_string(i), m.weights[i]});
        s += m.weights[i];
      }
      double resid = std::abs(s - 1.0);
      if (resid > kValidateTol) out.push_back({"mixture weights sum", resid});
      if (m.weights.size() != m.components.size() || m.components.empty())
        out.push_back({"mixture component/weight count", 0.0});
      for (std::size_t i = 0; i < m.components.size(); ++i) {
        if (m.components[i].family == Family::Mixture)
          out.push_back({"nested mixture component " + std::to_string(i), 0.0});
        if (m.components[i].x.size != m.x.size ||
            m.components[i].y.size != m.y.size)
          out.push_back({"component alphabets " + std::to_string(i), 0.0});
        for (auto& v : validate_model(m.components[i]))
          out.push_back({"component " + std::to_string(i) + " " + v.where,
                         v.residual});
      }
      break;
    }
  }
  return out;
}

// ------------------------------------------------------- prefix evaluation

void PrefixEvaluator::add_unit(const SourceModel& m, double log_w, int n) {
  Unit u;
  u.role = Role::SourceX;
  u.family = m.family;
  u.log_weight = log_w;
  u.offset = width_;
  u.width = 1;
  u.nx = m.alphabet.size;
  u.pos_index.resize(n);
  if (m.family == Family::Memoryless) {
    for (int p = 0; p < n; ++p) u.pos_index[p] = last_index(m.dists.size(), p);
    for (auto& d : m.dists) u.tabs.push_back(log_of(d));
  } else if (m.family == Family::Markov) {
    u.log_initial = log_of(m.initial);
    for (auto& r : m.transition) u.log_trans.push_back(log_of(r));
  } else {
    throw InputError("nested mixture in source model");
  }
  width_ += u.width;
  units_.push_back(std::move(u));
}

void PrefixEvaluator::add_unit(const ChannelModel& m, double log_w, int n) {
  require(m.family == Family::Memoryless, "channel family not evaluable");
  Unit u;
  u.role = Role::ChannelXY;
  u.family = m.family;
  u.log_weight = log_w;
  u.offset = width_;
  u.width = 1;
  u.nx = m.in.size;
  u.ny = m.out.size;
  u.pos_index.resize(n);
  for (int p = 0; p < n; ++p) u.pos_index[p] = last_index(m.matrices.size(), p);
  for (auto& t : m.matrices) u.tabs.push_back(log_of(t));
  width_ += u.width;
  units_.push_back(std::move(u));
}

void PrefixEvaluator::add_unit(const JointSourceModel& m, Role role,
                               double log_w, int n) {
  Unit u;
  u.role = role;
  u.family = m.family;
  u.log_weight = log_w;
  u.offset = width_;
  u.nx = m.x.size;
  u.ny = m.y.size;
  u.pos_index.resize(n);
  if (m.family == Family::Memoryless) {
    u.width = 1;
    for (int p = 0; p < n; ++p) u.pos_index[p] = last_index(m.tables.size(), p);
    for (auto& t : m.tables) {
      if (role == Role::JointXY) {
        u.tabs.push_back(log_of(t));
      } else if (role == Role::MarginalY) {
        std::vector<double> py(u.ny, 0.0);
        for (int xi = 0; xi < u.nx; ++xi)
          for (int yi = 0; yi < u.ny; ++yi) py[yi] += t[xi * u.ny + yi];
        u.tabs.push_back(log_of(py));
      } else {  // MarginalX
        std::vector<double> px(u.nx, 0.0);
        for (int xi = 0; xi < u.nx; ++xi)
          for (int yi = 0; yi < u.ny; ++yi) px[xi] += t[xi * u.ny + yi];
        u.tabs.push_back(log_of(px));
      }
    }
  } else if (m.family == Family::Markov) {
    u.width = role == Role::JointXY ? 1 : (role == Role::MarginalY ? u.nx : u.ny);
    u.log_initial = log_of(m.initial);
    for (auto& r : m.transition) u.log_trans.push_back(log_of(r));
  } else {
    throw InputError("nested mixture in joint model");
  }
  width_ += u.width;
  units_.push_back(std::move(u));
}

PrefixEvaluator::PrefixEvaluator(const SourceModel& m, int n) : n_(n) {
  require(n >= 1, "blocklength must be >= 1");
  if (m.family == Family::Mixture) {
    for (std::size_t k = 0; k < m.components.size(); ++k)
      add_unit(m.components[k], std::log(m.weights[k]), n);
  } else {
    add_unit(m, 0.0, n);
  }
}

PrefixEvaluator::PrefixEvaluator(const ChannelModel& m, int n) : n_(n) {
  require(n >= 1, "blocklength must be >= 1");
  if (m.family == Family::Mixture) {
    for (std::size_t k = 0; k < m.components.size(); ++k)
      add_unit(m.components[k], std::log(m.weights[k]), n);
  } else {
    add_unit(m, 0.0, n);
  }
}

PrefixEvaluator::PrefixEvaluator(const JointSourceModel& m, Role role, int n)
    : n_(n) {
  require(n >= 1, "blocklength must be >= 1");
  require(role == Role::JointXY || role == Role::MarginalY ||
              role == Role::MarginalX,
          "invalid role for a joint model");
  if (m.family == Family::Mixture) {
    for (std::size_t k = 0; k < m.components.size(); ++k)
      add_unit(m.components[k], role, std::log(m.weights[k]), n);
  } else {
    add_unit(m, role, 0.0, n);
  }
}

void PrefixEvaluator::init(double* state) const {
  for (int i = 0; i < width_; ++i) state[i] = 0.0;
}

void PrefixEvaluator::step(const double* in, double* out, int pos, int prev_x,
                           int prev_y, int x, int y) const {
  for (const Unit& u : units_) {
    const double* uin = in + u.offset;
    double* uout = out + u.offset;
    switch (u.role) {
      case Role::SourceX:
        if (u.family == Family::Memoryless) {
          uout[0] = uin[0] + u.tabs[u.pos_index[pos]][x];
        } else {  // markov
          uout[0] = pos == 0 ? u.log_initial[x]
                             : uin[0] + u.log_trans[prev_x][x];
        }
        break;
      case Role::ChannelXY:
        uout[0] = uin[0] + u.tabs[u.pos_index[pos]][x * u.ny + y];
        break;
      case Role::JointXY:
        if (u.family == Family::Memoryless) {
          uout[0] = uin[0] + u.tabs[u.pos_index[pos]][x * u.ny + y];
        } else {
          uout[0] = pos == 0
                        ? u.log_initial[x * u.ny + y]
                        : uin[0] + u.log_trans[prev_x * u.ny + prev_y]
                                              [x * u.ny + y];
        }
        break;
      case Role::MarginalY:
        if (u.family == Family::Memoryless) {
          uout[0] = uin[0] + u.tabs[u.pos_index[pos]][y];
        } else {
          // forward pass over the hidden x chain
          for (int xn = 0; xn < u.nx; ++xn) {
            if (pos == 0) {
              uout[xn] = u.log_initial[xn * u.ny + y];
            } else {
              double m = kNegInf;
              for (int xp = 0; xp < u.nx; ++xp) {
                double v = uin[xp] + u.log_trans[xp * u.ny + prev_y][xn * u.ny + y];
                if (v > m) m = v;
              }
              if (m == kNegInf) {
                uout[xn] = kNegInf;
              } else {
                double s = 0.0;
                for (int xp = 0; xp < u.nx; ++xp)
                  s += std::exp(uin[xp] +
                                u.log_trans[xp * u.ny + prev_y][xn * u.ny + y] -
                                m);
                uout[xn] = m + std::log(s);
              }
            }
          }
        }
        break;
      case Role::MarginalX:
        if (u.family == Family::Memoryless) {
          uout[0] = uin[0] + u.tabs[u.pos_index[pos]][x];
        } else {
          for (int yn = 0; yn < u.ny; ++yn) {
            if (pos == 0) {
              uout[yn] = u.log_initial[x * u.ny + yn];
            } else {
              double m = kNegInf;
              for (int yp = 0; yp < u.ny; ++yp) {
                double v = uin[yp] + u.log_trans[prev_x * u.ny + yp][x * u.ny + yn];
                if (v > m) m = v;
              }
              if (m == kNegInf) {
                uout[yn] = kNegInf;
              } else {
                double s = 0.0;
                for (int yp = 0; yp < u.ny; ++yp)
                  s += std::exp(uin[yp] +
                                u.log_trans[prev_x * u.ny + yp][x * u.ny + yn] -
                                m);
                uout[yn] = m + std::log(s);
              }
            }
          }
        }
        break;
    }
  }
}

double PrefixEvaluator::value(const double* state) const {
  if (units_.size() == 1 && units_[0].width == 1)
    return state[0] + units_[0].log_weight;
  double m = kNegInf;
  for (const Unit& u : units_) {
    if (u.width == 1) {
      double v = state[u.offset] + u.log_weight;
      if (v > m) m = v;
    } else {
      for (int i = 0; i < u.width; ++i) {
        double v = state[u.offset + i] + u.log_weight;
        if (v > m) m = v;
      }
    }
  }
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (const Unit& u : units_)
    for (int i = 0; i < u.width; ++i)
      s += std::exp(state[u.offset + i] + u.log_weight - m);
  return m + std::log(s);
}

// ------------------------------------------------------------ linear paths

namespace {

double walk_path(const PrefixEvaluator& ev, std::span<const int> xn,
                 std::span<const int> yn, int n) {
  std::vector<double> a(ev.width()), b(ev.width());
  ev.init(a.data());
  double* in = a.data();
  double* out = b.data();
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

void require_symbols(std::span<const int> s, int alphabet, const char* what) {
  for (int v : s)
    require(v >= 0 && v < alphabet,
            std::string(what) + ": symbol out of range");
}

}  // namespace

double source_log_prob(const SourceModel& m, std::span<const int> xn) {
  require(!xn.empty(), "empty sequence");
  require_symbols(xn, m.alphabet.size, "source");
  PrefixEvaluator ev(m, static_cast<int>(xn.size()));
  return walk_path(ev, xn, {}, static_cast<int>(xn.size()));
}

double channel_log_prob(const ChannelModel& m, std::span<const int> xn,
                        std::span<const int> yn) {
  require(!xn.empty() && xn.size() == yn.size(),
          "channel: sequence lengths must match and be >= 1");
  require_symbols(xn, m.in.size, "channel input");
  require_symbols(yn, m.out.size, "channel output");
  PrefixEvaluator ev(m, static_cast<int>(xn.size()));
  return walk_path(ev, xn, yn, static_cast<int>(xn.size()));
}

double joint_log_prob(const JointSourceModel& m, std::span<const int> xn,
                      std::span<const int> yn) {
  require(!xn.empty() && xn.size() == yn.size(),
          "joint: sequence lengths must match and be >= 1");
  require_symbols(xn, m.x.size, "joint x");
  require_symbols(yn, m.y.size, "joint y");
  PrefixEvaluator ev(m, PrefixEvaluator::Role::JointXY,
                     static_cast<int>(xn.size()));
  return walk_path(ev, xn, yn, static_cast<int>(xn.size()));
}

double marginal_y_log_prob(const JointSourceModel& m,
                           std::span<const int> yn) {
  require(!yn.empty(), "empty sequence");
  require_symbols(yn, m.y.size, "marginal y");
  PrefixEvaluator ev(m, PrefixEvaluator::Role::MarginalY,
                     static_cast<int>(yn.size()));
  return walk_path(ev, {}, yn, static_cast<int>(yn.size()));
}

double marginal_x_log_prob(const JointSourceModel& m,
                           std::span<const int> xn) {
  require(!xn.empty(), "empty sequence");
  require_symbols(xn, m.x.size, "marginal x");
  PrefixEvaluator ev(m, PrefixEvaluator::Role::MarginalX,
                     static_cast<int>(xn.size()));
  return walk_path(ev, xn, {}, static_cast<int>(xn.size()));
}

// -------------------------------------------------------------- induction

namespace {

JointSourceModel induce_simple(const SourceModel& src,
                               const ChannelModel& chan) {
  require(src.family == Family::Memoryless,
          "markov inputs are not composable with a channel");
  JointSourceModel j;
  j.family = Family::Memoryless;
  j.x = src.alphabet;
  j.y = chan.out;
  std::size_t len = std::max(src.dists.size(), chan.matrices.size());
  const int nx = src.alphabet.size, ny = chan.out.size;
  for (std::size_t p = 0; p < len; ++p) {
    const auto& d = src.dists[last_index(src.dists.size(), static_cast<int>(p))];
    const auto& w =
        chan.matrices[last_index(chan.matrices.size(), static_cast<int>(p))];
    std::vector<double> t(static_cast<std::size_t>(nx) * ny);
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) t[x * ny + y] = d[x] * w[x * ny + y];
    j.tables.push_back(std::move(t));
  }
  return j;
}

}  // namespace

JointSourceModel induce_joint(const SourceModel& src,
                              const ChannelModel& chan) {
  require(src.alphabet.size == chan.in.size,
          "source and channel input alphabets differ");
  const bool sm = src.family == Family::Mixture;
  const bool cm = chan.family == Family::Mixture;
  if (!sm && !cm) return induce_simple(src, chan);
  JointSourceModel j;
  j.family = Family::Mixture;
  j.x = src.alphabet;
  j.y = chan.out;
  auto src_parts = [&]() -> std::vector<std::pair<double, const SourceModel*>> {
    if (!sm) return {{1.0, &src}};
    std::vector<std::pair<double, const SourceModel*>> v;
    for (std::size_t i = 0; i < src.components.size(); ++i)
      v.push_back({src.weights[i], &src.components[i]});
    return v;
  }();
  auto chan_parts =
      [&]() -> std::vector<std::pair<double, const ChannelModel*>> {
    if (!cm) return {{1.0, &chan}};
    std::vector<std::pair<double, const ChannelModel*>> v;
    for (std::size_t i = 0; i < chan.components.size(); ++i)
      v.push_back({chan.weights[i], &chan.components[i]});
    return v;
  }();
  for (auto& [ws, s] : src_parts)
    for (auto& [wc, c] : chan_parts) {
      j.weights.push_back(ws * wc);
      j.components.push_back(induce_simple(*s, *c));
    }
  return j;
}

// --------------------------------------------------------- reference rates

double single_letter_mutual_info(std::span<const double> q, int nx, int ny) {
  std::vector<double> px(nx, 0.0), py(ny, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      px[x] += q[x * ny + y];
      py[y] += q[x * ny + y];
    }
  double mi = 0.0;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      double v = q[x * ny + y];
      if (v > 0.0) mi += v * std::log(v / (px[x] * py[y]));
    }
  return mi;
}

double single_letter_cond_entropy(std::span<const double> q, int nx, int ny) {
  std::vector<double> py(ny, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) py[y] += q[x * ny + y];
  double h = 0.0;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      double v = q[x * ny + y];
      if (v > 0.0) h += v * std::log(py[y] / v);
    }
  return h;
}

namespace {

bool stationary_rows(const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i] != rows[0]) return false;
  return !rows.empty();
}

// single-letter joint table when the model is stationary memoryless
std::optional<std::vector<double>> stationary_table(const JointSourceModel& m) {
  if (m.family != Family::Memoryless || !stationary_rows(m.tables))
    return std::nullopt;
  return m.tables[0];
}

}  // namespace

ModelReference reference_rates(const JointSourceModel& m) {
  ModelReference out;
  if (auto t = stationary_table(m)) {
    out.inf_mutual_info = single_letter_mutual_info(*t, m.x.size, m.y.size);
    out.sup_cond_entropy = single_letter_cond_entropy(*t, m.x.size, m.y.size);
    return out;
  }
  if (m.family == Family::Mixture) {
    double mi = kPosInf, ce = kNegInf;
    for (const auto& c : m.components) {
      auto t = stationary_table(c);
      if (!t) return out;
      mi = std::min(mi, single_letter_mutual_info(*t, c.x.size, c.y.size));
      ce = std::max(ce, single_letter_cond_entropy(*t, c.x.size, c.y.size));
    }
    out.inf_mutual_info = mi;
    out.sup_cond_entropy = ce;
  }
  return out;
}

ModelReference reference_rates(const SourceModel& src,
                               const ChannelModel& chan) {
  return reference_rates(induce_joint(src, chan));
}

// ---------------------------------------------------------------- sampling

void sample_source(const SourceModel& m, int n, Rng& rng, std::span<int> xn) {
  require(n >= 1 && xn.size() == static_cast<std::size_t>(n), "bad buffer");
  switch (m.family) {
    case Family::Memoryless:
      for (int p = 0; p < n; ++p)
        xn[p] = categorical(m.dists[last_index(m.dists.size(), p)], rng);
      break;
    case Family::Markov:
      for (int p = 0; p < n; ++p)
        xn[p] = categorical(p == 0 ? m.initial : m.transition[xn[p - 1]], rng);
      break;
    case Family::Mixture: {
      int k = categorical(m.weights, rng);
      sample_source(m.components[k], n, rng, xn);
      break;
    }
  }
}

void sample_channel(const ChannelModel& m, std::span<const int> xn, Rng& rng,
                    std::span<int> yn) {
  require(!xn.empty() && xn.size() == yn.size(), "bad buffer");
  const int n = static_cast<int>(xn.size());
  switch (m.family) {
    case Family::Memoryless: {
      const int ny = m.out.size;
      for (int p = 0; p < n; ++p) {
        const auto& mat = m.matrices[last_index(m.matrices.size(), p)];
        yn[p] = categorical(
            std::span<const double>(mat).subspan(xn[p] * ny, ny), rng);
      }
      break;
    }
    case Family::Mixture: {
      int k = categorical(m.weights, rng);
      sample_channel(m.components[k], xn, rng, yn);
      break;
    }
    case Family::Markov:
      throw InputError("markov channels unsupported");
  }
}

void sample_joint(const JointSourceModel& m, int n, Rng& rng,
                  std::span<int> xn, std::span<int> yn) {
  require(n >= 1 && xn.size() == static_cast<std::size_t>(n) &&
              yn.size() == static_cast<std::size_t>(n),
          "bad buffer");
  const int ny = m.y.size;
  switch (m.family) {
    case Family::Memoryless:
      for (int p = 0; p < n; ++p) {
        int pair = categorical(m.tables[last_index(m.tables.size(), p)], rng);
        xn[p] = pair / ny;
        yn[p] = pair % ny;
      }
      break;
    case Family::Markov:
      for (int p = 0; p < n; ++p) {
        int prev = p == 0 ? 0 : xn[p - 1] * ny + yn[p - 1];
        int pair = categorical(p == 0 ? m.initial : m.transition[prev], rng);
        xn[p] = pair / ny;
        yn[p] = pair % ny;
      }
      break;
    case Family::Mixture: {
      int k = categorical(m.weights, rng);
      sample_joint(m.components[k], n, rng, xn, yn);
      break;
    }
  }
}

// ------------------------------------------------------------------ budget

void check_enum_budget(std::uint64_t base, int n, const char* what) {
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > kEnumBudget / base)
      throw CapacityError(std::string(what) +
                          ": enumeration exceeds budget; use the Monte Carlo "
                          "route instead");
    total *= base;
  }
  if (total > kEnumBudget)
    throw CapacityError(std::string(what) +
                        ": enumeration exceeds budget; use the Monte Carlo "
                        "route instead");
}

// -------------------------------------------------------------- model files

namespace {

using nlohmann::json;

std::vector<double> load_row(const json& arr, std::size_t expect,
                             const std::string& where) {
  require(arr.is_array(), where + ": expected an array");
  require(arr.size() == expect,
          where + ": expected " + std::to_string(expect) + " entries, got " +
              std::to_string(arr.size()));
  std::vector<double> row;
  row.reserve(arr.size());
  double sum = 0.0;
  for (const auto& v : arr) {
    require(v.is_number(), where + ": non-numeric entry");
    double d = v.get<double>();
    require(d >= 0.0 && std::isfinite(d), where + ": invalid probability");
    row.push_back(d);
    sum += d;
  }
  require(std::abs(sum - 1.0) <= kLoadTol,
          where + ": probabilities sum to " + std::to_string(sum));
  for (auto& d : row) d /= sum;
  return row;
}

std::vector<double> load_weights(const json& arr, const std::string& where) {
  require(arr.is_array() && !arr.empty(), where + ": expected an array");
  std::vector<double> w;
  double sum = 0.0;
  for (const auto& v : arr) {
    require(v.is_number(), where + ": non-numeric weight");
    double d = v.get<double>();
    require(d > 0.0 && std::isfinite(d), where + ": weights must be positive");
    w.push_back(d);
    sum += d;
  }
  require(std::abs(sum - 1.0) <= kLoadTol,
          where + ": weights sum to " + std::to_string(sum));
  for (auto& d : w) d /= sum;
  return w;
}

int load_alphabet(const json& v, const std::string& where) {
  require(v.is_number_integer() && v.get<int>() >= 1,
          where + ": alphabet size must be a positive integer");
  return v.get<int>();
}

SourceModel load_source(const json& j, bool allow_mixture);
ChannelModel load_channel(const json& j, bool allow_mixture);
JointSourceModel load_joint(const json& j, bool allow_mixture);

SourceModel load_source(const json& j, bool allow_mixture) {
  SourceModel m;
  require(j.contains("alphabet"), "source: missing alphabet");
  m.alphabet.size = load_alphabet(j.at("alphabet"), "source");
  const std::string fam = j.value("family", "memoryless");
  const std::size_t k = static_cast<std::size_t>(m.alphabet.size);
  if (fam == "memoryless") {
    m.family = Family::Memoryless;
    require(j.contains("distributions"), "source: missing distributions");
    const auto& ds = j.at("distributions");
    require(ds.is_array() && !ds.empty(), "source: distributions empty");
    for (std::size_t i = 0; i < ds.size(); ++i)
      m.dists.push_back(
          load_row(ds[i], k, "source distribution " + std::to_string(i)));
  } else if (fam == "markov") {
    m.family = Family::Markov;
    require(j.contains("initial") && j.contains("transition"),
            "source: markov needs initial and transition");
    m.initial = load_row(j.at("initial"), k, "source initial");
    const auto& tr = j.at("transition");
    require(tr.is_array() && tr.size() == k, "source: transition shape");
    for (std::size_t i = 0; i < k; ++i)
      m.transition.push_back(
          load_row(tr[i], k, "source transition row " + std::to_string(i)));
  } else if (fam == "mixture") {
    require(allow_mixture, "source: nested mixtures are not allowed");
    m.family = Family::Mixture;
    require(j.contains("weights") && j.contains("components"),
            "source: mixture needs weights and components");
    m.weights = load_weights(j.at("weights"), "source weights");
    const auto& cs = j.at("components");
    require(cs.is_array() && cs.size() == m.weights.size(),
            "source: component/weight count mismatch");
    for (const auto& c : cs) {
      SourceModel comp = load_source(c, false);
      require(comp.alphabet.size == m.alphabet.size,
              "source: component alphabet mismatch");
      m.components.push_back(std::move(comp));
    }
  } else {
    throw InputError("source: unknown family '" + fam + "'");
  }
  return m;
}

ChannelModel load_channel(const json& j, bool allow_mixture) {
  ChannelModel m;
  require(j.contains("alphabet"), "channel: missing alphabet");
  const auto& al = j.at("alphabet");
  require(al.is_array() && al.size() == 2, "channel: alphabet must be [in, out]");
  m.in.size = load_alphabet(al[0], "channel in");
  m.out.size = load_alphabet(al[1], "channel out");
  const std::string fam = j.value("family", "memoryless");
  const std::size_t nx = static_cast<std::size_t>(m.in.size);
  const std::size_t ny = static_cast<std::size_t>(m.out.size);
  if (fam == "memoryless") {
    m.family = Family::Memoryless;
    require(j.contains("matrices"), "channel: missing matrices");
    const auto& ms = j.at("matrices");
    require(ms.is_array() && !ms.empty(), "channel: matrices empty");
    for (std::size_t p = 0; p < ms.size(); ++p) {
      const auto& mat = ms[p];
      require(mat.is_array() && mat.size() == nx,
              "channel matrix " + std::to_string(p) + ": need one row per input");
      std::vector<double> flat;
      flat.reserve(nx * ny);
      for (std::size_t x = 0; x < nx; ++x) {
        auto row = load_row(mat[x], ny,
                            "channel matrix " + std::to_string(p) + " row " +
                                std::to_string(x));
        flat.insert(flat.end(), row.begin(), row.end());
      }
      m.matrices.push_back(std::move(flat));
    }
  } else if (fam == "mixture") {
    require(allow_mixture, "channel: nested mixtures are not allowed");
    m.family = Family::Mixture;
    require(j.contains("weights") && j.contains("components"),
            "channel: mixture needs weights and components");
    m.weights = load_weights(j.at("weights"), "channel weights");
    const auto& cs = j.at("components");
    require(cs.is_array() && cs.size() == m.weights.size(),
            "channel: component/weight count mismatch");
    for (const auto& c : cs) {
      ChannelModel comp = load_channel(c, false);
      require(comp.in.size == m.in.size && comp.out.size == m.out.size,
              "channel: component alphabet mismatch");
      m.components.push_back(std::move(comp));
    }
  } else {
    throw InputError("channel: unknown family '" + fam + "'");
  }
  return m;
}

JointSourceModel load_joint(const json& j, bool allow_mixture) {
  JointSourceModel m;
  require(j.contains("alphabet"), "joint: missing alphabet");
  const auto& al = j.at("alphabet");
  require(al.is_array() && al.size() == 2, "joint: alphabet must be [x, y]");
  m.x.size = load_alphabet(al[0], "joint x");
  m.y.size = load_alphabet(al[1], "joint y");
  const std::string fam = j.value("family", "memoryless");
  const std::size_t cells =
      static_cast<std::size_t>(m.x.size) * static_cast<std::size_t>(m.y.size);
  if (fam == "memoryless") {
    m.family = Family::Memoryless;
    require(j.contains("distributions"), "joint: missing distributions");
    const auto& ds = j.at("distributions");
    require(ds.is_array() && !ds.empty(), "joint: distributions empty");
    for (std::size_t i = 0; i < ds.size(); ++i)
      m.tables.push_back(
          load_row(ds[i], cells, "joint table " + std::to_string(i)));
  } else if (fam == "markov") {
    m.family = Family::Markov;
    require(j.contains("initial") && j.contains("transition"),
            "joint: markov needs initial and transition");
    m.initial = load_row(j.at("initial"), cells, "joint initial");
    const auto& tr = j.at("transition");
    require(tr.is_array() && tr.size() == cells, "joint: transition shape");
    for (std::size_t i = 0; i < cells; ++i)
      m.transition.push_back(
          load_row(tr[i], cells, "joint transition row " + std::to_string(i)));
  } else if (fam == "mixture") {
    require(allow_mixture, "joint: nested mixtures are not allowed");
    m.family = Family::Mixture;
    require(j.contains("weights") && j.contains("components"),
            "joint: mixture needs weights and components");
    m.weights = load_weights(j.at("weights"), "joint weights");
    const auto& cs = j.at("components");
    require(cs.is_array() && cs.size() == m.weights.size(),
            "joint: component/weight count mismatch");
    for (const auto& c : cs) {
      JointSourceModel comp = load_joint(c, false);
      require(comp.x.size == m.x.size && comp.y.size == m.y.size,
              "joint: component alphabet mismatch");
      m.components.push_back(std::move(comp));
    }
  } else {
    throw InputError("joint: unknown family '" + fam + "'");
  }
  return m;
}

}  // namespace

AnyModel parse_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("model file is not valid JSON: ") + e.what());
  }
  require(j.is_object() && j.contains("type"), "model: missing type field");
  const std::string type = j.at("type").get<std::string>();
  if (type == "source") return load_source(j, true);
  if (type == "channel") return load_channel(j, true);
  if (type == "joint") return load_joint(j, true);
  throw InputError("model: unknown type '" + type + "'");
}

AnyModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model_json(ss.str());
}

}  // namespace infospec
