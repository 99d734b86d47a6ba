#include "infospec/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>

namespace infospec::kernels {
namespace {

double scalar_reduce_max(const double* a, std::size_t len) {
  double m = kNegInf;
  for (std::size_t i = 0; i < len; ++i)
    if (a[i] > m) m = a[i];
  return m;
}

double scalar_sum(const double* a, std::size_t len) {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += a[i];
  return s;
}

double scalar_sum_exp(const double* a, std::size_t len, double shift) {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += std::exp(a[i] - shift);
  return s;
}

double scalar_sum_exp_scaled(const double* a, std::size_t len, double c,
                             double shift) {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += std::exp(c * a[i] - shift);
  return s;
}

double scalar_sum_exp_mul(const double* a, const double* b, std::size_t len,
                          double shift) {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    double e = std::exp(a[i] - shift);
    if (e != 0.0) s += e * b[i];
  }
  return s;
}

const Ops kScalar{"scalar",          scalar_reduce_max, scalar_sum,
                  scalar_sum_exp,    scalar_sum_exp_scaled,
                  scalar_sum_exp_mul};

std::atomic<const Ops*> g_forced{nullptr};

const Ops* select() {
  if (const char* env = std::getenv("INFOSPEC_KERNEL")) {
    std::string_view want(env);
    if (want == "scalar") return &kScalar;
    if (want == "avx2" && avx2_ops()) return avx2_ops();
  }
  if (const Ops* v = avx2_ops()) return v;
  return &kScalar;
}

}  // namespace

const Ops& scalar_ops() { return kScalar; }

#if !defined(INFOSPEC_HAVE_AVX2)
const Ops* avx2_ops() { return nullptr; }
#endif

const Ops& active() {
  if (const Ops* f = g_forced.load(std::memory_order_relaxed)) return *f;
  static const Ops* sel = select();
  return *sel;
}

bool force(std::string_view name) {
  if (name == "scalar") {
    g_forced.store(&kScalar);
    return true;
  }
  if (name == "avx2") {
    if (const Ops* v = avx2_ops()) {
      g_forced.store(v);
      return true;
    }
    return false;
  }
  if (name == "auto" || name.empty()) {
    g_forced.store(nullptr);
    return true;
  }
  return false;
}

double log_sum_exp(const double* a, std::size_t len) {
  const Ops& k = active();
  double m = k.reduce_max(a, len);
  if (!(m > kNegInf)) return kNegInf;  // empty or all -inf
  return m + std::log(k.sum_exp(a, len, m));
}

void LsePartial::add(double v) {
  if (v == kNegInf) return;
  if (v <= max) {
    scaled_sum += std::exp(v - max);
    return;
  }
  scaled_sum = scaled_sum * std::exp(max - v) + 1.0;
  max = v;
}

void LsePartial::add_block(const double* a, std::size_t len) {
  const Ops& k = active();
  double m = k.reduce_max(a, len);
  if (!(m > kNegInf)) return;
  double s = k.sum_exp(a, len, m);
  merge(LsePartial{m, s});
}

void LsePartial::merge(const LsePartial& o) {
  if (o.max == kNegInf) return;
  if (max == kNegInf) {
    *this = o;
    return;
  }
  if (o.max <= max) {
    scaled_sum += o.scaled_sum * std::exp(o.max - max);
  } else {
    scaled_sum = scaled_sum * std::exp(max - o.max) + o.scaled_sum;
    max = o.max;
  }
}

double LsePartial::value() const {
  if (max == kNegInf || scaled_sum <= 0.0) return kNegInf;
  return max + std::log(scaled_sum);
}

LsePartial merge_tree(std::vector<LsePartial> parts) {
  if (parts.empty()) return {};
  while (parts.size() > 1) {
    std::size_t out = 0;
    for (std::size_t i = 0; i < parts.size(); i += 2) {
      LsePartial p = parts[i];
      if (i + 1 < parts.size()) p.merge(parts[i + 1]);
      parts[out++] = p;
    }
    parts.resize(out);
  }
  return parts[0];
}

}  // namespace infospec::kernels
