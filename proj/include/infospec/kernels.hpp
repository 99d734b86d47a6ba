#ifndef INFOSPEC_KERNELS_HPP
#define INFOSPEC_KERNELS_HPP

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "infospec/common.hpp"

namespace infospec::kernels {

// Reduction kernels behind the log-domain arithmetic. The scalar reference
// implementation always exists; on x86-64 an AVX2+FMA variant is compiled in
// and picked at startup when the CPU supports it. Variants agree to within
// accumulation-order rounding (see test_kernels), not bit for bit; within one
// process the selected variant is fixed, so repeated runs are reproducible.
//
// Input conventions: values may be -inf (zero probability), never NaN or
// +inf. `shift` must be finite. Terms whose exponent argument falls below
// about -708 are flushed to zero.
struct Ops {
  const char* name;
  // max over a[0..len), -inf when len == 0
  double (*reduce_max)(const double* a, std::size_t len);
  // plain sum
  double (*sum)(const double* a, std::size_t len);
  // sum of exp(a[i] - shift)
  double (*sum_exp)(const double* a, std::size_t len, double shift);
  // sum of exp(c * a[i] - shift)
  double (*sum_exp_scaled)(const double* a, std::size_t len, double c,
                           double shift);
  // sum of exp(a[i] - shift) * b[i]; terms with underflowing exp contribute 0
  double (*sum_exp_mul)(const double* a, const double* b, std::size_t len,
                        double shift);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when not compiled in or CPU lacks AVX2/FMA
const Ops& active();

// Select a variant by name ("scalar", "avx2", "auto"); returns false when the
// requested variant is unavailable. The INFOSPEC_KERNEL environment variable
// is honoured at first use of active().
bool force(std::string_view name);

double log_sum_exp(const double* a, std::size_t len);
inline double log_sum_exp(std::span<const double> a) {
  return log_sum_exp(a.data(), a.size());
}

// Running log-sum-exp fed value blocks. Merging partials is associative up to
// rounding; merge order is fixed by the caller, which keeps enumeration
// results independent of worker count.
struct LsePartial {
  double max = kNegInf;
  double scaled_sum = 0.0;  // sum of exp(v - max)

  void add(double v);
  void add_block(const double* a, std::size_t len);
  void merge(const LsePartial& o);
  double value() const;
};

// Deterministic pairwise-tree merge in index order.
LsePartial merge_tree(std::vector<LsePartial> parts);

}  // namespace infospec::kernels

#endif  // INFOSPEC_KERNELS_HPP
