#ifndef INFOSPEC_GOLDEN_HPP
#define INFOSPEC_GOLDEN_HPP

#include <cmath>
#include <utility>
#include <vector>

namespace infospec {

// Maximizes a unimodal f on [lo, hi]: uniform grid scan, then golden-section
// refinement of the bracket around the best grid point down to width_tol.
// Ties prefer the smaller abscissa. Returns (argmax, max).
template <class F>
std::pair<double, double> maximize_unimodal(F&& f, double lo, double hi,
                                            int grid_points,
                                            double width_tol = 1e-10) {
  int g = grid_points < 2 ? 2 : grid_points;
  double best_x = lo, best_v = f(lo);
  int best_i = 0;
  auto consider = [&](double x, double v) {
    if (v > best_v || (v == best_v && x < best_x)) {
      best_v = v;
      best_x = x;
    }
  };
  std::vector<double> xs(g);
  for (int i = 0; i < g; ++i) {
    xs[i] = lo + (hi - lo) * i / (g - 1);
    if (i == 0) continue;
    double v = f(xs[i]);
    if (v > best_v) best_i = i;
    consider(xs[i], v);
  }
  double a = xs[best_i > 0 ? best_i - 1 : 0];
  double b = xs[best_i + 1 < g ? best_i + 1 : g - 1];
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  consider(c, fc);
  consider(d, fd);
  while (b - a > width_tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
      consider(d, fd);
    }
  }
  return {best_x, best_v};
}

}  // namespace infospec

#endif  // INFOSPEC_GOLDEN_HPP
