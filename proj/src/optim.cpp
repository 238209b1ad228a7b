#include "rriqa/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rriqa/errors.hpp"

namespace rriqa {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start,
                             const NelderMeadOptions& opts) {
  const int dim = static_cast<int>(start.size());
  if (dim < 1) fail(Err::BadInput, "empty start vector");

  std::vector<Eigen::VectorXd> simplex;
  simplex.reserve(dim + 1);
  simplex.push_back(start);
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd v = start;
    v[i] += opts.initial_step * std::max(std::abs(start[i]), 1.0);
    simplex.push_back(v);
  }
  std::vector<double> values(dim + 1);
  for (int i = 0; i <= dim; ++i) values[i] = f(simplex[i]);

  std::vector<int> order(dim + 1);
  auto sort_simplex = [&]() {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return values[a] < values[b]; });
  };

  NelderMeadResult result;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    sort_simplex();
    const int best = order[0], worst = order[dim], second_worst = order[dim - 1];
    result.best_history.push_back(values[best]);

    const double f_spread = std::abs(values[worst] - values[best]);
    double diameter = 0.0;
    for (int i = 1; i <= dim; ++i)
      diameter = std::max(diameter,
                          (simplex[order[i]] - simplex[best]).norm());
    if (f_spread <= opts.f_tolerance && diameter <= opts.x_tolerance) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i <= dim; ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= dim;

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double f_reflected = f(reflected);

    if (f_reflected < values[best]) {
      const Eigen::VectorXd expanded =
          centroid + 2.0 * (centroid - simplex[worst]);
      const double f_expanded = f(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
    } else if (f_reflected < values[second_worst]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
    } else {
      const bool outside = f_reflected < values[worst];
      const Eigen::VectorXd contracted =
          outside ? centroid + 0.5 * (reflected - centroid)
                  : centroid + 0.5 * (simplex[worst] - centroid);
      const double f_contracted = f(contracted);
      if (f_contracted < std::min(f_reflected, values[worst])) {
        simplex[worst] = contracted;
        values[worst] = f_contracted;
      } else {
        for (int i = 0; i <= dim; ++i) {
          if (i == best) continue;
          simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
          values[i] = f(simplex[i]);
        }
      }
    }
  }

  sort_simplex();
  result.x = simplex[order[0]];
  result.fmin = values[order[0]];
  result.iterations = iter;
  if (!result.best_history.empty())
    result.best_history.push_back(result.fmin);
  return result;
}

}  // namespace rriqa
