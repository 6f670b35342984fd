#pragma once

#include <vector>

#include "mirrorkit/mirrorkit.hpp"

namespace mktest {

using mirrorkit::Vector;

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline std::vector<mirrorkit::Potential> all_potentials(int dim) {
  return {mirrorkit::Potential::squared_l2(dim), mirrorkit::Potential::neg_entropy(dim),
          mirrorkit::Potential::separable_q(dim, 3.0)};
}

inline std::vector<mirrorkit::LossFn> all_losses() {
  return {mirrorkit::LossFn::quadratic(), mirrorkit::LossFn::quartic(), mirrorkit::LossFn::logcosh()};
}

/// Random point in the potential's domain.
inline Vector random_point(const mirrorkit::Potential& p, mirrorkit::RngStream& rng, double spread = 1.0) {
  Vector w(p.dim());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    w[j] = p.domain() == mirrorkit::Domain::PositiveOrthant ? rng.uniform(0.05, 0.05 + 2.0 * spread)
                                                            : spread * rng.normal();
  }
  return w;
}

inline Vector random_gaussian(int dim, mirrorkit::RngStream& rng, double sd = 1.0) {
  Vector x(dim);
  for (int j = 0; j < dim; ++j) x[j] = sd * rng.normal();
  return x;
}

} // namespace mktest
