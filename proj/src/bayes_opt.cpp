#include "pothole/bayes_opt.hpp"

#include "pothole/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace pothole::bayesopt {

void SearchSpec::validate() const {
  if (bounds.empty()) throw Error(ErrorCode::InvalidArgument, "search needs at least one dimension");
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "each bound needs lower < upper");
  }
  if (n_init < 1) throw Error(ErrorCode::InvalidArgument, "n_init must be >= 1");
  if (n_iter < 0 || n_candidates < 1 || n_refine < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative iteration or candidate count");
  }
}

namespace {

double radical_inverse(unsigned index, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * (index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

struct UnitBox {
  const SearchSpec& spec;

  Eigen::VectorXd to_point(const Eigen::VectorXd& u) const {
    Eigen::VectorXd p(u.size());
    for (Eigen::Index d = 0; d < u.size(); ++d) {
      const auto [lo, hi] = spec.bounds[static_cast<std::size_t>(d)];
      p(d) = std::clamp(lo + u(d) * (hi - lo), lo, hi);
    }
    return p;
  }
};

std::string describe(const Eigen::VectorXd& p) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index d = 0; d < p.size(); ++d) os << (d ? ", " : "") << p(d);
  os << ")";
  return os.str();
}

// Bounded compass search maximizing `f` on the unit box.
Eigen::VectorXd refine(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x, double& fx) {
  double step = 0.05;
  while (step > 1e-4) {
    bool improved = false;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd y = x;
        y(d) = std::clamp(y(d) + sign * step, 0.0, 1.0);
        const double fy = f(y);
        if (fy > fx) {
          x = y;
          fx = fy;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return x;
}

}  // namespace

OptResult optimize(const Objective& objective, const SearchSpec& spec) {
  spec.validate();
  const auto dim = static_cast<Eigen::Index>(spec.bounds.size());
  if (dim > static_cast<Eigen::Index>(std::size(kPrimes))) {
    throw Error(ErrorCode::InvalidArgument, "too many search dimensions");
  }
  const UnitBox box{spec};
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  OptResult result;
  std::vector<Eigen::VectorXd> unit_points;
  std::vector<double> values;
  std::map<std::vector<double>, double> cache;

  auto evaluate = [&](const Eigen::VectorXd& u, bool acquired) {
    const Eigen::VectorXd p = box.to_point(u);
    const std::vector<double> key(p.data(), p.data() + p.size());
    double v;
    if (auto it = cache.find(key); it != cache.end()) {
      v = it->second;
    } else {
      v = objective(p);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::ObjectiveNonFinite, "objective returned " + std::to_string(v) + " at " + describe(p));
      }
      cache.emplace(key, v);
    }
    unit_points.push_back(u);
    values.push_back(v);
    result.history.push_back({p, v, acquired});
    if (result.history.size() == 1 || v < result.best_value) {
      result.best_value = v;
      result.best_point = p;
    }
  };

  Eigen::VectorXd shift(dim);
  for (Eigen::Index d = 0; d < dim; ++d) shift(d) = unif(rng);
  for (int i = 0; i < spec.n_init; ++i) {
    Eigen::VectorXd u(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      u(d) = std::fmod(radical_inverse(static_cast<unsigned>(i + 1), kPrimes[d]) + shift(d), 1.0);
    }
    evaluate(u, false);
  }

  std::vector<std::pair<double, double>> unit_bounds(static_cast<std::size_t>(dim), {0.0, 1.0});
  for (int it = 0; it < spec.n_iter; ++it) {
    const GaussianProcess gp = GaussianProcess::fit(unit_points, values, unit_bounds);
    result.final_model = gp.diagnostics();
    const double incumbent = *std::min_element(values.begin(), values.end());
    auto ei = [&](const Eigen::VectorXd& u) { return expected_improvement(gp, incumbent, u); };

    std::vector<std::pair<double, Eigen::VectorXd>> cands;
    cands.reserve(static_cast<std::size_t>(spec.n_candidates));
    for (int c = 0; c < spec.n_candidates; ++c) {
      Eigen::VectorXd u(dim);
      for (Eigen::Index d = 0; d < dim; ++d) u(d) = unif(rng);
      cands.emplace_back(ei(u), std::move(u));
    }
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    Eigen::VectorXd next = cands.front().second;
    double next_ei = cands.front().first;
    const int n_ref = std::min<int>(spec.n_refine, static_cast<int>(cands.size()));
    for (int r = 0; r < n_ref; ++r) {
      double f = cands[static_cast<std::size_t>(r)].first;
      Eigen::VectorXd x = refine(ei, cands[static_cast<std::size_t>(r)].second, f);
      if (f > next_ei) {
        next_ei = f;
        next = x;
      }
    }

    // With no expected gain, or a repeat of an evaluated point, explore where
    // the model is least certain instead.
    auto is_repeat = [&](const Eigen::VectorXd& u) {
      return std::any_of(unit_points.begin(), unit_points.end(),
                         [&](const Eigen::VectorXd& p) { return (p - u).norm() < 1e-9; });
    };
    if (!(next_ei > 0.0) || is_repeat(next)) {
      double best_var = -1.0;
      for (const auto& [e, u] : cands) {
        const double var = gp.variance(u);
        if (var > best_var && !is_repeat(u)) {
          best_var = var;
          next = u;
        }
      }
    }
    evaluate(next, true);
  }
  return result;
}

}  // namespace pothole::bayesopt
