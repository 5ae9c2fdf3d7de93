#include "hysnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace hysnet {

NetworkModel build_network(int n, const std::vector<std::pair<int, int>>& edges, int q,
                           Real nu, Real eta, Real epsilon, Regime regime) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  if (q < 1 || q > n) throw Error(ErrorCode::InvalidArgument, "Q out of range [1, n]");
  if (!(nu > 0)) throw Error(ErrorCode::InvalidArgument, "nu must be positive");
  if (!(eta > 0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");
  if (!(epsilon > 0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");

  NetworkModel model;
  model.n = n;
  model.q = q;
  model.nu = nu;
  model.eta = eta;
  model.epsilon = epsilon;
  model.regime = regime;
  model.adjacency = Mat::Zero(n, n);

  std::set<std::pair<int, int>> seen;
  for (auto [i, j] : edges) {
    if (i < 1 || i > n || j < 1 || j > n)
      throw Error(ErrorCode::InvalidArgument, "edge references a node outside [1, n]");
    if (i == j) throw Error(ErrorCode::InvalidArgument, "self edge not allowed");
    auto key = std::minmax(i, j);
    if (!seen.insert(key).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate edge");
    model.adjacency(i - 1, j - 1) = 1.0;
    model.adjacency(j - 1, i - 1) = 1.0;
    model.edges.emplace_back(key.first, key.second);
  }

  const Vec degrees = model.adjacency.rowwise().sum();
  model.laplacian = Mat(degrees.asDiagonal()) - model.adjacency;
  model.stiffness = Mat::Identity(n, n) + model.laplacian;

  // connectivity by BFS; disconnected is a warning, not an error
  std::vector<char> visited(static_cast<size_t>(n), 0);
  std::vector<int> stack{0};
  visited[0] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w = 0; w < n; ++w) {
      if (model.adjacency(v, w) > 0 && !visited[w]) {
        visited[w] = 1;
        stack.push_back(w);
      }
    }
  }
  model.connected = std::all_of(visited.begin(), visited.end(), [](char c) { return c != 0; });
  return model;
}

void jacobi_eigen_symmetric(const Mat& a, Mat& vectors, Vec& values) {
  const Index n = a.rows();
  Mat m = a;
  vectors = Mat::Identity(n, n);
  const Real threshold = 1e-13 * a.norm();
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Real off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index r = p + 1; r < n; ++r) off = std::max(off, std::abs(m(p, r)));
    if (off <= threshold) break;

    for (Index p = 0; p < n; ++p) {
      for (Index r = p + 1; r < n; ++r) {
        const Real apq = m(p, r);
        if (std::abs(apq) <= threshold * 1e-3) continue;
        const Real theta = (m(r, r) - m(p, p)) / (2.0 * apq);
        // smaller-angle root, stable form
        const Real t = (theta >= 0 ? 1.0 : -1.0) /
                       (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const Real c = 1.0 / std::sqrt(t * t + 1.0);
        const Real s = t * c;
        Eigen::JacobiRotation<Real> rot(c, s);
        m.applyOnTheLeft(p, r, rot.adjoint());
        m.applyOnTheRight(p, r, rot);
        vectors.applyOnTheRight(p, r, rot);
      }
    }
  }

  values = m.diagonal();
  // sort ascending, carrying the columns along
  std::vector<Index> order(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Index i, Index j) { return values[i] < values[j]; });
  Mat sorted_vectors(n, n);
  Vec sorted_values(n);
  for (Index i = 0; i < n; ++i) {
    sorted_values[i] = values[order[static_cast<size_t>(i)]];
    sorted_vectors.col(i) = vectors.col(order[static_cast<size_t>(i)]);
  }
  vectors = std::move(sorted_vectors);
  values = std::move(sorted_values);
}

ModalBasis modal_decompose(const NetworkModel& model) {
  ModalBasis basis;
  Vec eigenvalues;
  jacobi_eigen_symmetric(model.stiffness, basis.modes, eigenvalues);

  basis.omegas = eigenvalues.cwiseMax(0.0).cwiseSqrt();
  for (Index i = 0; i + 1 < basis.omegas.size(); ++i) {
    const Real gap = basis.omegas[i + 1] - basis.omegas[i];
    if (gap <= 1e-8 * std::max(Real(1), basis.omegas[i + 1]))
      throw Error(ErrorCode::DistinctFrequencyViolation,
                  "natural frequencies " + std::to_string(i + 1) + " and " +
                      std::to_string(i + 2) + " are not distinct");
  }

  for (Index i = 0; i < basis.modes.cols(); ++i) {
    Index imax;
    basis.modes.col(i).cwiseAbs().maxCoeff(&imax);
    if (basis.modes(imax, i) < 0) basis.modes.col(i) = -basis.modes.col(i);
  }
  return basis;
}

int dominant_mode(const ModalBasis& basis, int q) {
  const int n = basis.n_modes();
  if (q < 1 || q > n) throw Error(ErrorCode::InvalidArgument, "Q out of range");
  int best = 0;
  Real best_val = -1.0;
  for (int i = 0; i < n; ++i) {
    const Real v = basis.modes(q - 1, i) * basis.modes(q - 1, i);
    if (v > best_val) {  // strict: ties keep the lowest index
      best_val = v;
      best = i;
    }
  }
  if (std::abs(basis.omegas[best] - 1.0) <= 1e-8)
    throw Error(ErrorCode::DominantModeIsRigid,
                "dominant mode has omega = 1 (rigid-body-like mode)");
  return best + 1;
}

Vec damping_coefficients(const Vec& u, const DampingState& d, const NetworkModel& model) {
  Vec c(model.n);
  for (int k = 0; k < model.n; ++k) {
    if (k == model.q - 1) {
      c[k] = nonlinear_damping(u[k], model.nu, model.eta);
    } else if (d.regime == Regime::SmallDamping) {
      c[k] = d.zetas[k];
    } else {
      c[k] = 1.0 / (model.epsilon * model.epsilon * d.zetas[k]);
    }
  }
  return c;
}

Vec mechanical_rhs(const Vec& u, const Vec& v, const NetworkModel& model, const Vec& c,
                   const Vec& f) {
  Vec out(2 * model.n);
  out.head(model.n) = v;
  out.tail(model.n) =
      -model.epsilon * c.cwiseProduct(v) - model.stiffness * u + f;
  return out;
}

Vec full_rhs(Real t, const Vec& state, const NetworkModel& model, const RateLawParams& law,
             const Vec& excitation, const Vec& delayed_amplitudes) {
  (void)t;  // autonomous apart from the excitation already evaluated
  const int n = model.n;
  const auto u = state.head(n);
  const auto v = state.segment(n, n);
  const auto z = state.tail(n);

  DampingState d{z, model.regime};
  const Vec c = damping_coefficients(u, d, model);

  Vec out(3 * n);
  out.head(n) = v;
  out.segment(n, n) =
      -model.epsilon * c.cwiseProduct(v) - model.stiffness * u + excitation;
  for (int k = 0; k < n; ++k) {
    if (k == model.q - 1) {
      out[2 * n + k] = 0.0;
    } else {
      const Real target = rate_target(law, delayed_amplitudes[k] * delayed_amplitudes[k]);
      out[2 * n + k] = model.epsilon / law.tau * (-z[k] + target);
    }
  }
  return out;
}

Mat first_order_matrix(const NetworkModel& model, const DampingState& d) {
  const int n = model.n;
  const Vec c = damping_coefficients(Vec::Zero(n), d, model);
  Mat a = Mat::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n) = Mat::Identity(n, n);
  a.bottomLeftCorner(n, n) = -model.stiffness;
  a.bottomRightCorner(n, n) = Mat((-model.epsilon * c).asDiagonal());
  return a;
}

LinearRates linearized_rates(const NetworkModel& model, const DampingState& d,
                             const ModalBasis& basis) {
  if (d.regime != Regime::SmallDamping)
    throw Error(ErrorCode::UnsupportedRegime,
                "linearized_rates applies to the small-damping regime only");
  const int n = model.n;
  LinearRates rates;
  rates.lambdas = CVec(2 * n);
  bool stable = true;
  for (int i = 0; i < n; ++i) {
    Real ctilde = -basis.modes(model.q - 1, i) * basis.modes(model.q - 1, i) * model.nu;
    for (int k = 0; k < n; ++k) {
      if (k == model.q - 1) continue;
      ctilde += basis.modes(k, i) * basis.modes(k, i) * d.zetas[k];
    }
    const Real re = -0.5 * model.epsilon * ctilde;
    const Real im = basis.omegas[i];
    rates.lambdas[2 * i] = std::complex<Real>(re, im);
    rates.lambdas[2 * i + 1] = std::complex<Real>(re, -im);
    if (re >= 0) stable = false;
  }
  rates.stable = stable;
  return rates;
}

}  // namespace hysnet
