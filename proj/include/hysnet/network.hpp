#pragma once

#include <utility>
#include <vector>

#include "hysnet/errors.hpp"
#include "hysnet/types.hpp"

namespace hysnet {

/// Undirected oscillator network with a single nonlinear node.
///
/// The equations of motion are  u'' + eps*C(u)*u' + K*u = F(t)  with
/// K = I + L (graph Laplacian L) and diagonal damping C(u).  Node `q`
/// carries the self-excitable coefficient -nu - eta*u_q^2 + eta*u_q^4;
/// every other node is a linear damper.
struct NetworkModel {
  int n = 0;
  Mat adjacency;
  Mat laplacian;
  Mat stiffness;
  int q = 1;  // 1-based index of the nonlinear node
  Real nu = 1.0;
  Real eta = 10.0;
  Real epsilon = 0.01;
  Regime regime = Regime::SmallDamping;
  bool connected = true;  // informational; the math applies either way
  std::vector<std::pair<int, int>> edges;

  int degree(int node) const { return static_cast<int>(adjacency.row(node - 1).sum()); }
};

/// Mass-normalized modal data of K: columns of `modes` are orthonormal
/// eigenvectors, `omegas` the natural frequencies (ascending, omegas[0] = 1
/// for a connected network). Signs are canonicalized so that each column's
/// largest-magnitude entry is positive.
struct ModalBasis {
  Mat modes;
  Vec omegas;

  int n_modes() const { return static_cast<int>(omegas.size()); }
};

/// Per-node linear damping values. In the small regime `zetas` holds zeta_k;
/// in the large regime it holds the rescaled ztilde_k = 1/(eps^2 zeta_k).
/// The entry at the nonlinear node is unused.
struct DampingState {
  Vec zetas;
  Regime regime = Regime::SmallDamping;
};

struct LinearRates {
  CVec lambdas;  // 2N rates, conjugate pairs adjacent
  bool stable = false;
};

/// Parameters of the per-node damping relaxation
///   zeta_k' = tau^-1 (-zeta_k + (delta + p^2 nu + p^4 eta A_k^2/8) / weight_sum)
/// written in slow time; covers both regimes (p = 1, weight_sum =
/// (K_QQ-1)/K_QQ in the large-damping case).
struct RateLawParams {
  Real p2 = 1.0;
  Real weight_sum = 1.0;
  Real nu = 0.0;
  Real eta = 0.0;
  Real delta = 0.0;
  Real tau = 1.0;
};

inline Real rate_target(const RateLawParams& r, Real ak_squared) {
  return (r.delta + r.p2 * r.nu + r.p2 * r.p2 * r.eta * ak_squared / 8.0) / r.weight_sum;
}

NetworkModel build_network(int n, const std::vector<std::pair<int, int>>& edges, int q,
                           Real nu, Real eta, Real epsilon,
                           Regime regime = Regime::SmallDamping);

/// Cyclic Jacobi diagonalization of a symmetric matrix. Eigenvalues ascending.
void jacobi_eigen_symmetric(const Mat& a, Mat& vectors, Vec& values);

/// Throws DistinctFrequencyViolation when two frequencies are closer than
/// 1e-8 relative (the slow-flow theory assumes a simple spectrum).
ModalBasis modal_decompose(const NetworkModel& model);

/// I = argmax_i P_{Q,i}^2, ties broken by the lowest index. 1-based.
/// Throws DominantModeIsRigid when omega_I = 1.
int dominant_mode(const ModalBasis& basis, int q);

/// Damping coefficient of the nonlinear node: -nu - eta u^2 + eta u^4.
inline Real nonlinear_damping(Real u, Real nu, Real eta) {
  const Real u2 = u * u;
  return -nu - eta * u2 + eta * u2 * u2;
}

/// Effective diagonal of C(u): entry q-1 from the nonlinear law, entry k
/// equal to zeta_k (small regime) or 1/(eps^2 ztilde_k) (large regime).
Vec damping_coefficients(const Vec& u, const DampingState& d, const NetworkModel& model);

/// Right-hand side of the coupled fast-time system. `state` packs
/// (u, u', zeta) as 3N values; `delayed_amplitudes` supplies the A_k held
/// fixed over the step. The zeta block follows the rate law scaled by eps
/// (the law itself lives on the slow time scale eps*t).
Vec full_rhs(Real t, const Vec& state, const NetworkModel& model, const RateLawParams& law,
             const Vec& excitation, const Vec& delayed_amplitudes);

/// Mechanical part only, at frozen damping diagonal `c`:
/// returns (u', -eps*c.*v - K*u + f) stacked.
Vec mechanical_rhs(const Vec& u, const Vec& v, const NetworkModel& model, const Vec& c,
                   const Vec& f);

/// 2N x 2N linearization of the mechanical system at u = 0 and fixed damping.
Mat first_order_matrix(const NetworkModel& model, const DampingState& d);

/// First-order-in-eps rates lambda_i = +-j w_i - (eps/2) Ctilde_ii(0).
/// Small-damping regime only; throws UnsupportedRegime otherwise.
LinearRates linearized_rates(const NetworkModel& model, const DampingState& d,
                             const ModalBasis& basis);

}  // namespace hysnet
