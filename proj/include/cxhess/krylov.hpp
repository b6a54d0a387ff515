#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cxhess {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

struct KrylovResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Restarted GMRES with a fixed right preconditioner: solves A x = b with x = P y.
/// Classical Gram-Schmidt with one reorthogonalization pass. `x` holds the
/// initial guess on entry.
inline KrylovResult gmres(const std::function<void(const Vector&, Vector&)>& apply,
                          const std::function<void(const Vector&, Vector&)>& precondition, const Vector& b,
                          Vector& x, double rel_tol, int max_iters, int restart) {
  using Eigen::Map;
  using Eigen::VectorXd;
  const std::size_t n = b.size();
  const auto ni = static_cast<Eigen::Index>(n);
  KrylovResult res;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  Vector r(n), w(n), v(n), z(n);
  auto residual = [&] {
    apply(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    return norm2(r);
  };
  const int m = restart;
  Eigen::MatrixXd V(ni, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  while (res.iterations < max_iters) {
    const double beta = residual();
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rel_tol) {
      res.converged = true;
      return res;
    }
    H.setZero();
    std::vector<double> cs(m), sn(m), g(m + 1, 0.0);
    V.col(0) = Map<const VectorXd>(r.data(), ni) / beta;
    g[0] = beta;
    int k = 0;
    for (; k < m && res.iterations < max_iters; ++k) {
      ++res.iterations;
      Map<VectorXd>(v.data(), ni) = V.col(k);
      precondition(v, z);
      apply(z, w);
      Map<VectorXd> wm(w.data(), ni);
      const auto basis = V.leftCols(k + 1);
      VectorXd h = basis.transpose() * wm;
      wm.noalias() -= basis * h;
      const VectorXd h2 = basis.transpose() * wm;
      wm.noalias() -= basis * h2;
      h += h2;
      const double hnext = wm.norm();
      H.col(k).head(k + 1) = h;
      H(k + 1, k) = hnext;
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
        H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
        H(j, k) = t;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = denom == 0.0 ? 1.0 : H(k, k) / denom;
      sn[k] = denom == 0.0 ? 0.0 : H(k + 1, k) / denom;
      H(k, k) = denom;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      res.relative_residual = std::abs(g[k + 1]) / bnorm;
      if (res.relative_residual <= rel_tol || hnext == 0.0) {
        ++k;
        break;
      }
      V.col(k + 1) = wm / hnext;
    }
    // x += P (V_k y) with y from the triangular system
    VectorXd y = VectorXd::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
      y[i] = H(i, i) == 0.0 ? 0.0 : s / H(i, i);
    }
    Map<VectorXd>(v.data(), ni) = V.leftCols(k) * y;
    precondition(v, z);
    for (std::size_t i = 0; i < n; ++i) x[i] += z[i];
    if (res.relative_residual <= rel_tol) {
      // confirm with the true residual
      res.relative_residual = residual() / bnorm;
      if (res.relative_residual <= 10.0 * rel_tol) {
        res.converged = true;
        return res;
      }
    }
  }
  return res;
}

}  // namespace cxhess
