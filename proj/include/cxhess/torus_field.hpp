#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "cxhess/errors.hpp"
#include "cxhess/parallel.hpp"

namespace cxhess {

using cplx = std::complex<double>;

/// Uniform grid on the flat torus C^n / (Z + iZ)^n with N points per real axis.
/// Real axes are ordered (x^1, y^1, ..., x^n, y^n); x^1 varies fastest in the
/// linear index.
class PeriodicGrid {
 public:
  PeriodicGrid(int n, int N) : n_(n), N_(N) {
    if (n < 1) throw DomainError("grid: complex dimension must be positive");
    if (N < 8 || N % 2 != 0) throw DomainError("grid: N must be even and >= 8, got " + std::to_string(N));
    size_ = 1;
    for (int a = 0; a < 2 * n; ++a) size_ *= static_cast<std::size_t>(N);
  }

  int n() const { return n_; }
  int N() const { return N_; }
  int axes() const { return 2 * n_; }
  std::size_t size() const { return size_; }
  double spacing() const { return 1.0 / N_; }

  /// Integer coordinate of `index` along real axis `a`.
  int coord(std::size_t index, int a) const {
    for (int k = 0; k < a; ++k) index /= static_cast<std::size_t>(N_);
    return static_cast<int>(index % static_cast<std::size_t>(N_));
  }

  /// Position in [0,1) along real axis `a`.
  double position(std::size_t index, int a) const { return coord(index, a) * spacing(); }

  /// Signed wavenumber in [-N/2, N/2) of the frequency slot `q`.
  int wavenumber(int q) const { return q < N_ / 2 ? q : q - N_; }

  std::size_t index_of(std::span<const int> coords) const {
    std::size_t idx = 0, stride = 1;
    for (int a = 0; a < axes(); ++a) {
      const int c = ((coords[a] % N_) + N_) % N_;
      idx += static_cast<std::size_t>(c) * stride;
      stride *= static_cast<std::size_t>(N_);
    }
    return idx;
  }

  /// Neighbor of `index` shifted by `step` along axis `a` (periodic).
  std::size_t neighbor(std::size_t index, int a, int step) const {
    std::size_t stride = 1;
    for (int k = 0; k < a; ++k) stride *= static_cast<std::size_t>(N_);
    const int c = coord(index, a);
    const int moved = ((c + step) % N_ + N_) % N_;
    return index + (static_cast<std::size_t>(moved) - static_cast<std::size_t>(c)) * stride;
  }

  friend bool operator==(const PeriodicGrid& a, const PeriodicGrid& b) { return a.n_ == b.n_ && a.N_ == b.N_; }

 private:
  int n_;
  int N_;
  std::size_t size_;
};

/// Periodic real-valued grid function.
struct ScalarField {
  PeriodicGrid grid;
  std::vector<double> values;

  explicit ScalarField(const PeriodicGrid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  ScalarField(const PeriodicGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw DataError("scalar field: value count does not match grid");
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  double max() const { return *std::max_element(values.begin(), values.end()); }
  double min() const { return *std::min_element(values.begin(), values.end()); }
  double sup_abs() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
  }
  /// Mean with respect to the uniform probability measure (fixed summation order).
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t i = 0; i < size(); ++i) values[i] += o.values[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t i = 0; i < size(); ++i) values[i] -= o.values[i];
    return *this;
  }
  ScalarField& operator+=(double c) {
    for (double& v : values) v += c;
    return *this;
  }
  ScalarField& operator*=(double c) {
    for (double& v : values) v *= c;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator+(ScalarField a, double c) { return a += c; }
  friend ScalarField operator*(double c, ScalarField a) { return a *= c; }
};

/// n x n Hermitian matrix per grid point (chi_{j kbar}), stored contiguously.
class HermitianFormField {
 public:
  explicit HermitianFormField(const PeriodicGrid& g) : grid_(g), data_(g.size() * g.n() * g.n(), cplx{}) {}

  /// Constant field equal to `m` at every point.
  static HermitianFormField constant(const PeriodicGrid& g, const Eigen::MatrixXcd& m) {
    HermitianFormField f(g);
    for (std::size_t p = 0; p < g.size(); ++p) f.at(p) = m;
    return f;
  }
  static HermitianFormField identity(const PeriodicGrid& g, double scale = 1.0) {
    return constant(g, scale * Eigen::MatrixXcd::Identity(g.n(), g.n()));
  }

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  int n() const { return grid_.n(); }

  using MatMap = Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>>;
  using ConstMatMap = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>>;

  MatMap at(std::size_t p) { return MatMap(data_.data() + p * n() * n(), n(), n()); }
  ConstMatMap at(std::size_t p) const { return ConstMatMap(data_.data() + p * n() * n(), n(), n()); }

  cplx& entry(std::size_t p, int j, int k) { return data_[p * n() * n() + static_cast<std::size_t>(k) * n() + j]; }
  cplx entry(std::size_t p, int j, int k) const {
    return data_[p * n() * n() + static_cast<std::size_t>(k) * n() + j];
  }

  HermitianFormField& operator+=(const HermitianFormField& o) {
    if (!(grid_ == o.grid_)) throw GridMismatch("hermitian field: grid mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  HermitianFormField& operator*=(double c) {
    for (auto& v : data_) v *= c;
    return *this;
  }
  friend HermitianFormField operator+(HermitianFormField a, const HermitianFormField& b) { return a += b; }

  /// max over points of |chi - chi^*| (entrywise).
  double hermitian_defect() const {
    double d = 0.0;
    for (std::size_t p = 0; p < size(); ++p)
      for (int j = 0; j < n(); ++j)
        for (int k = 0; k < n(); ++k) d = std::max(d, std::abs(entry(p, j, k) - std::conj(entry(p, k, j))));
    return d;
  }

 private:
  PeriodicGrid grid_;
  std::vector<cplx> data_;
};

/// Real symmetric 2n x 2n matrix per grid point (flat second derivatives).
struct RealHessianField {
  PeriodicGrid grid;
  std::vector<double> data;  // column-major blocks of axes x axes

  explicit RealHessianField(const PeriodicGrid& g)
      : grid(g), data(g.size() * g.axes() * g.axes(), 0.0) {}

  Eigen::Map<const Eigen::MatrixXd> at(std::size_t p) const {
    const int a = grid.axes();
    return Eigen::Map<const Eigen::MatrixXd>(data.data() + p * a * a, a, a);
  }
  double& entry(std::size_t p, int a, int b) { return data[(p * grid.axes() + b) * grid.axes() + a]; }
};

/// Descending-sorted eigenvalues per grid point.
struct EigenvalueField {
  PeriodicGrid grid;
  std::vector<double> data;

  explicit EigenvalueField(const PeriodicGrid& g) : grid(g), data(g.size() * g.n(), 0.0) {}
  std::span<const double> at(std::size_t p) const {
    return {data.data() + p * grid.n(), static_cast<std::size_t>(grid.n())};
  }
  std::span<double> at(std::size_t p) { return {data.data() + p * grid.n(), static_cast<std::size_t>(grid.n())}; }
};

/// FFTW plans and derivative symbols for one grid. Unnormalized transforms;
/// `forward` divides by the point count so that coefficients are Fourier
/// coefficients.
class SpectralTransform {
 public:
  explicit SpectralTransform(const PeriodicGrid& g) : grid_(g), size_(g.size()) {
    buffer_ = fftw_alloc_complex(size_);
    std::vector<int> dims(g.axes(), g.N());  // FFTW is row-major: last dim fastest = x^1
    std::lock_guard<std::mutex> lock(plan_mutex());
    fwd_ = fftw_plan_dft(g.axes(), dims.data(), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd_ = fftw_plan_dft(g.axes(), dims.data(), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    const int N = g.N();
    d1_.resize(N);
    d2_.resize(N);
    for (int q = 0; q < N; ++q) {
      const int k = g.wavenumber(q);
      const double w = 2.0 * std::numbers::pi * k;
      d1_[q] = (k == -N / 2) ? cplx{} : cplx{0.0, w};
      d2_[q] = -w * w;
    }
  }
  ~SpectralTransform() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buffer_);
  }
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  const PeriodicGrid& grid() const { return grid_; }

  std::vector<cplx> forward(std::span<const double> values) const {
    std::vector<cplx> out(size_);
    auto* buf = reinterpret_cast<fftw_complex*>(out.data());
    for (std::size_t i = 0; i < size_; ++i) out[i] = values[i];
    fftw_execute_dft(fwd_, buf, buf);
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& v : out) v *= scale;
    return out;
  }
  std::vector<cplx> forward_complex(std::vector<cplx> values) const {
    auto* buf = reinterpret_cast<fftw_complex*>(values.data());
    fftw_execute_dft(fwd_, buf, buf);
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& v : values) v *= scale;
    return values;
  }
  /// Inverse transform in place (Fourier coefficients -> point values).
  void inverse_inplace(std::vector<cplx>& coeffs) const {
    auto* buf = reinterpret_cast<fftw_complex*>(coeffs.data());
    fftw_execute_dft(bwd_, buf, buf);
  }

  /// First-derivative symbol along an axis (Nyquist mode zeroed).
  cplx d1(int q) const { return d1_[q]; }
  /// Second-derivative symbol along an axis.
  double d2(int q) const { return d2_[q]; }

  /// Symbol of the flat second derivative along real axes a, b at frequency slot `index`.
  cplx second_symbol(std::size_t index, int a, int b) const {
    if (a == b) return d2_[grid_.coord(index, a)];
    return d1_[grid_.coord(index, a)] * d1_[grid_.coord(index, b)];
  }

  /// Symbol of d^2/dz^j dzbar^k:
  /// 1/4 [(d_xj d_xk + d_yj d_yk) + i (d_xj d_yk - d_yj d_xk)].
  cplx ddbar_symbol(std::size_t index, int j, int k) const {
    const int xj = 2 * j, yj = 2 * j + 1, xk = 2 * k, yk = 2 * k + 1;
    const cplx re = second_symbol(index, xj, xk) + second_symbol(index, yj, yk);
    const cplx im = j == k ? cplx{} : second_symbol(index, xj, yk) - second_symbol(index, yj, xk);
    return 0.25 * (re + cplx{0.0, 1.0} * im);
  }

 private:
  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }

  PeriodicGrid grid_;
  std::size_t size_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
  std::vector<cplx> d1_;
  std::vector<double> d2_;
};

/// Shared transform for a grid (plans are built once per (n, N)).
inline const SpectralTransform& spectral(const PeriodicGrid& g) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<SpectralTransform>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{g.n(), g.N()}];
  if (!slot) slot = std::make_unique<SpectralTransform>(g);
  return *slot;
}

namespace detail {

inline void require_finite(const ScalarField& u, const char* what) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!std::isfinite(u[i])) throw DataError(std::string(what) + ": non-finite value at point " + std::to_string(i));
}

// Inverse transform of symbol * coeffs.
template <class Symbol>
std::vector<cplx> apply_symbol(const SpectralTransform& st, const std::vector<cplx>& coeffs, Symbol&& symbol) {
  std::vector<cplx> work(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) work[i] = symbol(i) * coeffs[i];
  st.inverse_inplace(work);
  return work;
}

}  // namespace detail

/// i d dbar u as a Hermitian form field, by spectral differentiation.
inline HermitianFormField spectral_ddbar(const ScalarField& u) {
  const auto& g = u.grid;
  const auto& st = spectral(g);
  const auto coeffs = st.forward(u.values);
  HermitianFormField out(g);
  const int n = g.n();
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      auto vals = detail::apply_symbol(st, coeffs, [&](std::size_t i) { return st.ddbar_symbol(i, j, k); });
      for (std::size_t p = 0; p < g.size(); ++p) {
        if (j == k) {
          out.entry(p, j, j) = vals[p].real();
        } else {
          out.entry(p, j, k) = vals[p];
          out.entry(p, k, j) = std::conj(vals[p]);
        }
      }
    }
  return out;
}

/// Flat real Hessian of u (2n x 2n symmetric per point).
inline RealHessianField real_hessian(const ScalarField& u) {
  const auto& g = u.grid;
  const auto& st = spectral(g);
  const auto coeffs = st.forward(u.values);
  RealHessianField out(g);
  for (int a = 0; a < g.axes(); ++a)
    for (int b = a; b < g.axes(); ++b) {
      auto vals = detail::apply_symbol(st, coeffs, [&](std::size_t i) { return st.second_symbol(i, a, b); });
      for (std::size_t p = 0; p < g.size(); ++p) {
        out.entry(p, a, b) = vals[p].real();
        out.entry(p, b, a) = vals[p].real();
      }
    }
  return out;
}

/// Spectral gradient, one ScalarField per real axis.
inline std::vector<ScalarField> spectral_gradient(const ScalarField& u) {
  const auto& g = u.grid;
  const auto& st = spectral(g);
  const auto coeffs = st.forward(u.values);
  std::vector<ScalarField> out;
  for (int a = 0; a < g.axes(); ++a) {
    auto vals = detail::apply_symbol(st, coeffs, [&](std::size_t i) { return st.d1(g.coord(i, a)); });
    ScalarField d(g);
    for (std::size_t p = 0; p < g.size(); ++p) d[p] = vals[p].real();
    out.push_back(std::move(d));
  }
  return out;
}

/// Flat real Laplacian (sum of the unmixed second derivatives).
inline ScalarField spectral_laplacian(const ScalarField& u) {
  const auto& g = u.grid;
  const auto& st = spectral(g);
  const auto coeffs = st.forward(u.values);
  auto vals = detail::apply_symbol(st, coeffs, [&](std::size_t i) {
    double s = 0.0;
    for (int a = 0; a < g.axes(); ++a) s += st.d2(g.coord(i, a));
    return cplx{s, 0.0};
  });
  ScalarField out(g);
  for (std::size_t p = 0; p < g.size(); ++p) out[p] = vals[p].real();
  return out;
}

/// Pointwise Hermitian eigenvalues, sorted descending.
inline EigenvalueField eigenvalues_chi(const HermitianFormField& chi, double hermitian_tol = 1e-10) {
  const auto& g = chi.grid();
  const int n = g.n();
  EigenvalueField out(g);
  double scale = 1.0;
  for (std::size_t p = 0; p < chi.size(); ++p) scale = std::max(scale, chi.at(p).cwiseAbs().maxCoeff());
  if (chi.hermitian_defect() > hermitian_tol * scale) throw DataError("eigenvalues_chi: input is not Hermitian");
  if (n == 1) {
    for (std::size_t p = 0; p < chi.size(); ++p) out.at(p)[0] = chi.entry(p, 0, 0).real();
    return out;
  }
  parallel_for(chi.size(), [&](std::size_t p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(chi.at(p), Eigen::EigenvaluesOnly);
    auto dst = out.at(p);
    for (int i = 0; i < n; ++i) dst[i] = es.eigenvalues()[n - 1 - i];
  });
  return out;
}

/// Fourier interpolation of u onto a finer grid with M >= N points per axis.
inline ScalarField fourier_resample(const ScalarField& u, int M) {
  const auto& g = u.grid;
  if (M < g.N() || M % 2 != 0) throw DomainError("fourier_resample: target must be even and >= N");
  const PeriodicGrid fine(g.n(), M);
  const auto coeffs = spectral(g).forward(u.values);
  std::vector<cplx> padded(fine.size(), cplx{});
  const int N = g.N();
  const int axes = g.axes();
  // Nyquist slots contribute half to +N/2 and half to -N/2 on the fine grid.
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<std::vector<int>> choices(axes);
    double weight = 1.0;
    for (int a = 0; a < axes; ++a) {
      const int k = g.wavenumber(g.coord(i, a));
      if (k == -N / 2) {
        choices[a] = {-N / 2, N / 2};
        weight *= 0.5;
      } else {
        choices[a] = {k};
      }
    }
    std::vector<int> pick(axes, 0), coords(axes);
    while (true) {
      for (int a = 0; a < axes; ++a) coords[a] = choices[a][pick[a]];
      padded[fine.index_of(coords)] += weight * coeffs[i];
      int a = 0;
      while (a < axes && ++pick[a] == static_cast<int>(choices[a].size())) pick[a++] = 0;
      if (a == axes) break;
    }
  }
  spectral(fine).inverse_inplace(padded);
  ScalarField out(fine);
  for (std::size_t p = 0; p < fine.size(); ++p) out[p] = padded[p].real();
  return out;
}

struct FieldNorms {
  double sup_u = 0.0;
  double sup_grad = 0.0;    // sup |du| (Euclidean norm of the real gradient)
  double sup_ddbar = 0.0;   // sup of the spectral norm of (u_{j kbar})
  double sup_hess = 0.0;    // sup of the spectral norm of the real Hessian
  double lambda1_max = 0.0; // sup of the largest real-Hessian eigenvalue
};

inline FieldNorms norms(const ScalarField& u) {
  detail::require_finite(u, "norms");
  const auto& g = u.grid;
  FieldNorms r;
  r.sup_u = u.sup_abs();
  const auto grad = spectral_gradient(u);
  for (std::size_t p = 0; p < g.size(); ++p) {
    double s = 0.0;
    for (const auto& d : grad) s += d[p] * d[p];
    r.sup_grad = std::max(r.sup_grad, std::sqrt(s));
  }
  const auto ev = eigenvalues_chi(spectral_ddbar(u));
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto l = ev.at(p);
    r.sup_ddbar = std::max({r.sup_ddbar, std::abs(l.front()), std::abs(l.back())});
  }
  const auto hess = real_hessian(u);
  std::vector<double> top(g.size()), bottom(g.size());
  parallel_for(g.size(), [&](std::size_t p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess.at(p), Eigen::EigenvaluesOnly);
    bottom[p] = es.eigenvalues()[0];
    top[p] = es.eigenvalues()[g.axes() - 1];
  });
  r.lambda1_max = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < g.size(); ++p) {
    r.sup_hess = std::max({r.sup_hess, std::abs(top[p]), std::abs(bottom[p])});
    r.lambda1_max = std::max(r.lambda1_max, top[p]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// CSV field dumps: header row with the 2n axis sizes followed by n and N, then
// one value per line in linear-index order (x^1 fastest).

inline void write_csv(const std::string& path, const PeriodicGrid& g, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (int a = 0; a < g.axes(); ++a) out << g.N() << ',';
  out << g.n() << ',' << g.N() << '\n';
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << '\n';
  }
}

inline void write_csv(const std::string& path, const ScalarField& u) { write_csv(path, u.grid, u.values); }

inline void write_csv(const std::string& path, const PeriodicGrid& g, const std::vector<bool>& mask) {
  std::vector<double> v(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) v[i] = mask[i] ? 1.0 : 0.0;
  write_csv(path, g, v);
}

inline ScalarField read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::vector<int> fields;
  std::stringstream hs(header);
  for (std::string tok; std::getline(hs, tok, ',');) fields.push_back(std::stoi(tok));
  if (fields.size() < 4) throw DataError(path + ": malformed header");
  const int n = fields[fields.size() - 2];
  const int N = fields.back();
  if (static_cast<int>(fields.size()) != 2 * n + 2) throw DataError(path + ": header axis count mismatch");
  for (int a = 0; a < 2 * n; ++a)
    if (fields[a] != N) throw DataError(path + ": only equal axis sizes are supported");
  PeriodicGrid g(n, N);
  std::vector<double> values;
  values.reserve(g.size());
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) values.push_back(std::stod(line));
  if (values.size() != g.size()) throw DataError(path + ": expected " + std::to_string(g.size()) + " values");
  return ScalarField(g, std::move(values));
}

}  // namespace cxhess
