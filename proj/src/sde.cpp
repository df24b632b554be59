#include "fhl/sde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fhl/errors.hpp"
#include "quad.hpp"

namespace fhl {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kDeclTol = 1e-12;

double spectral_norm(const MatrixXd& A) {
  Eigen::JacobiSVD<MatrixXd> svd(A);
  return svd.singularValues()(0);
}

void check_declared(const char* name, double declared, double analytic) {
  if (!std::isfinite(declared) || declared < analytic - kDeclTol * std::max(1.0, std::abs(analytic))) {
    throw InvalidInputError(std::string("declared ") + name + " = " + std::to_string(declared) +
                            " is smaller than the analytic value " + std::to_string(analytic));
  }
}

void check_square(const MatrixXd& A, const VectorXd& c) {
  if (A.rows() < 1 || A.rows() != A.cols()) throw InvalidInputError("drift matrix must be square and non-empty");
  if (c.size() != A.rows()) throw InvalidInputError("drift offset has the wrong dimension");
  if (!A.allFinite() || !c.allFinite()) throw InvalidInputError("drift parameters must be finite");
}

}  // namespace

DriftSpec DriftSpec::linear(MatrixXd A, VectorXd c, std::optional<double> K, std::optional<double> L) {
  check_square(A, c);
  DriftSpec s;
  s.family_ = DriftFamily::kLinear;
  s.dim_ = static_cast<std::size_t>(A.rows());
  s.K_analytic_ = spectral_norm(A);
  const MatrixXd sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  s.L_analytic_ = es.eigenvalues().maxCoeff();
  s.A_ = std::move(A);
  s.c_ = std::move(c);
  s.finish(K, L);
  return s;
}

DriftSpec DriftSpec::sinusoidal(MatrixXd A, VectorXd c, std::optional<double> K, std::optional<double> L) {
  check_square(A, c);
  DriftSpec s;
  s.family_ = DriftFamily::kSinusoidal;
  s.dim_ = static_cast<std::size_t>(A.rows());
  s.K_analytic_ = spectral_norm(A);
  // <x, A sin x> <= |A| |sin x| |x| <= |A| |x|^2.
  s.L_analytic_ = s.K_analytic_;
  s.A_ = std::move(A);
  s.c_ = std::move(c);
  s.finish(K, L);
  return s;
}

DriftSpec DriftSpec::clipped_cubic(std::size_t d, double rho, std::optional<double> K, std::optional<double> L) {
  if (d < 1) throw InvalidInputError("dimension must be at least 1");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidInputError("clipping radius must be positive");
  DriftSpec s;
  s.family_ = DriftFamily::kClippedCubic;
  s.dim_ = d;
  s.rho_ = rho;
  s.K_analytic_ = std::max(1.0, 3.0 * rho * rho - 1.0);
  s.L_analytic_ = 1.0;
  s.c_ = VectorXd::Zero(static_cast<Index>(d));
  s.finish(K, L);
  return s;
}

void DriftSpec::finish(std::optional<double> K, std::optional<double> L) {
  K_ = K.value_or(K_analytic_);
  L_ = L.value_or(L_analytic_);
  check_declared("K", K_, K_analytic_);
  check_declared("L", L_, L_analytic_);
}

std::string DriftSpec::family_name() const {
  switch (family_) {
    case DriftFamily::kLinear: return "linear";
    case DriftFamily::kClippedCubic: return "clipped_cubic";
    case DriftFamily::kSinusoidal: return "sinusoidal";
  }
  return "unknown";
}

bool DriftSpec::is_zero() const {
  if (family_ == DriftFamily::kClippedCubic) return false;
  return A_.isZero(0.0) && c_.isZero(0.0);
}

VectorXd DriftSpec::operator()(double /*t*/, const VectorXd& x) const {
  switch (family_) {
    case DriftFamily::kLinear: return A_ * x + c_;
    case DriftFamily::kSinusoidal: return A_ * x.array().sin().matrix() + c_;
    case DriftFamily::kClippedCubic: {
      VectorXd out(x.size());
      const double slope = 1.0 - 3.0 * rho_ * rho_;
      const double edge = rho_ - rho_ * rho_ * rho_;
      for (Index i = 0; i < x.size(); ++i) {
        const double v = x(i);
        if (v > rho_) out(i) = edge + slope * (v - rho_);
        else if (v < -rho_) out(i) = -edge + slope * (v + rho_);
        else out(i) = v - v * v * v;
      }
      return out;
    }
  }
  return x;
}

double SigmaEntry::operator()(double t) const {
  switch (kind) {
    case Kind::kConstant: return a;
    case Kind::kAffine: return a + b * t;
    case Kind::kSinusoidal: return a + b * std::sin(omega * t);
  }
  return a;
}

double SigmaEntry::derivative(double t) const {
  switch (kind) {
    case Kind::kConstant: return 0.0;
    case Kind::kAffine: return b;
    case Kind::kSinusoidal: return b * omega * std::cos(omega * t);
  }
  return 0.0;
}

std::pair<double, double> SigmaEntry::range(double T) const {
  double lo = std::min((*this)(0.0), (*this)(T));
  double hi = std::max((*this)(0.0), (*this)(T));
  if (kind == Kind::kSinusoidal && omega != 0.0 && b != 0.0) {
    // Interior critical points omega t = pi/2 + k pi.
    const double w = std::abs(omega);
    const double first = std::ceil((0.0 - std::numbers::pi / 2) / std::numbers::pi);
    for (double k = first;; k += 1.0) {
      const double t = (std::numbers::pi / 2 + k * std::numbers::pi) / w;
      if (t > T) break;
      if (t < 0.0) continue;
      const double v = (*this)(t);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

double SigmaEntry::max_slope(double /*T*/) const {
  switch (kind) {
    case Kind::kConstant: return 0.0;
    case Kind::kAffine: return std::abs(b);
    case Kind::kSinusoidal: return std::abs(b * omega);  // |cos(0)| = 1 is attained at t = 0
  }
  return 0.0;
}

SigmaSpec::SigmaSpec(std::vector<SigmaEntry> entries, double T, double alpha0, std::optional<double> Kbar)
    : entries_(std::move(entries)), T_(T), alpha0_(alpha0) {
  if (entries_.empty()) throw InvalidInputError("sigma needs at least one diagonal entry");
  if (!(T > 0.0)) throw InvalidInputError("horizon must be positive");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw InvalidInputError("alpha0 must lie in (0, 1]");
  double inv_lip = 0.0;
  for (const auto& e : entries_) {
    if (!std::isfinite(e.a) || !std::isfinite(e.b) || !std::isfinite(e.omega)) {
      throw InvalidInputError("sigma parameters must be finite");
    }
    const auto [lo, hi] = e.range(T);
    if (!(lo > 0.0 || hi < 0.0)) throw InvalidInputError("sigma must stay invertible on [0, T]");
    const double min_abs = std::min(std::abs(lo), std::abs(hi));
    sup_ = std::max(sup_, std::max(std::abs(lo), std::abs(hi)));
    inv_sup_ = std::max(inv_sup_, 1.0 / min_abs);
    inv_lip = std::max(inv_lip, e.max_slope(T) / (min_abs * min_abs));
  }
  // A Lipschitz map with constant l is (alpha0)-Hoelder on [0, T] with constant l T^{1 - alpha0}.
  Kbar_analytic_ = inv_lip * std::pow(T, 1.0 - alpha0);
  Kbar_ = Kbar.value_or(Kbar_analytic_);
  check_declared("Kbar", Kbar_, Kbar_analytic_);
}

SigmaSpec SigmaSpec::identity(std::size_t d, double T) { return constant(d, 1.0, T); }

SigmaSpec SigmaSpec::constant(std::size_t d, double value, double T) {
  std::vector<SigmaEntry> e(d, SigmaEntry{SigmaEntry::Kind::kConstant, value, 0.0, 0.0});
  return SigmaSpec(std::move(e), T);
}

VectorXd SigmaSpec::diag(double t) const {
  VectorXd v(static_cast<Index>(entries_.size()));
  for (std::size_t i = 0; i < entries_.size(); ++i) v(static_cast<Index>(i)) = entries_[i](t);
  return v;
}

bool SigmaSpec::is_constant() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const SigmaEntry& e) {
    return e.kind == SigmaEntry::Kind::kConstant || e.b == 0.0;
  });
}

ModelSpec::ModelSpec(double H_, double T_, DriftSpec drift_, SigmaSpec sigma_)
    : H(H_), d(drift_.dim()), T(T_), drift(std::move(drift_)), sigma(std::move(sigma_)) {
  if (!(H > 0.5 && H < 1.0)) throw UnsupportedParameterError("model needs 1/2 < H < 1");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInputError("horizon must be positive");
  if (sigma.dim() != d) throw InvalidInputError("sigma and drift dimensions differ");
  if (!(sigma.alpha0() > H - 0.5)) throw InvalidInputError("alpha0 must exceed H - 1/2");
}

StatePath solve(const ModelSpec& model, const VectorXd& x0, const FbmPath& noise) {
  if (noise.H != model.H) throw InvalidInputError("noise Hurst index differs from the model");
  if (noise.dim() != model.d || static_cast<std::size_t>(x0.size()) != model.d) {
    throw InvalidInputError("dimension mismatch between model, noise and initial state");
  }
  if (std::abs(noise.grid.horizon() - model.T) > 1e-12 * model.T) {
    throw InvalidInputError("noise horizon differs from the model horizon");
  }
  const TimeGrid& g = noise.grid;
  const Index n = static_cast<Index>(g.cells());
  MatrixXd X(n + 1, static_cast<Index>(model.d));
  X.row(0) = x0.transpose();
  VectorXd x = x0;
  for (Index k = 0; k < n; ++k) {
    const double t = g[k];
    const VectorXd dB = (noise.values.row(k + 1) - noise.values.row(k)).transpose();
    x = x + model.drift(t, x) * g.step(k) + model.sigma.diag(t).cwiseProduct(dB);
    X.row(k + 1) = x.transpose();
  }
  return {g, std::move(X)};
}

FbmPath sample_noise(NoiseRoute route, const TimeGrid& grid, double H, std::size_t d, const RngSeed& seed) {
  return route == NoiseRoute::kDirect ? sample_direct(grid, H, d, seed) : sample_volterra(grid, H, d, seed);
}

MomentReport moment_diagnostic(const ModelSpec& model, const std::vector<VectorXd>& xs, const TimeGrid& grid,
                               std::size_t n_paths, const RngSeed& seed, NoiseRoute route) {
  if (n_paths < 2) throw InvalidInputError("moment diagnostic needs at least 2 paths");
  MomentReport rep{{}, 0.0, n_paths};
  for (std::size_t ix = 0; ix < xs.size(); ++ix) {
    const VectorXd& x = xs[ix];
    std::vector<double> sq(n_paths);
    const std::uint64_t master = derive_seed(seed.master, ix);
    parallel_for(n_paths, [&](std::size_t i) {
      const FbmPath noise = sample_noise(route, grid, model.H, model.d, {master, i});
      const StatePath p = solve(model, x, noise);
      sq[i] = p.states.row(p.states.rows() - 1).squaredNorm();
    });
    double m = 0.0;
    for (double v : sq) m += v;
    m /= static_cast<double>(n_paths);
    double s2 = 0.0;
    for (double v : sq) s2 += (v - m) * (v - m);
    const double se = std::sqrt(s2 / (n_paths - 1.0) / n_paths);
    const double ratio = m / (std::exp(2.0 * model.drift.L() * model.T) * (1.0 + x.squaredNorm()));
    rep.points.push_back({x, m, se, ratio});
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

double linear_noise_variance(double lambda, double sigma, double H, double T) {
  if (!(H >= 0.5 && H < 1.0)) throw UnsupportedParameterError("noise variance needs 1/2 <= H < 1");
  auto tail = [&](double w) {
    // integral over b in [0, T - w] of e^{-lambda (2b + w)}
    const double span = T - w;
    const double inner = (lambda == 0.0) ? span : -std::expm1(-2.0 * lambda * span) / (2.0 * lambda);
    return std::exp(-lambda * w) * inner;
  };
  if (H == 0.5) return sigma * sigma * tail(0.0);
  // Substituting w = z^p with p = 1/(2H - 1) absorbs the w^{2H-2} singularity.
  const double p = 1.0 / (2.0 * H - 1.0);
  const double zmax = std::pow(T, 1.0 / p);
  const double integral = detail::composite_gauss<10>([&](double z) { return p * tail(std::pow(z, p)); }, 0.0, zmax, 64);
  return sigma * sigma * H * (2.0 * H - 1.0) * 2.0 * integral;
}

}  // namespace fhl
