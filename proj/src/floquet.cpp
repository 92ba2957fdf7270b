#include "fgrowth/floquet.hpp"

#include <cmath>
#include <complex>
#include <deque>
#include <numeric>

#include <Eigen/Dense>

#include "fgrowth/errors.hpp"
#include "fgrowth/scheme.hpp"

namespace fgrowth {

namespace {

constexpr int kAveraged = 3;

double l1_distance(const std::vector<double>& u, const std::vector<double>& v, double dx) {
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += std::abs(u[j] - v[j]);
  return dx * s;
}

double mean(const std::deque<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

void check_options(const FloquetOptions& opts) {
  if (!(opts.tol > 0.0)) throw ModelError("tolerance must be > 0");
  if (opts.max_iter < 1) throw ModelError("max_iter must be >= 1");
  if (opts.krylov_dim == 1 || opts.krylov_dim < 0) throw ModelError("krylov_dim must be 0 or >= 2");
}

// One Arnoldi cycle on the monodromy from v. Replaces v by the Ritz vector of
// the dominant real Ritz value, clipped to be nonnegative with unit L1 mass.
// Returns the number of periods used.
long arnoldi_cycle(const Propagator& prop, std::vector<double>& v, long m, double dx) {
  const std::size_t J = v.size();
  auto dot = [&](const std::vector<double>& x, const std::vector<double>& y) {
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
  };
  std::vector<std::vector<double>> V;
  V.reserve(static_cast<std::size_t>(m) + 1);
  V.push_back(v);
  const double n0 = std::sqrt(dot(v, v));
  for (double& x : V[0]) x /= n0;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  DensityField w;
  w.dx = dx;
  long used = 0;
  long dim = m;
  for (long j = 0; j < m; ++j) {
    w.values = V[static_cast<std::size_t>(j)];
    w.time = 0.0;
    w.lost_mass = 0.0;
    prop.advance_period(w);
    ++used;
    // modified Gram-Schmidt, twice
    for (int pass = 0; pass < 2; ++pass) {
      for (long i = 0; i <= j; ++i) {
        const auto& q = V[static_cast<std::size_t>(i)];
        const double h = dot(w.values, q);
        H(i, j) += h;
        for (std::size_t x = 0; x < J; ++x) w.values[x] -= h * q[x];
      }
    }
    const double norm = std::sqrt(dot(w.values, w.values));
    H(j + 1, j) = norm;
    if (norm <= 1e-14 * std::abs(H(0, 0))) {
      dim = j + 1;
      break;
    }
    for (double& x : w.values) x /= norm;
    V.push_back(w.values);
  }

  const Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(dim, dim));
  const auto ev = es.eigenvalues();
  long best = -1;
  for (long i = 0; i < dim; ++i) {
    if (std::abs(ev(i).imag()) > 1e-10 * std::abs(ev(i))) continue;
    if (best < 0 || ev(i).real() > ev(best).real()) best = i;
  }
  if (best < 0 || !(ev(best).real() > 0.0)) return used;
  const Eigen::VectorXcd s = es.eigenvectors().col(best);

  std::vector<double> y(J, 0.0);
  for (long i = 0; i < dim; ++i) {
    const double c = s(i).real();
    const auto& q = V[static_cast<std::size_t>(i)];
    for (std::size_t x = 0; x < J; ++x) y[x] += c * q[x];
  }
  const double sign = std::accumulate(y.begin(), y.end(), 0.0) < 0.0 ? -1.0 : 1.0;
  double mass = 0.0;
  for (double& x : y) {
    x = std::max(0.0, sign * x);
    mass += x;
  }
  if (!(mass > 0.0) || !std::isfinite(mass)) return used;
  for (double& x : y) x /= mass * dx;
  v.swap(y);
  return used;
}

}  // namespace

FloquetResult floquet_eigen(const Kernel& k, const Grid& grid, const FloquetOptions& opts) {
  check_options(opts);
  const Propagator prop(k, grid);
  const double T = grid.period();

  DensityField n = opts.initial ? *opts.initial
                                : DensityField::indicator(grid, majority_age(k), grid.x_max());
  validate_density(n, grid);
  n.time = 0.0;
  n.lost_mass = 0.0;
  const double m0 = n.mass();
  if (!(m0 > 0.0)) throw Degenerate("initial iterate has no mass");
  for (double& v : n.values) v /= m0;

  std::deque<double> rates;
  FloquetResult res;
  double residual = INFINITY;
  long since_krylov = 0;
  for (long it = 1; it <= opts.max_iter; ++it) {
    if (opts.krylov_dim >= 2 && it > opts.krylov_after && ++since_krylov > opts.krylov_every &&
        it + opts.krylov_dim < opts.max_iter) {
      it += arnoldi_cycle(prop, n.values, opts.krylov_dim, grid.dx());
      since_krylov = 0;
      rates.clear();
    }
    DensityField next = n;
    next.time = 0.0;
    next.lost_mass = 0.0;
    prop.advance_period(next);
    const double growth = next.mass();
    if (!(growth > 0.0) || !std::isfinite(growth) || growth < 1e-300) {
      throw Degenerate("iterate mass vanished after " + std::to_string(it) + " periods");
    }
    for (double& v : next.values) v /= growth;
    residual = l1_distance(next.values, n.values, grid.dx());
    rates.push_back(std::log(growth) / T);
    if (rates.size() > kAveraged) rates.pop_front();
    res.lost_mass = next.lost_mass;
    n.values.swap(next.values);
    res.iterations = it;
    if (residual < opts.tol && static_cast<int>(rates.size()) == kAveraged) break;
  }
  res.residual = residual;
  res.lambda = mean(rates);
  if (!(residual < opts.tol)) {
    throw NonConverged("power iteration did not converge", res.iterations, residual, res.lambda);
  }
  n.time = 0.0;
  n.lost_mass = 0.0;
  res.iterate = n;

  if (opts.keep_profile) {
    const long S = grid.steps_per_period();
    res.eigenprofile.reserve(static_cast<std::size_t>(S));
    DensityField cur = n;
    double total = 0.0;
    for (long s = 0; s < S; ++s) {
      DensityField N = cur;
      const double w = std::exp(-res.lambda * cur.time);
      for (double& v : N.values) v *= w;
      N.lost_mass = 0.0;
      total += N.mass() * grid.dt();
      res.eigenprofile.push_back(std::move(N));
      prop.advance(cur);
    }
    const double scale = T / total;
    for (auto& N : res.eigenprofile) {
      for (double& v : N.values) v *= scale;
    }
  }
  return res;
}

AdjointResult adjoint_floquet(const FloquetResult& direct, const Kernel& k, const Grid& grid,
                              const FloquetOptions& opts) {
  check_options(opts);
  const long S = grid.steps_per_period();
  if (static_cast<long>(direct.eigenprofile.size()) != S) {
    throw ModelError("adjoint needs the direct eigenprofile over one period");
  }
  const StepFactors factors(k, grid);
  const auto J = static_cast<std::size_t>(grid.nodes());
  const double dx = grid.dx();
  const double T = grid.period();
  std::vector<double> sbuf;
  std::vector<double> dbuf;

  // phi_k[j] = survival_j phi_{k+1}[j+1] + 2 division_j phi_{k+1}[0]
  auto back_step = [&](const std::vector<double>& next, std::vector<double>& out, long kk) {
    const auto view = factors.at(kk, sbuf, dbuf);
    const double boundary = 2.0 * next[0];
    for (std::size_t j = 0; j + 1 < J; ++j) {
      out[j] = view.survival[j] * next[j + 1] + view.division[j] * boundary;
    }
    out[J - 1] = view.division[J - 1] * boundary;
  };
  auto back_period = [&](std::vector<double>& phi, std::vector<double>& tmp) {
    for (long kk = S - 1; kk >= 0; --kk) {
      back_step(phi, tmp, kk);
      phi.swap(tmp);
    }
  };
  auto l1 = [&](const std::vector<double>& v) {
    return dx * std::accumulate(v.begin(), v.end(), 0.0);
  };

  std::vector<double> phi(J, 1.0 / (dx * static_cast<double>(J)));
  std::vector<double> tmp(J);
  std::deque<double> rates;
  AdjointResult res;
  double residual = INFINITY;
  for (long it = 1; it <= opts.max_iter; ++it) {
    std::vector<double> next = phi;
    back_period(next, tmp);
    const double growth = l1(next);
    if (!(growth > 0.0) || !std::isfinite(growth) || growth < 1e-300) {
      throw Degenerate("adjoint iterate vanished after " + std::to_string(it) + " periods");
    }
    for (double& v : next) v /= growth;
    residual = l1_distance(next, phi, dx);
    rates.push_back(std::log(growth) / T);
    if (rates.size() > kAveraged) rates.pop_front();
    phi.swap(next);
    res.iterations = it;
    if (residual < opts.tol && static_cast<int>(rates.size()) == kAveraged) break;
  }
  res.residual = residual;
  res.lambda_check = mean(rates);
  if (!(residual < opts.tol)) {
    throw NonConverged("adjoint power iteration did not converge", res.iterations, residual,
                       res.lambda_check);
  }

  // Periodic profile: Phi_k = phi_k exp(lambda t_k) with phi_S = phi_0.
  res.phi.assign(static_cast<std::size_t>(S), std::vector<double>(J));
  std::vector<double> cur = phi;
  for (double& v : cur) v *= std::exp(-res.lambda_check * T);
  for (long kk = S - 1; kk >= 0; --kk) {
    back_step(cur, tmp, kk);
    cur.swap(tmp);
    auto& out = res.phi[static_cast<std::size_t>(kk)];
    const double w = std::exp(res.lambda_check * grid.time(kk));
    for (std::size_t j = 0; j < J; ++j) out[j] = cur[j] * w;
  }

  double total = 0.0;
  for (double p : duality_products(direct, res)) total += p * grid.dt();
  const double scale = T / total;
  for (auto& row : res.phi) {
    for (double& v : row) v *= scale;
  }
  return res;
}

std::vector<double> duality_products(const FloquetResult& direct, const AdjointResult& adjoint) {
  std::vector<double> out;
  out.reserve(adjoint.phi.size());
  for (std::size_t k = 0; k < adjoint.phi.size(); ++k) {
    const auto& N = direct.eigenprofile.at(k);
    double s = 0.0;
    for (std::size_t j = 0; j < N.values.size(); ++j) s += N.values[j] * adjoint.phi[k][j];
    out.push_back(s * N.dx);
  }
  return out;
}

}  // namespace fgrowth
