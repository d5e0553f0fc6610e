#include "dare/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace dare {
namespace {

double scaled_grad_norm(const Eigen::VectorXd& g, double f) {
  return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff() / (1.0 + std::abs(f));
}

}  // namespace

BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.grad.resize(n);
  res.value = f(res.x, &res.grad);
  res.evaluations = 1;
  if (!std::isfinite(res.value) || !res.grad.allFinite()) {
    res.message = "objective not finite at the starting point";
    return res;
  }

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x_new(n), g_new(n);
  bool scaled = false;

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    if (scaled_grad_norm(res.grad, res.value) < opts.gradient_tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      return res;
    }
    Eigen::VectorXd dir = -h_inv * res.grad;
    double slope = dir.dot(res.grad);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      dir = -res.grad;
      slope = dir.dot(res.grad);
    }
    const double dir_norm = dir.norm();
    double step = dir_norm > opts.max_step ? opts.max_step / dir_norm : 1.0;

    // Backtracking Armijo search.
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = res.x + step * dir;
      f_new = f(x_new, &g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= res.value + opts.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.message = "line search failed";
      res.converged = scaled_grad_norm(res.grad, res.value) < opts.gradient_tol;
      return res;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - res.grad;
    const double sy = s.dot(y);
    const double prev = res.value;
    res.x = x_new;
    res.value = f_new;
    res.grad = g_new;

    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h_inv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * y;
      h_inv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
    if (std::abs(prev - res.value) <= 1e-15 * (1.0 + std::abs(res.value)) &&
        s.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + res.x.cwiseAbs().maxCoeff())) {
      res.converged = scaled_grad_norm(res.grad, res.value) < opts.gradient_tol;
      res.message = "no further progress";
      return res;
    }
  }
  res.converged = scaled_grad_norm(res.grad, res.value) < opts.gradient_tol;
  res.message = "iteration limit reached";
  return res;
}

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd gp(n), gm(n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double step = rel_step * (1.0 + std::abs(x(i)));
    xp(i) = x(i) + step;
    f(xp, &gp);
    xp(i) = x(i) - step;
    f(xp, &gm);
    xp(i) = x(i);
    h.col(i) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

double smallest_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

LaplaceResult laplace_mode(const Objective& f, const Eigen::VectorXd& x0, const ModeSearchOptions& opts) {
  BfgsOptions bfgs;
  bfgs.max_iter = opts.max_iter;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> jitter(0.0, opts.jitter_sd);

  BfgsResult best;
  bool have_best = false;
  int iterations = 0;
  const int starts = 1 + std::max(0, opts.restarts);
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd start = x0;
    if (s > 0) {
      for (Eigen::Index i = 0; i < start.size(); ++i) start(i) += jitter(rng);
    }
    BfgsResult r = minimize_bfgs(f, start, bfgs);
    iterations += r.iterations;
    if (!std::isfinite(r.value)) continue;
    if (!have_best || r.value < best.value) {
      best = std::move(r);
      have_best = true;
    }
  }

  LaplaceResult out;
  out.starts = starts;
  out.iterations = iterations;
  if (!have_best) {
    out.mode = x0;
    out.message = "objective not finite at any start";
    return out;
  }

  // Newton polish on the finite-difference Hessian; a few steps take BFGS's
  // answer to machine-level gradient norms.
  Eigen::VectorXd x = best.x;
  double fx = best.value;
  Eigen::VectorXd g = best.grad;
  Eigen::MatrixXd h = fd_hessian(f, x);
  Eigen::VectorXd g_new(x.size());
  for (int it = 0; it < 8 && x.size() > 0; ++it) {
    if (scaled_grad_norm(g, fx) < 1e-10) break;
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = -llt.solve(g);
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 20; ++ls) {
      const Eigen::VectorXd trial = x + t * step;
      const double f_trial = f(trial, &g_new);
      if (std::isfinite(f_trial) && g_new.allFinite() && f_trial <= fx + 1e-12 * (1.0 + std::abs(fx)) &&
          g_new.cwiseAbs().maxCoeff() < g.cwiseAbs().maxCoeff()) {
        x = trial;
        fx = f_trial;
        g = g_new;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
    h = fd_hessian(f, x);
  }

  if (smallest_eigenvalue(h) <= 0.0) {
    // Possibly stopped on a saddle or flat ridge: resume with a tighter tolerance.
    BfgsOptions tight = bfgs;
    tight.gradient_tol = 1e-11;
    BfgsResult r = minimize_bfgs(f, x, tight);
    iterations += r.iterations;
    if (std::isfinite(r.value) && r.value <= fx) {
      x = r.x;
      fx = r.value;
      g = r.grad;
      h = fd_hessian(f, x);
    }
  }

  out.iterations = iterations;
  out.mode = x;
  out.value = fx;
  out.precision = h;
  out.grad_norm_inf = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
  out.min_eigenvalue = smallest_eigenvalue(h);
  const bool grad_ok = scaled_grad_norm(g, fx) < opts.gradient_tol;
  const bool pd = out.min_eigenvalue > 0.0;
  out.converged = grad_ok && pd;
  if (out.converged) {
    out.message = "converged";
  } else if (!grad_ok) {
    out.message = fmt::format("gradient norm {:.3g} above tolerance ({})", out.grad_norm_inf, best.message);
  } else {
    out.message = fmt::format("Hessian not positive definite (smallest eigenvalue {:.3g})", out.min_eigenvalue);
  }
  return out;
}

}  // namespace dare
