#include "l2c/stage.hpp"
#include "l2c/log.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace l2c {

StageFunction::StageFunction(std::vector<int> indices, std::string name)
    : indices_(std::move(indices)), name_(std::move(name)) {}

Vector StageFunction::gradient(const Vector& w, const Vector& theta) const {
  Vector g(w.size());
  Vector wp = w;
  for (int i = 0; i < w.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(w(i)));
    wp(i) = w(i) + h;
    const double fp = value(wp, theta);
    wp(i) = w(i) - h;
    const double fm = value(wp, theta);
    wp(i) = w(i);
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

Matrix StageFunction::hessian(const Vector& w, const Vector& theta) const {
  const int d = static_cast<int>(w.size());
  Matrix H(d, d);
  Vector wp = w;
  for (int i = 0; i < d; ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(w(i)));
    wp(i) = w(i) + h;
    const Vector gp = gradient(wp, theta);
    wp(i) = w(i) - h;
    const Vector gm = gradient(wp, theta);
    wp(i) = w(i);
    H.col(i) = (gp - gm) / (2 * h);
  }
  return 0.5 * (H + H.transpose());
}

Matrix StageFunction::mixed_theta(const Vector& w, const Vector& theta) const {
  return Matrix::Zero(w.size(), theta.size());
}

Vector StageFunction::gather(const Vector& full) const {
  Vector v(indices_.size());
  for (std::size_t i = 0; i < indices_.size(); ++i) v(i) = full(indices_[i]);
  return v;
}

StageLayout make_stage_layout(const std::vector<int>& state_dims, const std::vector<int>& control_dims,
                              bool terminal, int aux_dim) {
  if (state_dims.size() != control_dims.size()) throw ConfigError("stage layout: agent dimension lists differ");
  StageLayout l;
  int off = 0;
  for (std::size_t i = 0; i < state_dims.size(); ++i) {
    l.x_offset.push_back(off);
    off += state_dims[i];
    if (terminal) {
      l.u_offset.push_back(-1);
    } else {
      l.u_offset.push_back(off);
      off += control_dims[i];
    }
  }
  l.aux_offset = off;
  l.aux_dim = aux_dim;
  l.dim = off + aux_dim;
  return l;
}

namespace {

void scatter_add(const StageFunction& f, const Vector& local, Vector& full, double scale = 1.0) {
  const auto& idx = f.indices();
  for (std::size_t i = 0; i < idx.size(); ++i) full(idx[i]) += scale * local(i);
}

void scatter_add(const StageFunction& f, const Matrix& local, Matrix& full, double scale = 1.0) {
  const auto& idx = f.indices();
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) full(idx[i], idx[j]) += scale * local(i, j);
}

struct Objective {
  const StageDef& def;
  const Vector& target;
  const Vector& weight;
  const Vector& theta;

  // +inf outside the strict interior.
  double value(const Vector& w, double mu) const {
    double v = 0.5 * (w - target).cwiseAbs2().dot(weight);
    for (const auto& c : def.costs) v += c->value(c->gather(w), theta);
    for (const auto& g : def.constraints) {
      const double gv = g->value(g->gather(w), theta);
      if (!(gv < 0.0)) return std::numeric_limits<double>::infinity();
      v -= mu * std::log(-gv);
    }
    return v;
  }

  void derivatives(const Vector& w, double mu, Vector& grad, Matrix& hess) const {
    const int d = static_cast<int>(w.size());
    grad = weight.cwiseProduct(w - target);
    hess = Matrix::Zero(d, d);
    hess.diagonal() += weight;
    for (const auto& c : def.costs) {
      const Vector wl = c->gather(w);
      scatter_add(*c, c->gradient(wl, theta), grad);
      scatter_add(*c, c->hessian(wl, theta), hess);
    }
    for (const auto& g : def.constraints) {
      const Vector wl = g->gather(w);
      const double gv = g->value(wl, theta);
      const Vector gg = g->gradient(wl, theta);
      const Matrix gh = g->hessian(wl, theta);
      // -mu ln(-g): grad = -mu g'/g, hess = mu g'g'^T/g^2 - mu g''/g
      scatter_add(*g, gg, grad, -mu / gv);
      scatter_add(*g, (gg * gg.transpose()).eval(), hess, mu / (gv * gv));
      scatter_add(*g, gh, hess, -mu / gv);
    }
  }
};

Vector newton_direction(const Matrix& H, const Vector& g) {
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() == Eigen::Success) return -llt.solve(g);
  // Indefinite: flip negative eigenvalues instead of a uniform shift, which would be sized
  // by the stiffest barrier direction and stall progress along the flat ones.
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  const Vector& lam = es.eigenvalues();
  const double floor = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  const Vector inv = lam.cwiseAbs().cwiseMax(floor).cwiseInverse();
  return -es.eigenvectors() * inv.asDiagonal() * (es.eigenvectors().transpose() * g);
}

}  // namespace

bool strictly_feasible(const StageDef& def, const Vector& w, const Vector& theta) {
  for (const auto& g : def.constraints)
    if (!(g->value(g->gather(w), theta) < 0.0)) return false;
  return true;
}

double max_constraint(const StageDef& def, const Vector& w, const Vector& theta) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& g : def.constraints) m = std::max(m, g->value(g->gather(w), theta));
  return m;
}

Vector repair_feasibility(const StageDef& def, const Vector& w0, const Vector& theta, double margin,
                          int max_sweeps) {
  Vector w = w0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool clean = true;
    for (const auto& g : def.constraints) {
      const Vector wl = g->gather(w);
      const double gv = g->value(wl, theta);
      if (gv < -margin) continue;
      clean = false;
      const Vector gg = g->gradient(wl, theta);
      const double nrm2 = gg.squaredNorm();
      if (nrm2 < 1e-300) continue;
      // Step along the violation gradient to the level set g = -2 margin.
      const Vector step = -(gv + 2 * margin) / nrm2 * gg;
      const auto& idx = g->indices();
      for (std::size_t i = 0; i < idx.size(); ++i) w(idx[i]) += step(i);
    }
    if (clean) return w;
  }
  if (strictly_feasible(def, w, theta)) return w;
  std::ostringstream msg;
  msg << "no strictly feasible point; violated:";
  for (const auto& g : def.constraints) {
    const double gv = g->value(g->gather(w), theta);
    if (!(gv < 0.0)) msg << ' ' << g->name() << "(" << gv << ")";
  }
  throw InfeasibleError(msg.str());
}

StageSolveResult solve_stage(const StageDef& def, const Vector& target, const Vector& weight,
                             const Vector& theta, const Vector& w_init, const BarrierOptions& opts) {
  if (target.size() != weight.size() || target.size() != w_init.size())
    throw ConfigError("stage solve: target, weight and initial point sizes differ");
  Objective obj{def, target, weight, theta};
  StageSolveResult res;

  const bool constrained = !def.constraints.empty();
  Vector w = w_init;
  if (constrained && !strictly_feasible(def, w, theta)) {
    w = repair_feasibility(def, w, theta, opts.repair_margin, opts.max_repair);
  }

  std::vector<double> schedule;
  if (constrained) {
    for (double mu = opts.mu_initial; mu > opts.mu_final * (1 + 1e-9); mu *= opts.mu_factor) schedule.push_back(mu);
  }
  schedule.push_back(constrained ? opts.mu_final : 0.0);

  Vector grad;
  Matrix hess;
  bool ls_failed = false;
  bool decrement_converged = false;
  for (std::size_t level = 0; level < schedule.size(); ++level) {
    const double mu = schedule[level];
    const bool last = level + 1 == schedule.size();
    double f = obj.value(w, mu);
    double best_gnorm = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int it = 0; it < opts.max_newton; ++it) {
      obj.derivatives(w, mu, grad, hess);
      const double gnorm = grad.lpNorm<Eigen::Infinity>();
      res.kkt_residual = gnorm;
      if (!last && gnorm <= opts.newton_tol) break;
      if (last && gnorm <= opts.newton_tol) {
        // Polish once within tolerance, until the residual stops shrinking.
        if (gnorm <= 1e-13 * std::max(1.0, weight.maxCoeff())) break;
        if (gnorm >= 0.5 * best_gnorm) {
          if (++stall >= 3) break;
        } else {
          stall = 0;
        }
        best_gnorm = std::min(best_gnorm, gnorm);
      }
      const Vector dir = newton_direction(hess, grad);
      const double slope = grad.dot(dir);
      // Near an active barrier the curvature reaches ~mu/g^2 and |grad| cannot fall below
      // roundoff; the Newton decrement is the scale-free measure there.
      if (-slope <= opts.decrement_tol) {
        decrement_converged = last;
        break;
      }
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        const Vector cand = w + alpha * dir;
        const double fc = obj.value(cand, mu);
        if (std::isfinite(fc) && fc <= f + 1e-4 * alpha * slope + 1e-14 * std::abs(f)) {
          w = cand;
          f = fc;
          accepted = true;
          break;
        }
      }
      ++res.newton_iterations;
      if (!accepted) {
        log::debug("stage solve: line search failed at mu " + std::to_string(mu) + ", |g| " + std::to_string(gnorm) +
                   ", slope " + std::to_string(slope));
        ls_failed = last;
        break;
      }
    }
  }
  res.w = w;
  res.mu = schedule.back();
  res.accurate = decrement_converged || res.kkt_residual <= opts.newton_tol * std::max(1.0, weight.maxCoeff());
  if (!res.accurate) {
    log::debug("stage solve: KKT residual " + std::to_string(res.kkt_residual) + " above tolerance at final mu (" +
              (ls_failed ? "line search failed" : "Newton iteration cap") + ", " +
              std::to_string(res.newton_iterations) + " Newton steps)");
    if (constrained) {
      const StageFunction* worst = nullptr;
      double gmax = -std::numeric_limits<double>::infinity();
      for (const auto& g : def.constraints) {
        const double v = g->value(g->gather(w), theta);
        if (v > gmax) {
          gmax = v;
          worst = g.get();
        }
      }
      log::debug("stage solve: closest constraint " + worst->name() + " at " + std::to_string(gmax));
    }
  }
  return res;
}

StageCurvature stage_curvature(const StageDef& def, const Vector& w, const Vector& theta, double mu) {
  const int d = static_cast<int>(w.size());
  StageCurvature c;
  c.L = Matrix::Zero(d, d);
  c.L_theta = Matrix::Zero(d, theta.size());
  for (const auto& f : def.costs) {
    const Vector wl = f->gather(w);
    scatter_add(*f, f->hessian(wl, theta), c.L);
    const Matrix mt = f->mixed_theta(wl, theta);
    const auto& idx = f->indices();
    for (std::size_t i = 0; i < idx.size(); ++i) c.L_theta.row(idx[i]) += mt.row(i);
  }
  if (mu > 0.0) {
    for (const auto& g : def.constraints) {
      const Vector wl = g->gather(w);
      const double gv = g->value(wl, theta);
      const Vector gg = g->gradient(wl, theta);
      scatter_add(*g, (gg * gg.transpose()).eval(), c.L, mu / (gv * gv));
      scatter_add(*g, g->hessian(wl, theta), c.L, -mu / gv);
    }
  }
  c.L = 0.5 * (c.L + c.L.transpose()).eval();
  return c;
}

// Generic functions

LinearInequality::LinearInequality(std::vector<int> indices, Vector a, double b, std::string name)
    : StageFunction(std::move(indices), std::move(name)), a_(std::move(a)), b_(b) {
  if (a_.size() != local_dim()) throw ConfigError("linear inequality: coefficient size mismatch");
}
double LinearInequality::value(const Vector& w, const Vector&) const { return a_.dot(w) - b_; }
Vector LinearInequality::gradient(const Vector&, const Vector&) const { return a_; }
Matrix LinearInequality::hessian(const Vector& w, const Vector&) const { return Matrix::Zero(w.size(), w.size()); }

namespace {
std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ConfigError("paired index blocks must have equal size");
  std::vector<int> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}
}  // namespace

SeparationInequality::SeparationInequality(const std::vector<int>& a, const std::vector<int>& b, double d_min,
                                           std::string name)
    : StageFunction(concat(a, b), std::move(name)), half_(static_cast<int>(a.size())), d2_(d_min * d_min) {}

double SeparationInequality::value(const Vector& w, const Vector&) const {
  return d2_ - (w.head(half_) - w.tail(half_)).squaredNorm();
}
Vector SeparationInequality::gradient(const Vector& w, const Vector&) const {
  const Vector d = w.head(half_) - w.tail(half_);
  Vector g(2 * half_);
  g << -2 * d, 2 * d;
  return g;
}
Matrix SeparationInequality::hessian(const Vector&, const Vector&) const {
  Matrix H(2 * half_, 2 * half_);
  const Matrix I = Matrix::Identity(half_, half_);
  H << -2 * I, 2 * I, 2 * I, -2 * I;
  return H;
}

CouplingPenalty::CouplingPenalty(const std::vector<int>& a, const std::vector<int>& b, double kappa, std::string name)
    : StageFunction(concat(a, b), std::move(name)), half_(static_cast<int>(a.size())), kappa_(kappa) {}

double CouplingPenalty::value(const Vector& w, const Vector&) const {
  return 0.5 * kappa_ * (w.head(half_) - w.tail(half_)).squaredNorm();
}
Vector CouplingPenalty::gradient(const Vector& w, const Vector&) const {
  const Vector d = w.head(half_) - w.tail(half_);
  Vector g(2 * half_);
  g << kappa_ * d, -kappa_ * d;
  return g;
}
Matrix CouplingPenalty::hessian(const Vector&, const Vector&) const {
  Matrix H(2 * half_, 2 * half_);
  const Matrix I = Matrix::Identity(half_, half_);
  H << kappa_ * I, -kappa_ * I, -kappa_ * I, kappa_ * I;
  return H;
}

}  // namespace l2c
