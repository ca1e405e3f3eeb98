#include "l2c/meta.hpp"

#include <cmath>
#include <string>

namespace l2c {

Mlp::Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ConfigError("an MLP needs at least input and output dimensions");
  int n = 0;
  for (std::size_t l = 1; l < dims_.size(); ++l) {
    if (dims_[l - 1] <= 0 || dims_[l] <= 0) throw ConfigError("MLP layer sizes must be positive");
    n += dims_[l - 1] * dims_[l] + dims_[l];
  }
  params_ = Vector::Zero(n);
}

Mlp Mlp::random(std::vector<int> dims, std::mt19937_64& rng) {
  Mlp net(std::move(dims));
  int o = 0;
  for (std::size_t l = 1; l < net.dims_.size(); ++l) {
    const int in = net.dims_[l - 1], out = net.dims_[l];
    const double b = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-b, b);
    for (int i = 0; i < in * out + out; ++i) net.params_(o + i) = u(rng);
    o += in * out + out;
  }
  return net;
}

void Mlp::set_params(const Vector& p) {
  if (p.size() != params_.size()) throw ConfigError("MLP parameter vector has the wrong length");
  params_ = p;
}

Vector Mlp::forward(const Vector& input, Matrix* jacobian) const {
  if (input.size() != input_dim()) throw ConfigError("MLP input dimension mismatch");
  const int L = static_cast<int>(dims_.size()) - 1;
  std::vector<Vector> act{input};  // post-activation per layer
  std::vector<Vector> pre;
  std::vector<int> off;
  int o = 0;
  for (int l = 0; l < L; ++l) {
    const int in = dims_[l], out = dims_[l + 1];
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
        params_.data() + o, out, in);
    const Vector z = W * act.back() + params_.segment(o + in * out, out);
    off.push_back(o);
    o += in * out + out;
    pre.push_back(z);
    if (l + 1 < L) {
      act.push_back(z.cwiseMax(0.0));
    } else {
      act.push_back((1.0 + (-z).array().exp()).inverse().matrix());
    }
  }
  if (jacobian) {
    const Vector& y = act.back();
    jacobian->setZero(output_dim(), param_count());
    // G = d output / d z_l, propagated backwards.
    Matrix G = (y.array() * (1.0 - y.array())).matrix().asDiagonal();
    for (int l = L - 1; l >= 0; --l) {
      const int in = dims_[l], out = dims_[l + 1];
      const Vector& a = act[l];
      for (int r = 0; r < out; ++r)
        jacobian->block(0, off[l] + r * in, G.rows(), in) = G.col(r) * a.transpose();
      jacobian->block(0, off[l] + in * out, G.rows(), out) = G;
      if (l > 0) {
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
            params_.data() + off[l], out, in);
        Matrix Gn = G * W;
        for (int c = 0; c < in; ++c)
          if (pre[l - 1](c) <= 0.0) Gn.col(c).setZero();
        G = std::move(Gn);
      }
    }
  }
  return act.back();
}

void adam_step(Vector& params, const Vector& grad, AdamState& st, const AdamOptions& o) {
  if (grad.size() != params.size()) throw ConfigError("Adam: gradient and parameter sizes differ");
  if (!grad.allFinite()) throw TrainingError("Adam: non-finite gradient");
  if (st.m.size() != params.size()) {
    st.m = Vector::Zero(params.size());
    st.v = Vector::Zero(params.size());
    st.t = 0;
  }
  ++st.t;
  st.m = o.beta1 * st.m + (1.0 - o.beta1) * grad;
  st.v = o.beta2 * st.v + (1.0 - o.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(o.beta1, st.t);
  const double c2 = 1.0 - std::pow(o.beta2, st.t);
  params.array() -= o.lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + o.eps);
}

UpperLoss upper_loss(const std::vector<Trajectory>& primal, const std::vector<Trajectory>& copies,
                     const std::vector<TrackingTarget>& targets) {
  if (primal.size() != copies.size() || primal.size() != targets.size())
    throw ConfigError("upper loss: agent counts differ");
  UpperLoss L;
  for (std::size_t i = 0; i < primal.size(); ++i) {
    const Trajectory& p = primal[i];
    const Trajectory& c = copies[i];
    const TrackingTarget& t = targets[i];
    const int N = p.horizon();
    if (c.horizon() != N || static_cast<int>(t.x_ref.size()) != N + 1 || static_cast<int>(t.u_ref.size()) != N)
      throw ConfigError("upper loss: horizon mismatch for agent " + std::to_string(i));
    AgentLoss a;
    for (int k = 0; k <= N; ++k) {
      const Vector ex = p.states[k] - t.x_ref[k];
      const Vector rx = p.states[k] - c.states[k];
      a.tracking += ex.dot(t.wx.cwiseProduct(ex));
      a.residual += rx.squaredNorm();
      a.dx.push_back(2.0 * t.wx.cwiseProduct(ex) + 2.0 * rx);
      a.dxc.push_back(-2.0 * rx);
    }
    for (int k = 0; k < N; ++k) {
      const Vector eu = p.controls[k] - t.u_ref[k];
      const Vector ru = p.controls[k] - c.controls[k];
      a.tracking += eu.dot(t.wu.cwiseProduct(eu));
      a.residual += ru.squaredNorm();
      a.du.push_back(2.0 * t.wu.cwiseProduct(eu) + 2.0 * ru);
      a.duc.push_back(-2.0 * ru);
    }
    L.total += a.tracking + a.residual;
    L.agents.push_back(std::move(a));
  }
  return L;
}

UpperLoss upper_loss(const AdmmIterate& last, const std::vector<TrackingTarget>& targets) {
  std::vector<Trajectory> p, c;
  for (const auto& a : last.agents) {
    p.push_back(a.primal);
    c.push_back(a.copy);
  }
  return upper_loss(p, c, targets);
}

Vector loss_theta_gradient(const UpperLoss& loss, const GradIterate& g) {
  if (loss.agents.size() != g.agents.size()) throw ConfigError("loss and gradient agent counts differ");
  if (g.agents.empty()) return Vector();
  const int p = static_cast<int>(g.agents.front().X.front().cols());
  Vector d = Vector::Zero(p);
  for (std::size_t i = 0; i < g.agents.size(); ++i) {
    const AgentLoss& a = loss.agents[i];
    const AgentGrad& G = g.agents[i];
    if (G.X.size() != a.dx.size() || G.U.size() != a.du.size())
      throw ConfigError("loss and gradient horizons differ for agent " + std::to_string(i));
    for (std::size_t k = 0; k < a.dx.size(); ++k) {
      d.noalias() += G.X[k].transpose() * a.dx[k];
      d.noalias() += G.Xc[k].transpose() * a.dxc[k];
    }
    for (std::size_t k = 0; k < a.du.size(); ++k) {
      d.noalias() += G.U[k].transpose() * a.du[k];
      d.noalias() += G.Uc[k].transpose() * a.duc[k];
    }
  }
  return d;
}

Vector assemble_grad(const UpperLoss& loss, const GradIterate& grads, const Vector& dtheta_draw,
                     const Matrix& net_jacobian, int offset) {
  const Vector dth = loss_theta_gradient(loss, grads);
  const int q = static_cast<int>(net_jacobian.rows());
  if (dth.size() != dtheta_draw.size() || offset < 0 || offset + q > dth.size())
    throw ConfigError("assemble_grad: network block does not fit the theta layout");
  const Vector draw = dth.segment(offset, q).cwiseProduct(dtheta_draw.segment(offset, q));
  return net_jacobian.transpose() * draw;
}

TrackingTarget load_tracking_target(const VectorSeq& x_ref, const VectorSeq& u_ref) {
  TrackingTarget t{x_ref, u_ref, Vector::Constant(13, 0.1), Vector::Constant(6, 0.1)};
  t.wx.head<3>().setOnes();
  return t;
}

TrackingTarget cable_tracking_target(const VectorSeq& x_ref, const VectorSeq& u_ref) {
  return TrackingTarget{x_ref, u_ref, Vector::Constant(8, 0.1), Vector::Constant(4, 0.1)};
}

}  // namespace l2c
