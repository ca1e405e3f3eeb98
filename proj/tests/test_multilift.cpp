#include <gtest/gtest.h>

#include <l2c/multilift_problems.hpp>

#include <random>

#include "dense_oracles.hpp"

namespace l2c {
namespace {

using testing::fd_jacobian;

Vector random_load_state(std::mt19937& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector x(13);
  for (int i = 0; i < 13; ++i) x(i) = n01(rng);
  x.segment<4>(6).normalize();
  x.segment<3>(10) *= 0.5;
  return x;
}

Vector hover_state() {
  Vector x = Vector::Zero(13);
  x(6) = 1.0;
  return x;
}

TEST(Rotation, MatchesAxisAngleAndIsOrthonormal) {
  const Vec4 q = quat_from_axis_angle(Vec3(0, 0, 1), M_PI / 2);
  const Mat3 R = quat_to_rot(q);
  EXPECT_NEAR((R * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((R * R.transpose() - Mat3::Identity()).norm(), 0.0, 1e-15);
}

TEST(Rotation, DerivativesMatchFiniteDifferences) {
  std::mt19937 rng(3);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 10; ++t) {
    Vector q(4);
    for (int i = 0; i < 4; ++i) q(i) = n01(rng);
    const Vec3 v(n01(rng), n01(rng), n01(rng));
    auto rv = [&](const Vector& z) -> Vector { return quat_to_rot(z) * v; };
    auto rtv = [&](const Vector& z) -> Vector { return quat_to_rot(z).transpose() * v; };
    EXPECT_LT((Matrix(d_rot_times(q, v)) - fd_jacobian(rv, q)).norm(), 1e-8);
    EXPECT_LT((Matrix(d_rot_transpose_times(q, v)) - fd_jacobian(rtv, q)).norm(), 1e-8);
  }
}

TEST(LoadAccel, HoverIsEquilibrium) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  Vector u(6);
  u << 0, 0, cfg.m_l * cfg.g, 0, 0, 0;
  const Vector a = load_accel(cfg, hover_state(), u);
  EXPECT_LT(a.norm(), 1e-14);
}

TEST(LoadAccel, FreeFall) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  const Vector a = load_accel(cfg, hover_state(), Vector::Zero(6));
  EXPECT_NEAR(a(2), -cfg.g, 1e-14);
  EXPECT_LT(a.head<2>().norm() + a.tail<3>().norm(), 1e-14);
}

// Newton on the implicit equations, written independently of the 6x6 assembly.
TEST(LoadAccel, MatchesImplicitRootFinder) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.r_g = Vec3(0.03, 0, 0);
  std::mt19937 rng(11);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 10; ++t) {
    const Vector x = random_load_state(rng);
    Vector u(6);
    for (int i = 0; i < 6; ++i) u(i) = 10.0 * n01(rng);
    const Vec3 v = x.segment<3>(3), w = x.segment<3>(10);
    const Vec3 gb = quat_to_rot(x.segment<4>(6)).transpose() * Vec3(0, 0, cfg.g);
    const Vec3& r = cfg.r_g;
    const double m = cfg.m_l;
    auto residual = [&](const Vector& z) -> Vector {
      const Vec3 vd = z.head<3>(), wd = z.tail<3>();
      Vector res(6);
      res.head<3>() = m * (vd + w.cross(v) + wd.cross(r) + w.cross(w.cross(r))) - u.head<3>() + m * gb;
      const Vec3 mcp = -m * r.cross(vd + w.cross(v)) - m * r.cross(gb);
      res.tail<3>() = cfg.J_l * wd + w.cross(cfg.J_l * w) - u.tail<3>() - mcp;
      return res;
    };
    Vector z = Vector::Zero(6);
    for (int it = 0; it < 20; ++it) {
      const Vector r0 = residual(z);
      if (r0.norm() < 1e-13) break;
      z -= fd_jacobian(residual, z, 1e-4).lu().solve(r0);
    }
    EXPECT_LT((load_accel(cfg, x, u) - z).norm(), 1e-10);
  }
}

TEST(LoadAccel, SingularCouplingRejected) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.J_l = Mat3::Zero();
  EXPECT_THROW(LoadAccel{cfg}, DomainError);
}

TEST(LoadModel, StepJacobiansMatchFiniteDifferences) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.r_g = Vec3(0.02, -0.03, 0.01);
  LoadModel model(cfg);
  std::mt19937 rng(5);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 5; ++t) {
    const Vector x = random_load_state(rng);
    Vector u(6);
    for (int i = 0; i < 6; ++i) u(i) = 5.0 * n01(rng);
    Matrix fx, fu;
    model.jacobians(x, u, Vector(), fx, fu);
    const Matrix fx_fd = fd_jacobian([&](const Vector& z) { return model.step(z, u, Vector()); }, x);
    const Matrix fu_fd = fd_jacobian([&](const Vector& z) { return model.step(x, z, Vector()); }, u);
    EXPECT_LT(testing::rel_err(fx, fx_fd), 1e-5);
    EXPECT_LT(testing::rel_err(fu, fu_fd), 1e-5);
  }
}

TEST(LoadModel, EnergyConservedInFreeMotion) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.dt = 1e-3;
  LoadModel model(cfg);
  Vector x = hover_state();
  x.segment<3>(3) = Vec3(0.5, -0.2, 1.0);
  x.segment<4>(6) = quat_from_axis_angle(Vec3(1, 1, 0), 0.3);
  x.segment<3>(10) = Vec3(0.4, -0.7, 1.1);
  auto energy = [&](const Vector& s) {
    const Vec3 w = s.segment<3>(10);
    return 0.5 * cfg.m_l * s.segment<3>(3).squaredNorm() + 0.5 * w.dot(cfg.J_l * w) + cfg.m_l * cfg.g * s(2);
  };
  const double e0 = energy(x);
  double worst_norm = 0.0;
  for (int k = 0; k < 1000; ++k) {
    x = model.step(x, Vector::Zero(6), Vector());
    worst_norm = std::max(worst_norm, std::abs(x.segment<4>(6).norm() - 1.0));
  }
  EXPECT_LT(std::abs(energy(x) - e0) / std::abs(e0), 1e-6);
  EXPECT_LT(worst_norm, 1e-9);
}

TEST(CableModel, EquilibriumUnchanged) {
  CableModel model(0.1);
  Vector x(8);
  x << 0, 0, 1, 0, 0, 0, 5.0, 0;
  const Vector y = model.step(x, Vector::Zero(4), Vector());
  EXPECT_LT((y - x).norm(), 1e-15);
}

TEST(CableModel, FullTurnReturnsToStart) {
  CableModel model(1e-3);
  Vector x = Vector::Zero(8);
  x(0) = 1.0;
  x(5) = 2.0 * M_PI;
  for (int k = 0; k < 1000; ++k) x = model.step(x, Vector::Zero(4), Vector());
  EXPECT_LT((x.head<3>() - Vec3(1, 0, 0)).norm(), 1e-6);
}

TEST(CableModel, DirectionStaysUnitAndJacobiansMatchFd) {
  CableModel model(0.1);
  std::mt19937 rng(9);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    Vector x(8), u(4);
    for (int i = 0; i < 8; ++i) x(i) = n01(rng);
    for (int i = 0; i < 4; ++i) u(i) = 3.0 * n01(rng);
    x.head<3>().normalize();
    const Vector y = model.step(x, u, Vector());
    EXPECT_NEAR(y.head<3>().norm(), 1.0, 1e-12);
    Matrix fx, fu;
    model.jacobians(x, u, Vector(), fx, fu);
    EXPECT_LT(testing::rel_err(fx, fd_jacobian([&](const Vector& z) { return model.step(z, u, Vector()); }, x)),
              1e-5);
    EXPECT_LT(testing::rel_err(fu, fd_jacobian([&](const Vector& z) { return model.step(x, z, Vector()); }, u)),
              1e-5);
  }
}

TEST(Wrench, SymmetricVerticalHover) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  const double t = cfg.m_l * cfg.g / 3;
  const auto w = wrench_and_nullspace(cfg, Mat3::Identity(), {t, t, t}, {Vec3::UnitZ(), Vec3::UnitZ(), Vec3::UnitZ()});
  EXPECT_NEAR(w.wrench(2), cfg.m_l * cfg.g, 1e-12);
  EXPECT_LT(w.wrench.head<2>().norm() + w.wrench.tail<3>().norm(), 1e-12);
  EXPECT_EQ(w.N.rows(), 9);
  EXPECT_EQ(w.N.cols(), 3);
  EXPECT_LT((w.N.transpose() * w.N - Matrix::Identity(3, 3)).norm(), 1e-12);
  std::mt19937 rng(2);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 100; ++k) {
    Vector z(3);
    for (int i = 0; i < 3; ++i) z(i) = n01(rng);
    EXPECT_LT((w.P * w.N * z).norm(), 1e-12);
  }
  EXPECT_LT((w.P * w.P_pinv - Matrix::Identity(6, 6)).norm(), 1e-12);
}

TEST(Wrench, UniformAllocationOfStaticWrench) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  const auto w = wrench_and_nullspace(cfg, Mat3::Identity(), {1, 1, 1}, {Vec3::UnitZ(), Vec3::UnitZ(), Vec3::UnitZ()});
  const Vector t = w.P_pinv * static_wrench(cfg);
  for (int i = 0; i < 3; ++i) EXPECT_LT((t.segment<3>(3 * i) - Vec3(0, 0, cfg.m_l * cfg.g / 3)).norm(), 1e-12);
}

TEST(Wrench, DegenerateAttachmentsRejected) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.r = {Vec3(0.1, 0, 0), Vec3(0.2, 0, 0), Vec3(0.3, 0, 0)};
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(wrench_and_nullspace(cfg, Mat3::Identity(), {1, 1, 1}, {Vec3::UnitZ(), Vec3::UnitZ(), Vec3::UnitZ()}),
               ConfigError);
  EXPECT_NO_THROW(MultiliftConfig::symmetric(3).validate());
}


// Random interior point of the full stage vector (hover-like, perturbed).
Vector random_full_stage(const MultiliftConfig& cfg, const StageLayout& L, std::mt19937& rng) {
  std::normal_distribution<double> n01;
  Vector w = Vector::Zero(L.dim);
  for (int i = 0; i < L.dim; ++i) w(i) = 0.3 * n01(rng);
  w.segment<4>(L.x_offset[0] + 6) = Vec4(1, 0.1 * n01(rng), 0.1 * n01(rng), 0.1 * n01(rng));
  for (int i = 0; i < cfg.n; ++i) {
    const int o = L.x_offset[i + 1];
    w.segment<3>(o) = (Vec3(0, 0, 1) + 0.3 * Vec3(n01(rng), n01(rng), n01(rng))).normalized();
    w(o + 6) = 8.0 + n01(rng);
  }
  return w;
}

void expect_derivatives_match(const StageFunction& f, const Vector& wl, const Vector& theta, double tol) {
  const Vector g = f.gradient(wl, theta);
  auto val = [&](const Vector& z) -> Vector { return Vector::Constant(1, f.value(z, theta)); };
  const Matrix g_fd = fd_jacobian(val, wl, 1e-6).transpose();
  EXPECT_LT(testing::rel_err(g, g_fd), tol) << f.name();
  auto grad = [&](const Vector& z) -> Vector { return f.gradient(z, theta); };
  const Matrix H_fd = fd_jacobian(grad, wl, 1e-6);
  EXPECT_LT(testing::rel_err(f.hessian(wl, theta), 0.5 * (H_fd + H_fd.transpose())), tol) << f.name();
}

TEST(Constraints, HoverThrustRequirement) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  const StageLayout L = make_stage_layout({13, 8, 8, 8}, {6, 4, 4, 4}, false, 0);
  ThrustLimit thrust(cfg, 0, L, 1);
  Vector w = Vector::Zero(31);
  w(6) = 1.0;
  w(15) = cfg.m_l * cfg.g;  // hover wrench
  w(21) = 1.0;              // d = e3
  w(25) = 5.0;              // t
  const Vec3 f = thrust.thrust(w, nullptr);
  EXPECT_NEAR(f.norm(), 14.81, 1e-12);
  cfg.f_max = 14.81 + 1e-9;
  EXPECT_LT(ThrustLimit(cfg, 0, L, 1).value(w, Vector()), 0.0);
  cfg.f_max = 14.81 - 1e-9;
  EXPECT_GT(ThrustLimit(cfg, 0, L, 1).value(w, Vector()), 0.0);
}

TEST(Constraints, SeparationBoundaryIsZero) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  auto a = std::make_shared<CablePositionMap>(cfg, 0, 0, 19);
  auto b = std::make_shared<CablePositionMap>(cfg, 1, 0, 27);
  QuadSeparation sep(a, b, cfg.d_min_q, "sep");
  // Identity attitude, both cables vertical: distance is |r_0 - r_1|.
  const double dist = (cfg.r[0] - cfg.r[1]).norm();
  QuadSeparation at_boundary(a, b, dist, "sep");
  Vector w = Vector::Zero(20);
  w(3) = 1.0;
  w(9) = 1.0;
  w(13) = 1.0;
  w(19) = 1.0;
  EXPECT_NEAR(at_boundary.value(w, Vector()), 0.0, 1e-14);
  EXPECT_LT(sep.value(w, Vector()), 0.0);
}

TEST(Constraints, FullProblemDerivativesMatchFiniteDifferences) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.r_g = Vec3(0.02, 0.01, 0.0);
  cfg.obstacles = {Vec3(1.0, 0.5, 1.5)};
  const StageLayout L = make_stage_layout({13, 8, 8, 8}, {6, 4, 4, 4}, false, 0);
  std::vector<StageFunctionPtr> fns;
  std::vector<QuadPositionPtr> pos;
  for (int i = 0; i < 3; ++i) pos.push_back(std::make_shared<CablePositionMap>(cfg, i, 0, L.x_offset[i + 1]));
  fns.push_back(std::make_shared<QuadSeparation>(pos[0], pos[1], cfg.d_min_q, "sep"));
  fns.push_back(std::make_shared<QuadObstacle>(pos[2], cfg.obstacles[0], cfg.d_min_o, "obs"));
  fns.push_back(std::make_shared<WrenchConsistency>(cfg, L, 10.0));
  std::mt19937 rng(17);
  for (int t = 0; t < 5; ++t) {
    const Vector w = random_full_stage(cfg, L, rng);
    for (const auto& f : fns) expect_derivatives_match(*f, f->gather(w), Vector(), 1e-5);
    ThrustLimit thrust(cfg, 1, L, 2);
    const Vector wl = thrust.gather(w);
    Matrix J;
    thrust.thrust(wl, &J);
    const Matrix J_fd = fd_jacobian([&](const Vector& z) -> Vector { return thrust.thrust(z, nullptr); }, wl);
    EXPECT_LT(testing::rel_err(J, J_fd), 1e-5);
  }
}

TEST(Constraints, ReferenceProblemDerivativesMatchFiniteDifferences) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.obstacles = {Vec3(0.5, 0.5, 2.0)};
  const auto ref = make_load_reference(cfg, Vec3(0, 0, 1), Vec3(1, 0, 1));
  const Problem pb = cable_reference_problem(cfg, ref);
  const auto hp = default_reference_theta();
  const StageLayout L = pb.stage_layout(3);
  std::mt19937 rng(23);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 5; ++t) {
    Vector w(L.dim);
    for (int i = 0; i < L.dim; ++i) w(i) = 0.2 * n01(rng);
    w.segment<4>(6) = Vec4(1, 0.1 * n01(rng), 0.1 * n01(rng), 0.1 * n01(rng));
    w.segment(L.u_offset[0], 6) += static_wrench(cfg);
    for (const auto& f : pb.stage(3).constraints) expect_derivatives_match(*f, f->gather(w), hp.theta, 1e-5);
    for (const auto& f : pb.stage(3).costs) {
      expect_derivatives_match(*f, f->gather(w), hp.theta, 1e-5);
      const Vector wl = f->gather(w);
      const Matrix mt_fd = fd_jacobian([&](const Vector& th) { return f->gradient(wl, th); }, hp.theta);
      EXPECT_LT(testing::rel_err(f->mixed_theta(wl, hp.theta), mt_fd), 1e-6);
    }
  }
}

TEST(ReferenceProblem, HoverGivesUniformTensions) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.horizon = 10;
  const auto ref = make_load_reference(cfg, Vec3(0, 0, 1), Vec3(0, 0, 1));
  const Problem pb = cable_reference_problem(cfg, ref);
  const AdmmResult res = admm_run(pb, default_reference_theta(), 5);
  const CableReferences cr = export_cable_references(cfg, res);
  const Vec3 t_ref(0, 0, cfg.m_l * cfg.g / 3);
  // The separation barriers at the final mu = 1e-4 tilt the cables outward by O(mu).
  for (int k = 0; k < cfg.horizon; ++k) {
    EXPECT_LT(res.iterates.back().aux[k].norm(), 1e-3);
    for (int i = 0; i < 3; ++i) EXPECT_LT((cr.tension[k][i] - t_ref).norm(), 1e-3);
  }
}

TEST(ReferenceProblem, ExportedReferencesAreConsistent) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.r_g = Vec3(0.02, 0.02, 0);
  const auto ref = make_load_reference(cfg, Vec3(0, 0, 1), Vec3(1, 0, 1));
  const Problem pb = cable_reference_problem(cfg, ref);
  const AdmmResult res = admm_run(pb, default_reference_theta(), 5);
  const CableReferences cr = export_cable_references(cfg, res);
  const Matrix P = wrench_map(cfg);
  for (int k = 0; k < cfg.horizon; ++k) {
    Vector stack(9);
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(cr.x_ref[i][k].head<3>().norm(), 1.0, 1e-12);
      stack.segment<3>(3 * i) = cr.tension[k][i];
      EXPECT_GT(cr.tension[k][i].norm(), 0.0);
      EXPECT_LE(cr.tension[k][i].norm(), cfg.tension_max());
    }
    EXPECT_LT((P * stack - cr.load.controls[k]).norm(), 1e-8);
  }
}

TEST(ReferenceProblem, LargeOffsetSpreadsTensions) {
  auto spread = [](double rg) {
    MultiliftConfig cfg = MultiliftConfig::symmetric(3);
    cfg.horizon = 10;
    cfg.r_g = Vec3(rg, 0, 0);
    const auto ref = make_load_reference(cfg, Vec3(0, 0, 1), Vec3(0, 0, 1));
    const AdmmResult res = admm_run(cable_reference_problem(cfg, ref), default_reference_theta(), 5);
    return export_cable_references(cfg, res).spread;
  };
  EXPECT_GT(spread(0.039), spread(0.003));
}

TEST(ReferenceProblem, InsufficientTensionCapacityIsInfeasible) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.t_max = 5.0;
  const auto ref = make_load_reference(cfg, Vec3(0, 0, 1), Vec3(1, 0, 1));
  EXPECT_THROW(cable_reference_problem(cfg, ref), InfeasibleError);
}

TEST(FullProblem, ShapesAndFeasibleIterates) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.horizon = 10;
  const auto ref = make_load_reference(cfg, Vec3(0, 0, 1), Vec3(0.5, 0, 1));
  const AdmmResult rr = admm_run(cable_reference_problem(cfg, ref), default_reference_theta(), 5);
  const Problem pb = multilift_problem(cfg, ref, export_cable_references(cfg, rr));
  EXPECT_EQ(pb.num_agents(), 4);
  EXPECT_EQ(pb.layout.size(), 54);
  const auto hp = default_full_theta();
  const AdmmResult res = admm_run(pb, hp, 3);
  for (int k = 0; k <= cfg.horizon; ++k) {
    std::vector<Trajectory> copies;
    for (const auto& a : res.iterates.back().agents) copies.push_back(a.copy);
    const Vector w = stage_vector(pb, copies, res.iterates.back().aux[k], k);
    EXPECT_TRUE(strictly_feasible(pb.stage(k), w, hp.theta)) << "stage " << k;
  }
  for (const auto& a : res.iterates.back().agents) {
    for (const auto& x : a.primal.states) {
      const double nrm = x.size() == 13 ? x.segment<4>(6).norm() : x.head<3>().norm();
      EXPECT_NEAR(nrm, 1.0, 1e-9);
    }
  }
}

TEST(FullProblem, OffsetLoadWarmStartStaysUpright) {
  // Short reference solves leave copies that are not dynamically consistent; the load
  // warm start must come from the primal rollout or the offset load tumbles.
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  cfg.r_g = Vec3(0.0345, 0.0, 0.0);
  const auto ref = make_load_reference(cfg, Vec3(0, 0, 1), Vec3(1, 0, 1));
  const AdmmResult rr = admm_run(cable_reference_problem(cfg, ref), default_reference_theta(), 3);
  const CableReferences cr = export_cable_references(cfg, rr);
  const Problem pb = multilift_problem(cfg, ref, cr);
  const Trajectory& guess = pb.agents[0].initial_guess;
  ASSERT_EQ(guess.horizon(), cfg.horizon);
  for (int k = 0; k <= cfg.horizon; ++k) {
    EXPECT_NEAR(guess.states[k](2), 1.0, 0.2) << "step " << k;
    EXPECT_LT(guess.states[k].segment<3>(10).norm(), 1.0) << "step " << k;
  }
}

TEST(FeedbackAugmentation, ZeroErrorOrDisabledLeavesDirections) {
  MultiliftConfig cfg = MultiliftConfig::symmetric(3);
  Vector xs = hover_state();
  const std::vector<double> t{9.0, 10.0, 11.0};
  const std::vector<Vec3> d{Vec3(0, 0, 1), Vec3(0.1, 0, 1).normalized(), Vec3(0, 0.1, 1).normalized()};
  Matrix K = Matrix::Random(6, 13);
  auto same = [&](const std::vector<Vec3>& out) {
    for (int i = 0; i < 3; ++i) EXPECT_LT((out[i] - d[i]).norm(), 1e-14);
  };
  same(feedback_augmentation(cfg, xs, xs, t, d, K, 0.05));
  Vector xl = xs;
  xl.head<3>() += Vec3(0.3, -0.2, 0.1);
  same(feedback_augmentation(cfg, xl, xs, t, d, K, 0.0));
  const auto moved = feedback_augmentation(cfg, xl, xs, t, d, K, 0.1);
  EXPECT_GT((moved[0] - d[0]).norm(), 0.0);
  EXPECT_THROW(feedback_augmentation(cfg, xl, xs, t, d, K, 1.0), DomainError);
}

}  // namespace
}  // namespace l2c
