#include <doctest.h>

#include <cmath>

#include "hbm/bifurcation.hpp"
#include "support.hpp"

using namespace hbm;

namespace {

Branch sweep(const ResidualWorkspace& ws, double from, double to, double step, double max_step = 0.1) {
  ContinuationSettings s;
  s.omega_start = from;
  s.omega_end = to;
  s.path.step = step;
  s.path.max_step = max_step;
  return continue_branch(ws, s);
}

std::vector<Event> of_kind(const std::vector<Event>& events, EventKind kind) {
  std::vector<Event> out;
  for (const auto& e : events)
    if (e.kind == kind) out.push_back(e);
  return out;
}

int sign_changes(const std::vector<double>& v) {
  int n = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if ((v[i] < 0) != (v[i - 1] < 0)) ++n;
  return n;
}

double sigma_min(const Mat& a) { return Eigen::JacobiSVD<Mat>(a).singularValues().minCoeff(); }

Mat bordered(const Mat& g, const Vec& p, const Vec& q) {
  const Index m = g.rows();
  Mat b = Mat::Zero(m + 1, m + 1);
  b.topLeftCorner(m, m) = g;
  b.topRightCorner(m, 1) = p;
  b.bottomLeftCorner(1, m) = q.transpose();
  return b;
}

double augmented_det(const ResidualWorkspace& ws, const BranchPoint& p) {
  const Index m = ws.size();
  Mat a(m + 1, m + 1);
  a.topLeftCorner(m, m) = ws.jacobian_z(p.z, p.omega);
  a.topRightCorner(m, 1) = ws.jacobian_omega(p.z, p.omega);
  a.bottomRows(1) = p.tangent.transpose();
  return a.determinant();
}

}  // namespace

TEST_CASE("fold test function") {
  Vec t(4);
  t << 0.3, -0.2, 0.9, 0.0;
  CHECK(test_fold(t) == 0.0);
  t(3) = -0.25;
  CHECK(test_fold(t) == -0.25);
}

TEST_CASE("branch-point test function examples") {
  Mat hz(2, 2);
  hz << 0, 0, 0, 1;
  Vec t(3);
  t << 0.3, 0.4, 0.5;
  Vec hw(2);
  hw << 0, 1;
  CHECK(std::abs(test_bp(hz, hw, t)) <= 1e-15);
  hw << 1, 0;
  t << 1, 0, 0;
  CHECK(std::abs(test_bp(hz, hw, t)) == doctest::Approx(1.0));

  auto g = desk::rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat a = desk::random_vector(g, 25).reshaped(5, 5);
    const Vec w = desk::random_vector(g, 5), tt = desk::random_vector(g, 6);
    Mat full(6, 6);
    full.topLeftCorner(5, 5) = a;
    full.topRightCorner(5, 1) = w;
    full.bottomRows(1) = tt.transpose();
    const double phi = test_bp(a, w, tt);
    CHECK((phi > 0) == (full.determinant() > 0));
    CHECK(std::abs(phi) == doctest::Approx(sigma_min(full)).epsilon(1e-12));
  }
}

TEST_CASE("Neimark-Sacker test function examples") {
  CVec a(2);
  a << Complex(-0.1, 1), Complex(-0.1, -1);
  CHECK(test_ns(a) == doctest::Approx(-0.1));
  CVec b(2);
  b << Complex(0, 1), Complex(0, -1);
  CHECK(test_ns(b) == 0.0);
  CVec c(4);
  c << Complex(1, 0), Complex(-1, 0), Complex(-0.2, 2), Complex(-0.2, -2);
  CHECK(test_ns(c) != 0.0);
  CHECK(complex_pair_count(c) == 1);
  CHECK(critical_complex_real(c).value() == doctest::Approx(-0.2));
  CHECK_FALSE(is_neimark_sacker_point(c));
  CHECK(is_neimark_sacker_point(b));
  CVec two(4);
  two << Complex(0, 1), Complex(0, -1), Complex(1e-8, 2), Complex(1e-8, -2);
  CHECK_FALSE(is_neimark_sacker_point(two));
  CVec reals(2);
  reals << Complex(0, 0), Complex(-1, 0);
  CHECK_FALSE(critical_complex_real(reals).has_value());
  CHECK_FALSE(is_neimark_sacker_point(reals));
}

TEST_CASE("bordered solves") {
  const Vec e1 = Vec::Unit(2, 0);
  Mat g(2, 2);
  g << 0, 0, 0, 1;
  auto r = bordered_solve(g, e1, e1);
  CHECK(r.g == 0.0);
  CHECK(r.w.isApprox(e1));
  r = bordered_solve(Mat::Identity(2, 2), e1, e1);
  CHECK(r.g == doctest::Approx(-1.0));
  CHECK(r.w.isApprox(e1));

  SUBCASE("derivative of the bordered scalar") {
    const double alpha = 0.37;
    Mat ga(2, 2);
    ga << alpha, 0, 0, 1;
    const auto d = bordered_solve(ga, e1, e1);
    const auto a = bordered_solve_adjoint(ga, e1, e1);
    CHECK(d.g == doctest::Approx(-alpha));
    Mat dg(2, 2);
    dg << 1, 0, 0, 0;
    CHECK(g_derivative(dg, a.w, d.w) == doctest::Approx(-1.0));
  }

  SUBCASE("random families: sign of g flips with det G") {
    auto rg = desk::rng(42);
    for (int trial = 0; trial < 10; ++trial) {
      const Mat a = desk::random_vector(rg, 36).reshaped(6, 6);
      const Mat b = desk::random_vector(rg, 36).reshaped(6, 6);
      const auto [p, q] = seed_borders(a);
      for (int i = 0; i <= 200; ++i) {
        const double s = -1.0 + 2.0 * i / 200;
        const Mat gs = a + s * b;
        const double bd = bordered(gs, p, q).determinant();
        if (std::abs(bd) < 1e-6) continue;
        const double gv = bordered_solve(gs, p, q).g;
        const double det = gs.determinant();
        CHECK(gv * bd == doctest::Approx(det).epsilon(1e-9).scale(1e-12));
        CHECK(((gv > 0) == (det > 0)) == (bd > 0));
      }
    }
  }

  SUBCASE("adjoint solve is the transpose problem") {
    auto rg = desk::rng(43);
    const Mat a = desk::random_vector(rg, 25).reshaped(5, 5);
    const Vec p = desk::random_vector(rg, 5), q = desk::random_vector(rg, 5);
    const auto d = bordered_solve(a, p, q);
    const auto t = bordered_solve(a.transpose(), q, p);
    const auto adj = bordered_solve_adjoint(a, p, q);
    CHECK(adj.w.isApprox(t.w, 1e-12));
    CHECK(d.g == doctest::Approx(t.g).epsilon(1e-12));
  }

  SUBCASE("singular bordered matrix is reported") {
    CHECK_THROWS_AS(bordered_solve(Mat::Identity(2, 2), Vec::Unit(2, 0), Vec::Unit(2, 1)),
                    NumericalError);
  }
}

TEST_CASE("bordered scalar and determinant share their zero set on HB Jacobians") {
  const ResidualWorkspace ws(desk::duffing(), HarmonicGrid(5, 1, 128));
  const Branch b = sweep(ws, 0.9, 1.5, 0.01, 0.02);
  REQUIRE(b.status == RunStatus::complete);
  REQUIRE(ws.size() <= 30);
  // borders from a point between the two folds
  Index mid = 0;
  double best = INFINITY;
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    const double s = sigma_min(ws.jacobian_z(b.points[i].z, b.points[i].omega));
    if (s < best) {
      best = s;
      mid = static_cast<Index>(i);
    }
  }
  const auto [p, q] = seed_borders(ws.jacobian_z(b.points[mid].z, b.points[mid].omega));
  std::vector<double> gs, dets;
  for (const auto& pt : b.points) {
    const Mat hz = ws.jacobian_z(pt.z, pt.omega);
    const double bd = bordered(hz, p, q).determinant();
    if (std::abs(bd) < 1e-8) continue;
    const double gv = bordered_solve(hz, p, q).g;
    const double det = hz.determinant();
    CHECK(gv * bd == doctest::Approx(det).epsilon(1e-8).scale(1e-14));
    gs.push_back(gv * (bd > 0 ? 1 : -1));
    dets.push_back(det);
  }
  CHECK(sign_changes(dets) == 2);
  CHECK(sign_changes(gs) == sign_changes(dets));

  SUBCASE("NS-sized Hill operator") {
    const auto nes = desk::load("nes");
    const ResidualWorkspace wn(nes, HarmonicGrid(5, 2, 128));
    REQUIRE(wn.size() <= 30);
    auto rg = desk::rng(44);
    const Vec z = desk::random_vector(rg, wn.size(), 0.3);
    const Mat hz = wn.jacobian_z(z, 1.0);
    const auto [pp, qq] = seed_borders(hz);
    const double bd = bordered(hz, pp, qq).determinant();
    CHECK(bordered_solve(hz, pp, qq).g * bd == doctest::Approx(hz.determinant()).epsilon(1e-8));
  }
}

TEST_CASE("Duffing folds") {
  const double c = 0.05, k3 = 0.1, F = 0.2;
  const auto oracle = desk::hb1_folds(c, k3, F, 0.5, 2.5);
  REQUIRE(oracle.size() == 2);

  for (int nh : {1, 5}) {
    const ResidualWorkspace ws(desk::duffing(c, k3, F), HarmonicGrid(nh, 1, 64));
    Branch b = sweep(ws, 0.5, 2.5, 0.02);
    REQUIRE(b.status == RunStatus::complete);
    const auto events = annotate_branch(ws, b);

    std::vector<double> phi;
    for (const auto& p : b.points) phi.push_back(p.tests.fold);
    CHECK(sign_changes(phi) == 2);

    const auto folds = of_kind(events, EventKind::fold);
    REQUIRE(folds.size() == 2);
    CHECK(of_kind(events, EventKind::neimark_sacker).empty());
    for (const auto& f : folds) {
      CHECK(f.located);
      const Mat hz = ws.jacobian_z(f.point.z, f.point.omega);
      CHECK(sigma_min(hz) <= 1e-6 * hz.norm());
      if (nh == 1) {
        const double target = std::abs(f.point.omega - oracle[0]) < std::abs(f.point.omega - oracle[1])
                                  ? oracle[0]
                                  : oracle[1];
        CHECK(std::abs(f.point.omega - target) <= 1e-4 * target);
      }
    }
  }
}

TEST_CASE("linear branches have a constant-sign fold test and no events") {
  const ResidualWorkspace ws(desk::load("linear3"), HarmonicGrid(3, 3, 64));
  Branch b = sweep(ws, 0.1, 2.5, 0.05, 0.5);
  REQUIRE(b.status == RunStatus::complete);
  const auto events = annotate_branch(ws, b);
  std::vector<double> phi;
  for (const auto& p : b.points) phi.push_back(p.tests.fold);
  CHECK(sign_changes(phi) == 0);
  CHECK(events.empty());
  for (const auto& p : b.points) CHECK(p.stability == Stability::stable);

  SUBCASE("locating on a segment without a sign change is refused") {
    const auto problem = frequency_problem(ws);
    auto to_path = [](const BranchPoint& p) {
      PathPoint out;
      out.y.resize(p.z.size() + 1);
      out.y << p.z, p.omega;
      out.t = p.tangent;
      return out;
    };
    CHECK_THROWS_AS(locate_root(problem, to_path(b.points[3]), to_path(b.points[4]),
                                [](const PathPoint& p) { return test_fold(p.t); }),
                    InvalidInput);
  }
}

TEST_CASE("symmetry-breaking branch point of the two-well oscillator") {
  const auto model = desk::load("two_well");
  const ResidualWorkspace ws(model, HarmonicGrid(3, 1, 64));
  Branch b = sweep(ws, 4.0, 0.5, 0.02);
  REQUIRE(b.status == RunStatus::complete);
  const auto events = annotate_branch(ws, b);
  const auto bps = of_kind(events, EventKind::branch_point);
  REQUIRE(bps.size() == 1);
  const auto& bp = bps.front();
  CHECK(bp.located);

  // direct determinant of [h_z h_w; t^T] on the 8x8 system agrees in sign
  for (const auto& p : b.points) {
    const double det = augmented_det(ws, p);
    if (std::abs(p.tests.branch_point) > 1e-6) CHECK((det > 0) == (p.tests.branch_point > 0));
  }
  const double typical = std::abs(augmented_det(ws, b.points[b.points.size() / 2]));
  CHECK(std::abs(augmented_det(ws, bp.point)) <= 1e-6 * typical);
  // the symmetric branch carries no constant term, so h_w lies in range(h_z) there
  CHECK(std::abs(bp.point.z(0)) <= 1e-8);
}

TEST_CASE("h_z derivatives by central differences") {
  const auto model = desk::load("stop2");
  const ResidualWorkspace ws(model, HarmonicGrid(3, 2, 64));
  auto g = desk::rng(45);
  const Vec z = desk::random_vector(g, ws.size(), 0.8);
  const double w = 1.3;

  SUBCASE("linear-DOF coefficients give exact zeros") {
    for (Index k = 1; k < ws.size(); k += 2) {
      REQUIRE(is_linear_component(ws, k));
      CHECK(h_z_alpha_fd(ws, z, w, {Coordinate::Kind::z_component, k, {}}).isZero(0.0));
    }
  }

  SUBCASE("nonlinear block is confined to the nonlinear DOF") {
    const Mat d = h_z_alpha_fd(ws, z, w, {Coordinate::Kind::z_component, 2, {}});
    CHECK(d.norm() > 0.0);
    for (Index i = 0; i < ws.size(); ++i)
      for (Index j = 0; j < ws.size(); ++j)
        if (i % 2 == 1 || j % 2 == 1) CHECK(d(i, j) == 0.0);
  }

  SUBCASE("consistent over step sizes") {
    const Coordinate a{Coordinate::Kind::z_component, 4, {}};
    const Mat r = h_z_alpha_fd(ws, z, w, a, 1e-6);
    for (double eps : {1e-5, 1e-7}) CHECK(desk::rel_error(h_z_alpha_fd(ws, z, w, a, eps), r) <= 1e-4);
  }

  SUBCASE("frequency and parameter coordinates") {
    const Mat dw = h_z_alpha_fd(ws, z, w, {Coordinate::Kind::omega, 0, {}});
    CHECK(desk::rel_error(dw, assemble_dA_domega(model, ws.grid(), w)) <= 1e-8);
    const Mat df = h_z_alpha_fd(ws, z, w, {Coordinate::Kind::parameter, 0, "F"});
    CHECK(df.norm() <= 1e-8);
  }
}

TEST_CASE("eigenvalue derivatives") {
  SUBCASE("diagonal example") {
    Mat b(2, 2);
    b << 0.4, 0, 0, 2;
    Mat db(2, 2);
    db << 1, 0, 0, 0;
    const CVec d = eigenvalue_derivatives(CMat::Identity(2, 2), {0, 1}, db.cast<Complex>());
    CHECK(std::abs(d(0) - 1.0) <= 1e-15);
    CHECK(std::abs(d(1)) <= 1e-15);
  }

  SUBCASE("Duffing frequency derivative matches re-solved exponents") {
    const auto model = desk::duffing();
    const ResidualWorkspace ws(model, HarmonicGrid(5, 1, 128));
    Branch b = sweep(ws, 0.5, 2.0, 0.02);
    REQUIRE(b.status == RunStatus::complete);
    auto g = desk::rng(46);
    const Index m = ws.size();
    for (int trial = 0; trial < 10; ++trial) {
      const auto& p = b.points[static_cast<std::size_t>(desk::uniform(g, 0, b.points.size() - 1))];
      const double w = p.omega;
      const auto hill = hill_matrices(model, ws.grid(), w);
      const Mat hz = ws.jacobian_z(p.z, w);
      const auto s = hill_eigen(hz, hill, model.mass(), 1, ws.grid().rate(1, w), true);
      CMat bw = CMat::Zero(2 * m, 2 * m);
      bw.topLeftCorner(m, m) = -hill_delta1_domega(model, ws.grid(), w).cast<Complex>();
      bw.topRightCorner(m, m) = -h_z_alpha_fd(ws, p.z, w, {Coordinate::Kind::omega, 0, {}}).cast<Complex>();
      const CVec d = eigenvalue_derivatives(s.eigenvectors, s.selected, bw);

      const double h = 1e-6 * (1.0 + w);
      auto exps = [&](double ww) {
        return hill_eigen(ws.jacobian_z(p.z, ww), hill_matrices(model, ws.grid(), ww), model.mass(), 1,
                          ws.grid().rate(1, w))
            .floquet;
      };
      const CVec plus = exps(w + h), minus = exps(w - h);
      for (Index i = 0; i < s.floquet.size(); ++i) {
        auto nearest = [&](const CVec& set) {
          Index arg = 0;
          for (Index j = 1; j < set.size(); ++j)
            if (std::abs(set(j) - s.floquet(i)) < std::abs(set(arg) - s.floquet(i))) arg = j;
          return set(arg);
        };
        const Complex fd = (nearest(plus) - nearest(minus)) / (2 * h);
        CHECK(std::abs(d(i) - fd) <= 1e-4 * std::max(std::abs(fd), 1e-3));
      }
      // conjugate symmetry of the derivatives
      if (std::abs(s.floquet(0).imag()) > 1e-6) {
        for (Index i = 0; i < s.floquet.size(); ++i) {
          bool found = false;
          for (Index j = 0; j < s.floquet.size(); ++j)
            if (std::abs(s.floquet(j) - std::conj(s.floquet(i))) <= 1e-8 &&
                std::abs(d(j) - std::conj(d(i))) <= 1e-8 * (1.0 + std::abs(d(i))))
              found = true;
          CHECK(found);
        }
      }
    }
  }
}

TEST_CASE("Neimark-Sacker points of the absorber model") {
  const ResidualWorkspace ws(desk::load("nes"), HarmonicGrid(5, 2, 256));
  Branch b = sweep(ws, 0.8, 1.2, 0.005, 0.02);
  REQUIRE(b.status == RunStatus::complete);
  const auto events = annotate_branch(ws, b);
  const auto ns = of_kind(events, EventKind::neimark_sacker);
  REQUIRE(ns.size() >= 2);
  for (const auto& e : ns) {
    REQUIRE(e.located);
    const auto s = hill_spectrum(ws, e.point.z, e.point.omega);
    CHECK(is_neimark_sacker_point(s.floquet));
    int critical = 0;
    for (Index i = 0; i < s.floquet.size(); ++i)
      if (std::abs(s.floquet(i).real()) <= 1e-6 && s.floquet(i).imag() > 1e-3) ++critical;
    CHECK(critical == 1);
  }
}
