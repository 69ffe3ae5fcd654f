#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "wavereg/kernels.hpp"
#include "wavereg/scenario.hpp"
#include "wavereg/verify.hpp"

using namespace wavereg;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> grid_points(const Grid1D& g) {
    std::vector<double> xs;
    for (int i = 0; i < g.n_nodes(); ++i) {
        xs.push_back(g.x(i));
    }
    return xs;
}

/// Max interior residual of the centred second difference against Pi S^2 - p1.
double pi_fd_residual(const PlantParams& plant, const ExoParams& exo, int n) {
    const Grid1D g(n);
    const PiSolution sol = solve_Pi(plant, exo, g);
    const Mat2 s2 = exo.S() * exo.S();
    double r = 0.0;
    for (int i = 1; i < n; ++i) {
        const Row2 d2 = (sol.Pi.row(i + 1) - 2.0 * sol.Pi.row(i) + sol.Pi.row(i - 1)) / (g.h() * g.h());
        const Row2 rhs = Row2(sol.Pi.row(i)) * s2 - plant.p1(g.x(i));
        r = std::max(r, (d2 - rhs).cwiseAbs().maxCoeff());
    }
    return r;
}

} // namespace

TEST_CASE("regulator solution matches an independent IVP integration", "[kernels][Pi]") {
    for (double tau : {0.0, 0.1, 1.0}) {
        const ScenarioParams s = benchmark_scenario(tau);
        const ExoParams exo = s.exo();
        const Grid1D g(100);
        const PiSolution sol = solve_Pi(s.plant, exo, g);
        const Mat2 s2 = exo.S() * exo.S();
        const Eigen::RowVector4d r0 = regulator_initial_row(s.plant, exo);
        const auto ref = testing::dopri_samples(
            [&](const std::vector<double>& y, std::vector<double>& dy, double x) {
                const Row2 pi(y[0], y[1]);
                const Row2 acc = pi * s2 - s.plant.p1(x);
                dy = {y[2], y[3], acc(0), acc(1)};
            },
            {r0(0), r0(1), r0(2), r0(3)}, grid_points(g));
        double worst = 0.0;
        for (int i = 0; i < g.n_nodes(); ++i) {
            for (int j = 0; j < 2; ++j) {
                worst = std::max(worst, std::abs(sol.Pi(i, j) - ref[i][j]));
                worst = std::max(worst, std::abs(sol.Pi_prime(i, j) - ref[i][2 + j]));
            }
        }
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("regulator boundary rows", "[kernels][Pi]") {
    const ScenarioParams s = benchmark_scenario(0.5);
    const ExoParams exo = s.exo();
    const Grid1D g(50);
    const PiSolution sol = solve_Pi(s.plant, exo, g);
    const Row2 pi0 = exo.p4() * (exo.S() * 0.5).exp();
    CHECK((Row2(sol.Pi.row(0)) - pi0).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((Row2(sol.Pi_prime.row(0)) + s.plant.q * pi0 - s.plant.p2).cwiseAbs().maxCoeff() <= 1e-12);
    // Pi(0) v(t) = p4 v(t + tau): the delayed output sees the current reference
    for (double t : {0.0, 1.3, 7.0}) {
        const Vec2 v = exo_state(exo, t);
        CHECK_THAT((Row2(sol.Pi.row(0)) * v).value(), WithinAbs(reference_signal(exo, exo_state(exo, t + 0.5)), 1e-12));
    }
}

TEST_CASE("regulator solution has a second-order finite-difference residual", "[kernels][Pi]") {
    const ScenarioParams s = benchmark_scenario(0.1);
    PlantParams plant = s.plant;
    plant.p1 = InDomainProfile::polynomial({1.0, -2.0, 3.0}, Row2(0.5, 1.0));
    const double r1 = pi_fd_residual(plant, s.exo(), 100);
    const double r2 = pi_fd_residual(plant, s.exo(), 200);
    const double r3 = pi_fd_residual(plant, s.exo(), 400);
    CHECK(testing::order(r1, r2) >= 1.9);
    CHECK(testing::order(r2, r3) >= 1.9);
}

TEST_CASE("regulator quadrature reports an unreachable tolerance", "[kernels][Pi]") {
    const ScenarioParams s = benchmark_scenario(0.1);
    PlantParams plant = s.plant;
    plant.p1 = InDomainProfile::polynomial({0, 0, 0, 0, 0, 0, 0, 0, 50.0}, Row2(1.0, 0.0));
    QuadratureOptions opts;
    opts.tolerance = 1e-14;
    CHECK_THROWS_AS(solve_Pi(plant, s.exo(), Grid1D(3), opts), QuadratureError);
    opts.panels_per_cell = 3;
    CHECK_THROWS_AS(solve_Pi(plant, s.exo(), Grid1D(10), opts), ConfigError);
}

TEST_CASE("tabulated p1 matches the polynomial profile it samples", "[kernels][Pi]") {
    const ScenarioParams s = benchmark_scenario(0.1);
    std::vector<double> xs;
    std::vector<Row2> vals;
    for (int i = 0; i <= 1000; ++i) {
        xs.push_back(i / 1000.0);
        vals.push_back(s.plant.p1(i / 1000.0));
    }
    PlantParams tab = s.plant;
    tab.p1 = InDomainProfile::table(xs, vals, "inline");
    const Grid1D g(100);
    const auto a = solve_Pi(s.plant, s.exo(), g);
    const auto b = solve_Pi(tab, s.exo(), g);
    // p1 is linear, so linear interpolation of its samples is exact
    CHECK((a.Pi - b.Pi).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("g kernels at the benchmark parameters", "[kernels][g]") {
    const GKernels k(0.5, 0.1);
    const Row2 g10 = k.g1(0.0);
    CHECK_THAT(g10(0), WithinAbs(-1.2615, 5e-4));
    CHECK_THAT(g10(1), WithinAbs(0.0766, 5e-4));
    CHECK(k.g1_prime(0.0).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((k.g1(1.0) + EtaState::gamma_eta() + k.g2(1.0)).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((k.g2(0.0) + 0.1 * g10).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("g kernels match an IVP integration from their value at zero", "[kernels][g]") {
    for (double c2 : {0.1, 0.5, 0.9}) {
        for (double omega : {0.5, 2.0}) {
            const GKernels k(omega, c2);
            const Mat2 S = rotation_generator(omega);
            const Mat2 s2 = S * S;
            const Grid1D g(50);
            const Row2 g10 = k.g1(0.0);
            const Row2 g20 = k.g2(0.0);
            const auto ref = testing::dopri_samples(
                [&](const std::vector<double>& y, std::vector<double>& dy, double) {
                    const Row2 a = Row2(y[0], y[1]) * s2;
                    const Row2 b = -Row2(y[4], y[5]) * S;
                    dy = {y[2], y[3], a(0), a(1), b(0), b(1)};
                },
                {g10(0), g10(1), 0.0, 0.0, g20(0), g20(1)}, grid_points(g));
            double worst = 0.0;
            for (int i = 0; i < g.n_nodes(); ++i) {
                const Row2 a = k.g1(g.x(i));
                const Row2 ap = k.g1_prime(g.x(i));
                const Row2 b = k.g2(g.x(i));
                for (int j = 0; j < 2; ++j) {
                    worst = std::max({worst, std::abs(a(j) - ref[i][j]), std::abs(ap(j) - ref[i][2 + j]),
                                      std::abs(b(j) - ref[i][4 + j])});
                }
            }
            CHECK(worst <= 1e-8);
        }
    }
}

TEST_CASE("g kernel denominator stays away from zero across c2", "[kernels][g]") {
    // |(2c2 - 1) e^{-i w} - e^{i w}| >= 1 - |2c2 - 1| > 0 on 0 < c2 < 1
    for (double c2 = 0.01; c2 < 1.0; c2 += 0.01) {
        for (double omega : {0.1, 0.5, 3.14159, 10.0}) {
            CHECK_NOTHROW(GKernels(omega, c2));
        }
    }
    CHECK_THROWS_AS(GKernels(0.5, 0.0), ConfigError);
    CHECK_THROWS_AS(GKernels(0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(GKernels(0.0, 0.5), ConfigError);
}

TEST_CASE("theta kernels match an IVP integration", "[kernels][f]") {
    for (double theta : {0.25, -0.2, 0.0}) {
        const ThetaKernels f(theta, 0.1);
        const Mat2 sc = companion(theta);
        const Mat2 s2 = sc * sc;
        const Grid1D g(40);
        const auto ref = testing::dopri_samples(
            [&](const std::vector<double>& y, std::vector<double>& dy, double) {
                const Row2 a = Row2(y[0], y[1]) * s2;
                const Row2 b = -Row2(y[4], y[5]) * sc;
                dy = {y[2], y[3], a(0), a(1), b(0), b(1)};
            },
            {1.0, 0.0, 0.0, 0.0, -0.1, 0.0}, grid_points(g));
        double worst = 0.0;
        for (int i = 0; i < g.n_nodes(); ++i) {
            const double x = g.x(i);
            for (int j = 0; j < 2; ++j) {
                worst = std::max({worst, std::abs(f.f1(x)(j) - ref[i][j]), std::abs(f.f1_prime(x)(j) - ref[i][2 + j]),
                                  std::abs(f.f2(x)(j) - ref[i][4 + j])});
            }
        }
        CHECK(worst <= 1e-8);
        CHECK((f.boundary_row() - (f.f1(1.0) + f.f2(1.0))).norm() == 0.0);
    }
}

TEST_CASE("theta kernels are the g kernels in canonical coordinates", "[kernels][identity]") {
    const ScenarioParams s = benchmark_scenario(0.1);
    const ExoParams exo = s.exo();
    const KernelTable k = build_kernel_table(s.plant, exo, s.c2, Grid1D(100));
    const CanonicalForm cf = canonical_form(rotation_generator(exo.omega()), k.g1_0);
    const EtaState eta = eta_initial(k.gamma1, exo);
    const auto good = verify_f_g_identity(make_theta_kernels(exo.theta(), s.c2), k, cf, eta);
    CHECK(good.f1_residual <= 1e-10);
    CHECK(good.f2_residual <= 1e-10);
    CHECK(good.disturbance_row_residual <= 1e-10);
    const auto bad = verify_f_g_identity(make_theta_kernels(0.3, s.c2), k, cf, eta);
    CHECK(bad.f1_residual > 1e-3);
    CHECK(bad.disturbance_row_residual > 1e-3);
}

TEST_CASE("kernel table rows", "[kernels]") {
    const ScenarioParams s = benchmark_scenario(0.1);
    const Grid1D g(64);
    const KernelTable k = build_kernel_table(s.plant, s.exo(), s.c2, g);
    CHECK(k.Pi.rows() == g.n_nodes());
    CHECK((k.gamma1 - (Row2(k.Pi.row(g.n_cells())) - s.plant.p3)).norm() == 0.0);
    CHECK((k.g1_0 - GKernels(0.5, 0.1).g1(0.0)).norm() <= 1e-15);
}

TEST_CASE("backstepping pair round trip is second order", "[kernels][backstep]") {
    const std::vector<int> base{100, 200, 400};
    std::vector<double> mild;
    for (int n : base) {
        mild.push_back(detail::backstep_roundtrip_error(2.0, 1.0, n));
    }
    CHECK(testing::order(mild[0], mild[1]) >= 1.9);
    CHECK(testing::order(mild[1], mild[2]) >= 1.9);
    const auto grids = backstep_grids(base, 200.0, 1.0);
    CHECK(grids.front() >= 8 * 201);
    std::vector<double> stiff;
    for (int n : grids) {
        stiff.push_back(detail::backstep_roundtrip_error(200.0, 1.0, n));
    }
    CHECK(testing::order(stiff[0], stiff[1]) >= 1.9);
    CHECK(testing::order(stiff[1], stiff[2]) >= 1.9);
}

TEST_CASE("backstepping forward map against quadrature of a closed form", "[kernels][backstep]") {
    // eps = 1: forward gives 1 + (c0 + q)(e^{q x} - 1)/q
    const double c0 = 3.0;
    const double q = 1.0;
    const Grid1D g(800);
    const WaveState s{GridField::Ones(g.n_nodes()), g.zeros(), 0.0};
    const WaveState f = backstep_forward(s, c0, q, g.h());
    for (int i = 0; i < g.n_nodes(); i += 80) {
        CHECK_THAT(f.disp(i), WithinAbs(1.0 + (c0 + q) * (std::exp(q * g.x(i)) - 1.0) / q, 1e-5));
    }
}

TEST_CASE("verify_all passes on the benchmark and flags a wrong theta", "[kernels][verify]") {
    const ScenarioParams s = benchmark_scenario(0.1);
    const VerifyReport rep = verify_all(s);
    for (const auto& c : rep.checks) {
        INFO(c.name << " h=" << c.grid_h << " value=" << c.value << " limit=" << c.limit);
        CHECK(c.passed);
    }
    VerifyOptions wrong;
    wrong.theta_override = 0.3;
    const VerifyReport bad = verify_all(s, wrong);
    CHECK_FALSE(bad.all_passed());
    const CheckResult* c = bad.find("f1_equals_g1_Tinv", 0.01);
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->passed);
}
