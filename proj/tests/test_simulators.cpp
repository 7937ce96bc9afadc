#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "mmn/errors.hpp"
#include "mmn/simulators.hpp"
#include "test_util.hpp"

using namespace mmn;

TEST_CASE("sine forward exact values") {
    CHECK(sine_forward(0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sine_forward(1.0 / 6.0, 1.0 / 3.0) == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(sine_forward(-1.0 / 6.0, 1.0 / 3.0) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("arm forward exact values") {
    const auto at_rest = arm_forward({0.0, 0.0, 0.0, 0.0});
    CHECK(at_rest[0] == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(at_rest[1] == doctest::Approx(2.0).epsilon(1e-12));

    const auto swung = arm_forward({1.0, 3.14159265358979323846 / 2.0, 0.0, 0.0});
    CHECK(swung[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(swung[1] == doctest::Approx(0.0).scale(1).epsilon(1e-9));

    const auto elbow = arm_forward({0.0, 0.0, 3.14159265358979323846 / 2.0, 0.0});
    CHECK(elbow[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(elbow[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("problem definitions") {
    const auto sine = sine_problem();
    CHECK(sine.dim_x == 2);
    CHECK(sine.dim_y == 1);
    const auto arm = arm_problem();
    CHECK(arm.dim_x == 4);
    CHECK(arm.dim_y == 2);
    const auto shell = shell_problem();
    CHECK(shell.dim_x == 8);
    CHECK(shell.dim_y == 201);
    CHECK_THROWS_AS((void)problem_by_name("nonesuch"), ConfigError);

    // Gaussian 95% interval arithmetic: dim 1 is +-1.96*0.25, dims 2-4 +-0.98.
    CHECK(arm.bounds.hi[0] == doctest::Approx(0.49).epsilon(1e-12));
    CHECK(arm.bounds.lo[0] == doctest::Approx(-0.49).epsilon(1e-12));
    for (int d = 1; d < 4; ++d) {
        CHECK(arm.bounds.hi[d] == doctest::Approx(0.98).epsilon(1e-12));
        CHECK(arm.bounds.lo[d] == doctest::Approx(-0.98).epsilon(1e-12));
    }
}

TEST_CASE("prior sampling statistics") {
    const std::size_t n = 100000;

    SUBCASE("sine: uniform support and mean") {
        const auto x = sample_prior(sine_problem(), n, 7);
        double mean0 = 0.0, mean1 = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            CHECK(x(r, 0) >= -1.0f);
            CHECK(x(r, 0) <= 1.0f);
            mean0 += x(r, 0);
            mean1 += x(r, 1);
        }
        // 5 standard errors of a uniform on [-1,1] at n = 1e5 is ~0.009.
        CHECK(std::abs(mean0 / n) < 0.02);
        CHECK(std::abs(mean1 / n) < 0.02);
    }

    SUBCASE("arm: per-dimension gaussian variance") {
        const auto x = sample_prior(arm_problem(), n, 11);
        double sum = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            sum += x(r, 0);
            sq += static_cast<double>(x(r, 0)) * x(r, 0);
        }
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        // SE(var) ~ var * sqrt(2/n); 5 SE at n = 1e5.
        const double se = (1.0 / 16.0) * std::sqrt(2.0 / n);
        CHECK(std::abs(var - 1.0 / 16.0) < 5 * se);
    }

    SUBCASE("arm: 95% of samples inside the bounds per dimension") {
        const auto problem = arm_problem();
        const auto x = sample_prior(problem, n, 13);
        for (int d = 0; d < 4; ++d) {
            std::size_t inside = 0;
            for (std::size_t r = 0; r < n; ++r)
                if (x(r, d) >= problem.bounds.lo[d] && x(r, d) <= problem.bounds.hi[d]) ++inside;
            const double frac = static_cast<double>(inside) / n;
            CHECK(frac > 0.94);
            CHECK(frac < 0.96);
        }
    }

    SUBCASE("shell: lattice endpoints map exactly") {
        CHECK((30.0 - 50.0) / 20.0 == -1.0);
        CHECK((70.0 - 50.0) / 20.0 == 1.0);
        const auto problem = shell_problem();
        const auto x = sample_prior(problem, 20000, 3);
        std::set<float> lattice;
        for (int v = 30; v <= 70; ++v)
            lattice.insert(static_cast<float>((static_cast<double>(v) - 50.0) / 20.0));
        CHECK(lattice.size() == 41);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(lattice.count(x.data()[i]) == 1);
    }

    SUBCASE("sampling is deterministic in the seed") {
        const auto a = sample_prior(arm_problem(), 512, 21);
        const auto b = sample_prior(arm_problem(), 512, 21);
        const auto c = sample_prior(arm_problem(), 512, 22);
        CHECK(a == b);
        CHECK_FALSE(a == c);
    }
}

TEST_CASE("builtin simulate is pure and matches the scalar formulas") {
    const auto problem = sine_problem();
    const auto handle = builtin_simulator(problem);
    const auto x = sample_prior(problem, 64, 5);
    const auto y1 = simulate(handle, x);
    const auto y2 = simulate(handle, x);
    CHECK(y1 == y2);
    for (std::size_t r = 0; r < x.rows(); ++r)
        CHECK(y1(r, 0) == static_cast<float>(sine_forward(x(r, 0), x(r, 1))));
}

#ifndef MMN_SINE_SIM
#error "MMN_SINE_SIM must point at the csv_sine_sim helper"
#endif

TEST_CASE("external file-exchange adapter") {
    const auto dir = testutil::make_temp_dir("external");
    ProblemSpec problem = sine_problem();
    problem.binding = SimulatorBinding::External;

    SUBCASE("wraps a known function") {
        const auto handle = external_simulator(problem, MMN_SINE_SIM, dir.string());
        const Matrixf x = Matrixf::from_rows(1, 2, {0.0f, 0.0f});
        const Matrixf y = external_simulate(handle, x);
        CHECK(y.rows() == 1);
        CHECK(y(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    }

    SUBCASE("matches the builtin on a batch, order preserved") {
        const auto handle = external_simulator(problem, MMN_SINE_SIM, dir.string());
        const Matrixf x = Matrixf::from_rows(3, 2, {0.1f, 0.2f, -0.4f, 0.9f, 0.5f, -0.5f});
        const Matrixf via_adapter = external_simulate(handle, x);
        const Matrixf via_builtin = simulate(builtin_simulator(sine_problem()), x);
        CHECK(via_adapter.rows() == 3);
        for (std::size_t r = 0; r < 3; ++r)
            CHECK(via_adapter(r, 0) == doctest::Approx(via_builtin(r, 0)).epsilon(1e-6));
    }

    SUBCASE("nonzero exit becomes a simulator error") {
        const auto handle = external_simulator(problem, "false", dir.string());
        CHECK_THROWS_AS((void)external_simulate(handle, Matrixf(2, 2)), SimulatorError);
    }

    SUBCASE("row-count mismatch is rejected") {
        // `true` exits 0 without writing a response file.
        const auto handle = external_simulator(problem, "true", dir.string());
        std::filesystem::remove(dir / "response.csv");
        CHECK_THROWS_AS((void)external_simulate(handle, Matrixf(2, 2)), SimulatorError);
    }
}
