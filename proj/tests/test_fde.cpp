#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "frostab/fde.hpp"
#include "helpers.hpp"

using namespace frostab;

namespace {

SimConfig constant_history(std::vector<double> x0, double h, double horizon) {
    SimConfig cfg;
    cfg.step_h = h;
    cfg.horizon_t = horizon;
    cfg.history_constant = std::move(x0);
    return cfg;
}

// independent binomial-product evaluation of the coefficient sequence:
// c_j = (-1)^j * alpha (alpha-1) ... (alpha-j+1) / j!
double gl_coeff_direct(double alpha, std::size_t j) {
    double v = 1.0;
    for (std::size_t i = 1; i <= j; ++i)
        v *= -(alpha - static_cast<double>(i) + 1.0) / static_cast<double>(i);
    return v;
}

// reference implicit Euler with the same delayed-state interpolation
std::vector<std::vector<double>> implicit_euler(const Mat& a, const Mat& a_d,
                                                const DelaySpec& delay, const SimConfig& cfg) {
    const std::size_t n = a.rows();
    const double h = cfg.step_h;
    const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon_t / h));
    std::vector<std::vector<double>> xs{cfg.history_constant};
    for (std::size_t k = 1; k <= steps; ++k) {
        const double tk = static_cast<double>(k) * h;
        const double td = tk - delay.value_at(tk);
        std::vector<double> xdel(n, 0.0);
        double wimp = 0.0;
        if (td <= 0.0) {
            xdel = cfg.history_constant;
        } else {
            const double pos = td / h;
            const auto lo = static_cast<std::size_t>(pos);
            const double w = pos - static_cast<double>(lo);
            if (lo >= k) {
                wimp = 1.0;
            } else if (lo == k - 1) {
                wimp = w;
                for (std::size_t i = 0; i < n; ++i) xdel[i] = (1.0 - w) * xs[k - 1][i];
            } else {
                for (std::size_t i = 0; i < n; ++i)
                    xdel[i] = (1.0 - w) * xs[lo][i] + w * xs[lo + 1][i];
            }
        }
        Mat rhs(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            double s = xs[k - 1][i];
            for (std::size_t j = 0; j < n; ++j) s += h * a_d(i, j) * xdel[j];
            rhs(i, 0) = s;
        }
        Mat lhs = Mat::identity(n) - h * a - (wimp * h) * a_d;
        Mat xk = lu_solve(lhs, rhs);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = xk(i, 0);
        xs.push_back(std::move(v));
    }
    return xs;
}

}  // namespace

TEST_CASE("gl_coeffs fixed sequences") {
    const auto c1 = gl_coeffs(1.0, 5);
    CHECK(c1[0] == 1.0);
    CHECK(c1[1] == -1.0);
    CHECK(c1[2] == 0.0);
    CHECK(c1[3] == 0.0);

    const auto ch = gl_coeffs(0.5, 4);
    CHECK(ch[0] == doctest::Approx(1.0));
    CHECK(ch[1] == doctest::Approx(-0.5));
    CHECK(ch[2] == doctest::Approx(-0.125));
    CHECK(ch[3] == doctest::Approx(-0.0625));

    CHECK(gl_coeffs(0.3, 2)[1] == doctest::Approx(-0.3));
    CHECK_THROWS_AS(gl_coeffs(0.0, 3), numeric_error);
    CHECK_THROWS_AS(gl_coeffs(1.5, 3), numeric_error);
}

TEST_CASE("gl_coeffs match the direct binomial products") {
    Rng rng(606);
    for (int trial = 0; trial < 100; ++trial) {
        const double alpha = rng.uniform(0.05, 1.0);
        const auto c = gl_coeffs(alpha, 20);
        for (std::size_t j = 0; j < 20; ++j)
            CHECK(c[j] == doctest::Approx(gl_coeff_direct(alpha, j)).epsilon(1e-12));
    }
}

TEST_CASE("zero dynamics keep the state constant") {
    const SimConfig cfg = constant_history({1.0, -2.0}, 0.05, 2.0);
    const Trace tr = simulate(Mat(2, 2), Mat(2, 2), DelaySpec::constant(0.1), 0.4, cfg);
    CHECK_FALSE(tr.diverged);
    for (const auto& x : tr.states) {
        CHECK(x[0] == doctest::Approx(1.0));
        CHECK(x[1] == doctest::Approx(-2.0));
    }
}

TEST_CASE("order-one scalar decay matches the exponential") {
    const SimConfig cfg = constant_history({1.0}, 1e-3, 5.0);
    const Trace tr = simulate(Mat{{-1.0}}, Mat{{0.0}}, DelaySpec::constant(0.0, 0.0), 1.0, cfg);
    REQUIRE_FALSE(tr.diverged);
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        worst = std::max(worst, std::fabs(tr.states[k][0] - std::exp(-tr.times[k])));
    CHECK(worst <= 5e-3);
}

TEST_CASE("order one reduces to implicit Euler step by step") {
    Rng rng(707);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform(0.0, 3.0));
        Mat a = testutil::random_mat(rng, n, n, -1.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) a(i, i) -= 2.0;
        const bool delayed = (trial % 2 == 0);
        const Mat ad = delayed ? testutil::random_mat(rng, n, n, -0.3, 0.3) : Mat(n, n);
        const DelaySpec delay = DelaySpec::constant(delayed ? 0.07 : 0.0, delayed ? 0.07 : 0.0);
        SimConfig cfg = constant_history({}, 0.02, 1.0);
        cfg.history_constant.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) cfg.history_constant[i] = rng.uniform(-1.0, 1.0);

        const Trace tr = simulate(a, ad, delay, 1.0, cfg);
        const auto ref = implicit_euler(a, ad, delay, cfg);
        REQUIRE(tr.states.size() == ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k)
            for (std::size_t i = 0; i < n; ++i)
                CHECK(std::fabs(tr.states[k][i] - ref[k][i]) <= 1e-10);
    }
}

TEST_CASE("halving the step roughly halves the error") {
    auto final_value = [](double h) {
        const SimConfig cfg = constant_history({1.0}, h, 2.0);
        const Trace tr = simulate(Mat{{-1.0}}, Mat{{0.0}}, DelaySpec::constant(0.0, 0.0), 1.0, cfg);
        return tr.states.back()[0];
    };
    const double exact = std::exp(-2.0);
    const double e1 = std::fabs(final_value(0.02) - exact);
    const double e2 = std::fabs(final_value(0.01) - exact);
    const double ratio = e1 / e2;
    CHECK(ratio > 1.4);  // within 30 percent of the first-order ratio 2
    CHECK(ratio < 2.6);
}

TEST_CASE("memory truncation error is documented and order-dependent") {
    // keeping the most recent 4/5 of the history on the worked closed loop,
    // horizon 50.  The coefficient tail decays like j^(-1-alpha), so the
    // final-state error shrinks as the order rises; measured: 5.2e-3 at 0.3,
    // 1.4e-3 at 0.7, 2.9e-4 at 0.9.  The checks pin those magnitudes.
    const Mat a{{-1.66665, 1.0}, {-1.13335, 0.0}};
    const Mat b{{0.82665}, {0.81335}};
    const Mat c{{1.0, 0.0}};
    const Controller k = Controller::static_gain(Mat{{-1.4215}});
    const DelaySpec delay = DelaySpec::sin_exp(0.15, 0.25, 0.15);
    SimConfig cfg = constant_history({1.0, 1.0}, 0.01, 50.0);
    SimConfig truncated = cfg;
    truncated.memory_len = (4 * static_cast<std::size_t>(50.0 / 0.01)) / 5;

    auto final_diff = [&](double alpha) {
        const Trace full = simulate_closed_loop(a, b, c, k, delay, alpha, cfg);
        const Trace part = simulate_closed_loop(a, b, c, k, delay, alpha, truncated);
        REQUIRE_FALSE(full.diverged);
        REQUIRE_FALSE(part.diverged);
        double diff = 0.0;
        for (std::size_t i = 0; i < full.states.back().size(); ++i)
            diff = std::max(diff, std::fabs(full.states.back()[i] - part.states.back()[i]));
        return diff;
    };
    const double d03 = final_diff(0.3);
    const double d07 = final_diff(0.7);
    const double d09 = final_diff(0.9);
    CHECK(d03 < 1e-2);
    CHECK(d07 < 2e-3);
    CHECK(d09 < 1e-3);
    CHECK(d07 < d03);
    CHECK(d09 < d07);
}

TEST_CASE("trace starts exactly at the history value") {
    SimConfig cfg = constant_history({0.3, -0.7}, 0.01, 0.5);
    const Trace tr = simulate(Mat(2, 2), Mat(2, 2), DelaySpec::constant(0.1), 0.5, cfg);
    CHECK(tr.times.front() == 0.0);
    CHECK(tr.states.front()[0] == 0.3);
    CHECK(tr.states.front()[1] == -0.7);

    SimConfig tbl = cfg;
    tbl.history_is_table = true;
    tbl.history_table = {{-0.1, {1.0, 1.0}}, {0.0, {2.0, -1.0}}};
    const Trace tr2 = simulate(Mat(2, 2), Mat(2, 2), DelaySpec::constant(0.1), 0.5, tbl);
    CHECK(tr2.states.front()[0] == doctest::Approx(2.0));
    CHECK(tr2.states.front()[1] == doctest::Approx(-1.0));
}

TEST_CASE("unstable dynamics raise the divergence flag") {
    const SimConfig cfg = constant_history({1.0}, 0.01, 30.0);
    const Trace tr = simulate(Mat{{1.0}}, Mat{{0.0}}, DelaySpec::constant(0.0, 0.0), 1.0, cfg);
    CHECK(tr.diverged);
    CHECK(tr.diverged_step > 0);
    CHECK(tr.states.size() < static_cast<std::size_t>(30.0 / 0.01) + 1);
}

TEST_CASE("singular step system is reported with the step index") {
    // I - h^a A singular when A = I / h^a
    const double h = 0.01, alpha = 0.5;
    const Mat a = (1.0 / std::pow(h, alpha)) * Mat::identity(1);
    const SimConfig cfg = constant_history({1.0}, h, 0.1);
    CHECK_THROWS_AS(simulate(a, Mat{{0.0}}, DelaySpec::constant(0.0, 0.0), alpha, cfg),
                    numeric_error);
}

TEST_CASE("step exceeding the delay bound is rejected") {
    const SimConfig cfg = constant_history({1.0}, 1.0, 5.0);
    CHECK_THROWS_AS(simulate(Mat{{-1.0}}, Mat{{0.1}}, DelaySpec::constant(0.25), 0.5, cfg),
                    numeric_error);
}

TEST_CASE("closed loop with a zero gain matches the padded plant trace") {
    const Mat a{{-1.66665, 1.0}, {-1.13335, 0.0}};
    const Mat b{{0.82665}, {0.81335}};
    const Mat c{{1.0, 0.0}};
    const SimConfig plant_cfg = constant_history({1.0, 1.0}, 0.01, 5.0);
    const DelaySpec delay = DelaySpec::constant(0.1);
    const Trace plant = simulate(a, Mat(2, 2), delay, 0.3, plant_cfg);
    const Trace closed =
        simulate_closed_loop(a, b, c, Controller::static_gain(Mat(1, 1)), delay, 0.3, plant_cfg);
    REQUIRE(plant.states.size() == closed.states.size());
    for (std::size_t k = 0; k < plant.states.size(); ++k)
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(plant.states[k][i] == doctest::Approx(closed.states[k][i]).epsilon(1e-12));
}

TEST_CASE("reference static gain yields a settling closed-loop trace") {
    const Mat a{{-1.66665, 1.0}, {-1.13335, 0.0}};
    const Mat b{{0.82665}, {0.81335}};
    const Mat c{{1.0, 0.0}};
    const SimConfig cfg = constant_history({1.0, 1.0}, 0.01, 50.0);
    const Trace tr = simulate_closed_loop(a, b, c, Controller::static_gain(Mat{{-1.4215}}),
                                          DelaySpec::sin_exp(0.15, 0.25, 0.15), 0.3, cfg);
    REQUIRE_FALSE(tr.diverged);
    CHECK(tr.norms.back() < tr.norms.front());
}

TEST_CASE("upper-vertex sample with a synthesized-style gain stays bounded") {
    const Mat a{{-1.0, 1.0}, {-0.6, 0.0}};  // upper bounds of the plant family
    const Mat b{{1.1333}, {1.0667}};
    const Mat c{{1.0, 0.0}};
    const SimConfig cfg = constant_history({1.0, 1.0}, 0.01, 30.0);
    const Trace tr = simulate_closed_loop(a, b, c, Controller::static_gain(Mat{{-1.4215}}),
                                          DelaySpec::sin_exp(0.15, 0.25, 0.15), 0.3, cfg);
    CHECK_FALSE(tr.diverged);
}

TEST_CASE("trace CSV layout and formatting") {
    const SimConfig cfg = constant_history({1.0, 0.5}, 0.25, 0.5);
    const Trace tr = simulate(Mat(2, 2), Mat(2, 2), DelaySpec::constant(0.25), 0.5, cfg);
    std::ostringstream os;
    trace_to_csv(tr, os);
    const std::string text = os.str();
    CHECK(text.rfind("t,x1,x2,norm\n", 0) == 0);
    std::ostringstream os2;
    trace_to_csv(tr, os2);
    CHECK(text == os2.str());  // byte-identical rewrite
}
