#include <doctest.h>

#include "oracles.hpp"
#include "soar/attacks.hpp"
#include "soar/toy.hpp"

using namespace soar;
using toy::ToySpec;

TEST_CASE("gd fixed point: forced first coordinate, untouched tail") {
    ToySpec spec;
    spec.d = 2;
    Vec w0{0.3, -0.5};
    Vec fixed = toy::gd_fixed_point(spec, w0);
    CHECK(fixed[0] == 1.0);
    CHECK(fixed[1] == -0.5);
    CHECK(toy::population_loss(fixed, spec) == 0.0);

    ToySpec bad = spec;
    bad.mu1 = 0.0;
    CHECK_THROWS_AS(toy::gd_fixed_point(bad, w0), std::invalid_argument);
}

TEST_CASE("iterative population GD reaches the closed form") {
    RngStream rng(201);
    for (int trial = 0; trial < 10; ++trial) {
        ToySpec spec;
        spec.d = 2 + rng.uniform_int(6);
        spec.mu1 = 0.5 + rng.uniform();
        Vec w0 = rng.normal_vec(spec.d);
        Vec iter = toy::population_gd(spec, w0, 10000);
        Vec fixed = toy::gd_fixed_point(spec, w0);
        for (int j = 0; j < spec.d; ++j) CHECK(std::abs(iter[j] - fixed[j]) <= 1e-8);
        // coordinates 2..d never move, bit for bit
        for (int j = 1; j < spec.d; ++j) CHECK(iter[j] == w0[j]);
    }
}

TEST_CASE("attacked pointwise loss anchors") {
    ToySpec spec;
    spec.d = 3;
    spec.eps = 0.1;

    Vec x{0.7, 0.0, 0.0};
    CHECK(toy::attacked_pointwise_loss(spec, spec.wstar(), x) == 0.0);

    Vec wbar{1.0, 0.5, -0.5};
    CHECK(toy::attacked_pointwise_loss(spec, wbar, x) ==
          doctest::Approx(0.5 * 0.1 * 0.1 * 1.0).epsilon(1e-12));
}

TEST_CASE("attacked pointwise loss equals the fgsm-attacked model loss bitwise") {
    ToySpec spec;
    spec.d = 4;
    spec.eps = 0.15;
    models::LinearRegressor model(spec.wstar());
    Vec wbar{1.0, 0.6, -0.3, 0.2};
    ParamSet p = model.params_from(wbar);
    // off-manifold probe with a positive residual, so the gradient sign
    // pattern matches the weight-sign attack exactly
    Vec x{2.0, 0.5, -0.5, 0.5};
    REQUIRE(model.residual(x, p) > 0.0);
    Vec adv = attacks::fgsm(model, p, x, 0.0, spec.eps);
    Vec manual = x + toy::attack_delta(wbar, spec.eps);
    for (int j = 0; j < spec.d; ++j) CHECK(adv[j] == manual[j]);
    CHECK(model.eval_loss(adv, 0.0, p) == toy::attacked_pointwise_loss(spec, wbar, x));
}

TEST_CASE("expected attacked loss: closed form and Monte-Carlo") {
    CHECK(toy::expected_attacked_loss(2, 1.0, 1.0) ==
          doctest::Approx(0.5 * (2.0 + 4.0 / std::numbers::pi)).epsilon(1e-12));
    CHECK(toy::expected_attacked_loss(1, 0.7, 0.3) ==
          doctest::Approx(0.5 * 0.3 * 0.3 * 0.7 * 0.7).epsilon(1e-12));

    RngStream rng(211);
    for (int d : {2, 10, 100}) {
        double mc = toy::mc_expected_attacked_loss(d, 1.0, 0.5, 100000, rng);
        CHECK(mc == doctest::Approx(toy::expected_attacked_loss(d, 1.0, 0.5)).epsilon(0.02));
    }
}

TEST_CASE("expected attacked loss scales like eps^2 d^2 sigma^2") {
    double r = toy::expected_attacked_loss(512, 1.0, 0.1) / toy::expected_attacked_loss(256, 1.0, 0.1);
    CHECK(r == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("robustified population loss: zeros, pressure, Monte-Carlo") {
    ToySpec spec;
    spec.d = 3;
    spec.eps = 0.2;
    toy::ToyMoments m = toy::moments_of(spec);

    CHECK(toy::robustified_population_loss(spec.wstar(), spec, m) == 0.0);

    // regularizer pressure: finite difference along w_j for j >= 2 is nonzero
    Vec w{1.1, 0.4, -0.3};
    const double h = 1e-6;
    for (int j = 1; j < 3; ++j) {
        Vec wp = w, wm = w;
        wp[j] += h;
        wm[j] -= h;
        double fd = (toy::robustified_population_loss(wp, spec, m) -
                     toy::robustified_population_loss(wm, spec, m)) /
                    (2.0 * h);
        CHECK(std::abs(fd) > 1e-6);
    }

    // matches the expectation of the pointwise attacked loss over the data
    RngStream rng(223);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        Vec x{spec.mu1 + rng.normal(), 0.0, 0.0};
        acc += toy::attacked_pointwise_loss(spec, w, x);
    }
    acc /= n;
    CHECK(acc == doctest::Approx(toy::robustified_population_loss(w, spec, m)).epsilon(0.02));
}

TEST_CASE("ridge solution and stationarity") {
    Vec w0 = toy::ridge_solution(0.0, 1.0, 1.0, 3);
    CHECK(w0[0] == 1.0);
    CHECK(w0[1] == 0.0);

    Vec whalf = toy::ridge_solution(1.0, 1.0, 1.0, 3);
    CHECK(whalf[0] == doctest::Approx(0.5).epsilon(1e-15));

    RngStream rng(227);
    for (int trial = 0; trial < 10; ++trial) {
        double lambda = rng.uniform(0.0, 2.0);
        double mu1 = 0.3 + rng.uniform();
        double wstar1 = rng.normal();
        Vec sol = toy::ridge_solution(lambda, mu1, wstar1, 4);
        const double h = 1e-6;
        for (int j = 0; j < 4; ++j) {
            Vec wp = sol, wm = sol;
            wp[j] += h;
            wm[j] -= h;
            double fd = (toy::ridge_population_loss(wp, lambda, mu1, wstar1) -
                         toy::ridge_population_loss(wm, lambda, mu1, wstar1)) /
                        (2.0 * h);
            CHECK(std::abs(fd) <= 1e-10 + 1e-9 * std::abs(wstar1));
        }
    }
}

TEST_CASE("second-order expansion recovers the robustified loss exactly") {
    RngStream rng(229);
    for (int trial = 0; trial < 1000; ++trial) {
        ToySpec spec;
        spec.d = 2 + rng.uniform_int(8);
        spec.eps = 0.05 + rng.uniform();
        spec.mu1 = rng.normal();
        if (spec.mu1 == 0.0) spec.mu1 = 1.0;
        spec.wstar1 = rng.normal();
        Vec w = rng.normal_vec(spec.d);
        auto t = toy::taylor_losses(w, spec);
        double scale = std::max({1.0, std::abs(t.exact), std::abs(t.second_order)});
        CHECK(std::abs(t.second_order - t.exact) <= 1e-12 * scale);
        double tail = toy::l1_tail(w);
        CHECK(t.exact - t.first_order ==
              doctest::Approx(0.5 * spec.eps * spec.eps * tail * tail).epsilon(1e-9));
        CHECK(t.exact - t.first_order >= -1e-15);
    }

    // with no irrelevant weights all three collapse to the population loss
    ToySpec spec;
    spec.d = 4;
    Vec w{0.7, 0.0, 0.0, 0.0};
    auto t = toy::taylor_losses(w, spec);
    CHECK(t.first_order == t.second_order);
    CHECK(t.second_order == t.exact);
    CHECK(t.exact == doctest::Approx(toy::population_loss(w, spec)).epsilon(1e-15));
}

TEST_CASE("the linf maximizer direction is never beaten and matches fgsm") {
    RngStream rng(233);
    ToySpec spec;
    spec.d = 5;
    spec.eps = 0.2;
    models::LinearRegressor model(spec.wstar());

    // at the fixed point with on-manifold data the residual vanishes and the
    // weight-sign corner attains the maximum loss
    Vec wbar{1.0, 0.4, -0.7, 0.2, -0.1};
    ParamSet p = model.params_from(wbar);
    Vec x{1.3, 0.0, 0.0, 0.0, 0.0};
    Vec dstar = toy::linf_maximizer(wbar, spec.eps);
    double best = model.eval_loss(x + dstar, 0.0, p);
    for (int i = 0; i < 10000; ++i) {
        Vec delta = rng.uniform_vec(5, -spec.eps, spec.eps);
        CHECK(model.eval_loss(x + delta, 0.0, p) <= best + 1e-12);
    }
    CHECK(dot(wbar, dstar) == doctest::Approx(spec.eps * l1_norm(wbar)).epsilon(1e-12));

    // fgsm with a positive residual picks the same direction on attacked coords
    Vec xoff{1.3, 0.5, -0.5, 0.5, -0.5};
    REQUIRE(model.residual(xoff, p) > 0.0);
    Vec adv = attacks::fgsm(model, p, xoff, 0.0, spec.eps);
    for (int j = 1; j < 5; ++j)
        CHECK(adv[j] - xoff[j] == doctest::Approx(dstar[j]).epsilon(1e-12));
}
