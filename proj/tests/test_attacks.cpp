#include <doctest.h>

#include "oracles.hpp"
#include "soar/attacks.hpp"
#include "soar/models.hpp"

using namespace soar;
using attacks::NormKind;
using attacks::PerturbationBudget;

TEST_CASE("fgsm moves by eps*sign(grad), with sign(0) = 0") {
    models::LogisticClassifier m(2);
    ParamSet w = m.params_from({1.0, 0.0});
    Vec adv = attacks::fgsm(m, w, {0.0, 0.0}, 1.0, 0.1);
    CHECK(adv[0] == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(adv[1] == 0.0);

    Vec same = attacks::fgsm(m, w, {0.3, -0.2}, 1.0, 0.0);
    CHECK(same[0] == 0.3);
    CHECK(same[1] == -0.2);
}

TEST_CASE("fgsm on the over-parameterized linear model approaches the weight-sign loss") {
    // At the GD solution the residual vanishes on-manifold, so probe the
    // r -> 0+ limit with a slightly off-manifold point.
    Vec wstar{1.0, 0.0, 0.0};
    models::LinearRegressor m(wstar);
    Vec wbar{1.0, 0.5, -0.5};
    ParamSet w = m.params_from(wbar);
    double eps = 0.1;
    Vec x{2.0, 1e-9, 1e-9};  // r = 1e-9*(0.5 - 0.5) ... keep r > 0
    x[1] = 1e-9;
    x[2] = -1e-9;  // r = 1e-9*0.5 + (-1e-9)*(-0.5) = 1e-9
    Vec adv = attacks::fgsm(m, w, x, 0.0, eps);
    CHECK(adv[0] == x[0]);  // first coordinate carries no gradient
    double tail = 0.5 + 0.5;
    double expected = 0.5 * eps * eps * tail * tail;
    CHECK(m.eval_loss(adv, 0.0, w) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("project anchors") {
    PerturbationBudget linf{NormKind::Linf, 0.1, 0.05, 1, 1, true, std::nullopt};
    Vec center{0.0, 0.0};
    Vec inside{0.05, -0.02};
    Vec p = attacks::project(inside, center, linf);
    CHECK(p[0] == 0.05);
    CHECK(p[1] == -0.02);
    Vec q = attacks::project({0.5, -0.05}, center, linf);
    CHECK(q[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(q[1] == doctest::Approx(-0.05).epsilon(1e-15));

    PerturbationBudget l2{NormKind::L2, 1.0, 0.5, 1, 1, true, std::nullopt};
    Vec r = attacks::project({3.0, 4.0}, center, l2);
    CHECK(r[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pgd with no iterations and no random start is the identity") {
    models::LogisticClassifier m(2);
    ParamSet w = m.params_from({1.0, -1.0});
    PerturbationBudget b{NormKind::Linf, 0.1, 0.05, 0, 1, false, std::nullopt};
    Vec x{0.4, 0.2};
    Vec adv = attacks::pgd(m, w, x, 1.0, b, 99);
    CHECK(adv[0] == x[0]);
    CHECK(adv[1] == x[1]);
}

TEST_CASE("pgd on the linear model converges to the attacked corner") {
    Vec wstar{1.0, 0.0, 0.0};
    models::LinearRegressor m(wstar);
    Vec wbar{1.0, 0.7, -0.4};
    ParamSet w = m.params_from(wbar);
    Vec x{1.5, 0.3, 0.1};  // off-manifold so the residual is nonzero
    double r0 = m.residual(x, w);
    REQUIRE(r0 > 0.0);
    PerturbationBudget b{NormKind::Linf, 0.2, 0.05, 30, 1, true, std::nullopt};
    Vec adv = attacks::pgd(m, w, x, 0.0, b, 7);
    CHECK(adv[1] == doctest::Approx(x[1] + 0.2 * 1.0).epsilon(1e-9));
    CHECK(adv[2] == doctest::Approx(x[2] - 0.2 * 1.0).epsilon(1e-9));
}

TEST_CASE("pgd stays inside the ball and the clamp box") {
    RngStream rng(41);
    models::MlpClassifier m(3, {8}, 2);
    ParamSet w = m.init_params(rng);
    for (int trial = 0; trial < 1000; ++trial) {
        bool use_l2 = trial % 2 == 1;
        PerturbationBudget b;
        b.norm = use_l2 ? NormKind::L2 : NormKind::Linf;
        b.eps = 0.05 + 0.3 * rng.uniform();
        b.step = b.eps / 3.0;
        b.iters = 1 + rng.uniform_int(5);
        b.restarts = 1 + rng.uniform_int(2);
        b.random_init = true;
        b.clamp_box = ClampBox{0.0, 1.0};
        Vec x = rng.uniform_vec(3, 0.0, 1.0);
        int y = rng.uniform_int(2);
        Vec adv = attacks::pgd(m, w, x, y, b, derive_seed(5, "trial/" + std::to_string(trial)));
        Vec delta = adv - x;
        double norm = use_l2 ? l2_norm(delta) : linf_norm(delta);
        CHECK(norm <= b.eps + 1e-9);
        for (double v : adv) {
            CHECK(v >= -1e-12);
            CHECK(v <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("attack-strength ordering on convex surrogates") {
    RngStream rng(43);
    models::LogisticClassifier logistic(4);
    Vec wstar{1.0, 0.0, 0.0, 0.0};
    models::LinearRegressor linear(wstar);
    for (int trial = 0; trial < 50; ++trial) {
        double eps = 0.05 + 0.2 * rng.uniform();
        // deterministic start: a random start near the residual-zero surface
        // can legitimately drive ascent toward the other (lower) corner
        PerturbationBudget b{NormKind::Linf, eps, eps / 4.0, 20, 1, false, std::nullopt};
        std::uint64_t seed = derive_seed(3, "ordering/" + std::to_string(trial));

        ParamSet lw = logistic.params_from(rng.normal_vec(4));
        Vec x = rng.normal_vec(4);
        double y = rng.uniform_int(2);
        double clean = logistic.eval_loss(x, y, lw);
        double fg = logistic.eval_loss(attacks::fgsm(logistic, lw, x, y, eps), y, lw);
        double pg = logistic.eval_loss(attacks::pgd(logistic, lw, x, y, b, seed), y, lw);
        CHECK(fg >= clean - 1e-9);
        CHECK(pg >= fg - 1e-9);

        ParamSet rw = linear.params_from(rng.normal_vec(4));
        Vec rx = rng.normal_vec(4);
        double rclean = linear.eval_loss(rx, 0.0, rw);
        double rfg = linear.eval_loss(attacks::fgsm(linear, rw, rx, 0.0, eps), 0.0, rw);
        double rpg = linear.eval_loss(attacks::pgd(linear, rw, rx, 0.0, b, seed), 0.0, rw);
        CHECK(rfg >= rclean - 1e-9);
        CHECK(rpg >= rfg - 1e-9);
    }
}

TEST_CASE("identical seeds reproduce identical adversarial examples") {
    RngStream rng(47);
    models::MlpClassifier m(3, {8}, 2);
    ParamSet w = m.init_params(rng);
    Vec x = rng.uniform_vec(3, 0.0, 1.0);
    PerturbationBudget b{NormKind::Linf, 0.1, 0.025, 10, 3, true, ClampBox{0.0, 1.0}};
    Vec a = attacks::pgd(m, w, x, 1.0, b, 1234);
    Vec c = attacks::pgd(m, w, x, 1.0, b, 1234);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == c[i]);
}

TEST_CASE("budget validation") {
    PerturbationBudget b{NormKind::Linf, 0.1, 0.3, 5, 1, true, std::nullopt};
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);  // step > 2*eps
    b.step = 0.05;
    b.restarts = 0;
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);
    b.restarts = 1;
    b.eps = -0.1;
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}
