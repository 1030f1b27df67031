#pragma once

#include <cmath>
#include <numbers>

#include "soar/models.hpp"

namespace soar {
namespace toy {

// Over-parameterized linear regression whose data lives on the first
// coordinate only: x = (x1, 0, ..., 0) with x1 ~ N(mu1, 1), targets <x, w*>,
// w* = (wstar1, 0, ..., 0).
struct ToySpec {
    int d = 2;
    double sigma = 1.0;   // weight-init std
    double eps = 0.1;     // attack radius
    double mu1 = 1.0;     // E[X1], must be nonzero
    double wstar1 = 1.0;

    void validate() const {
        if (d < 1) throw std::invalid_argument("ToySpec: d must be >= 1");
        if (sigma <= 0.0) throw std::invalid_argument("ToySpec: sigma must be > 0");
        if (mu1 == 0.0) throw std::invalid_argument("ToySpec: mu1 = 0 (no identifiability)");
    }

    Vec wstar() const {
        Vec w(d, 0.0);
        w[0] = wstar1;
        return w;
    }

    // Moments of the x1 distribution (unit variance around mu1).
    double second_moment_x1() const { return mu1 * mu1 + 1.0; }
};

// Honest population loss of the squared-error model: 1/2 E[X1^2] (w1 - w*1)^2.
inline double population_loss(const Vec& w, const ToySpec& spec) {
    spec.validate();
    check_dim(w, static_cast<std::size_t>(spec.d), "population_loss");
    double r = w[0] - spec.wstar1;
    return 0.5 * spec.second_moment_x1() * r * r;
}

// Population GD with the mu1-weighted data-fit gradient: only the first
// coordinate receives any update, grad_1 = (w1 - w*1) mu1 and grad_j = 0
// for j >= 2 exactly. Learning rate beta = 0.1/mu1 contracts the first
// coordinate by a fixed factor 0.9 per step.
inline Vec population_gd(const ToySpec& spec, const Vec& w0, int steps) {
    spec.validate();
    check_dim(w0, static_cast<std::size_t>(spec.d), "population_gd");
    const double beta = 0.1 / spec.mu1;
    Vec w = w0;
    for (int t = 0; t < steps; ++t) w[0] -= beta * (w[0] - spec.wstar1) * spec.mu1;
    return w;
}

// Asymptotic GD solution: (w*1, w0_2, ..., w0_d).
inline Vec gd_fixed_point(const ToySpec& spec, const Vec& w0) {
    spec.validate();
    check_dim(w0, static_cast<std::size_t>(spec.d), "gd_fixed_point");
    Vec w = w0;
    w[0] = spec.wstar1;
    return w;
}

// Weight-sign attack direction (0, eps sign(w2), ..., eps sign(wd)); the
// first coordinate is never attacked.
inline Vec attack_delta(const Vec& w, double eps) {
    Vec delta(w.size(), 0.0);
    for (std::size_t j = 1; j < w.size(); ++j) delta[j] = eps * sgn(w[j]);
    return delta;
}

// Pointwise loss at the attacked point, 1/2 |r(x;w) + <w, dx>|^2, evaluated
// through the shared linear-model path so cross-checks against the attack
// modules are exact.
inline double attacked_pointwise_loss(const ToySpec& spec, const Vec& w, const Vec& x) {
    spec.validate();
    models::LinearRegressor model(spec.wstar());
    ParamSet p = model.params_from(w);
    Vec xa = x + attack_delta(w, spec.eps);
    return model.eval_loss(xa, 0.0, p);
}

// Expected attacked loss over the weight-init randomness at the GD solution,
//   1/2 eps^2 E||W||_1^2 = 1/2 eps^2 (d sigma^2 + d(d-1)(2/pi) sigma^2),
// including the |W1| cross terms.
inline double expected_attacked_loss(int d, double sigma, double eps) {
    if (d < 1) throw std::invalid_argument("expected_attacked_loss: d must be >= 1");
    double dd = static_cast<double>(d);
    double e_l1_sq = dd * sigma * sigma + dd * (dd - 1.0) * (2.0 / std::numbers::pi) * sigma * sigma;
    return 0.5 * eps * eps * e_l1_sq;
}

// Monte-Carlo companion of expected_attacked_loss: samples W ~ N(0, sigma^2 I)
// and averages 1/2 eps^2 ||W||_1^2.
inline double mc_expected_attacked_loss(int d, double sigma, double eps, int trials,
                                        RngStream& rng) {
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
        double l1 = 0.0;
        for (int i = 0; i < d; ++i) l1 += std::abs(sigma * rng.normal());
        acc += 0.5 * eps * eps * l1 * l1;
    }
    return acc / trials;
}

struct ToyMoments {
    double mean_x1 = 1.0;
    double second_moment_x1 = 2.0;
};

inline ToyMoments moments_of(const ToySpec& spec) {
    return {spec.mu1, spec.second_moment_x1()};
}

inline double l1_tail(const Vec& w) {
    double s = 0.0;
    for (std::size_t j = 1; j < w.size(); ++j) s += std::abs(w[j]);
    return s;
}

// Population loss at the attacked point,
//   L(w) + eps E[r(X;w)] ||w_{2:d}||_1 + (eps^2/2) ||w_{2:d}||_1^2.
inline double robustified_population_loss(const Vec& w, const ToySpec& spec,
                                          const ToyMoments& m) {
    spec.validate();
    check_dim(w, static_cast<std::size_t>(spec.d), "robustified_population_loss");
    double dw = w[0] - spec.wstar1;
    double base = 0.5 * m.second_moment_x1 * dw * dw;
    double mean_res = m.mean_x1 * dw;
    double tail = l1_tail(w);
    return base + spec.eps * mean_res * tail + 0.5 * spec.eps * spec.eps * tail * tail;
}

struct TaylorLosses {
    double first_order = 0.0;
    double second_order = 0.0;
    double exact = 0.0;
};

// First- and second-order expansions of the attacked population loss around
// the clean input, against the exact robustified form. The expansions go
// through the actual attack vector and the (w - w*) rank-one Hessian; the
// second-order route recovers the exact value identically.
inline TaylorLosses taylor_losses(const Vec& w, const ToySpec& spec) {
    spec.validate();
    check_dim(w, static_cast<std::size_t>(spec.d), "taylor_losses");
    ToyMoments m = moments_of(spec);
    Vec delta = attack_delta(w, spec.eps);
    Vec diff = w - spec.wstar();
    double lin = dot(diff, delta);  // <w - w*, dx> = eps ||w_{2:d}||_1
    double dw = w[0] - spec.wstar1;

    TaylorLosses out;
    double base = 0.5 * m.second_moment_x1 * dw * dw;
    out.first_order = base + m.mean_x1 * dw * lin;
    out.second_order = out.first_order + 0.5 * lin * lin;
    out.exact = robustified_population_loss(w, spec, m);
    return out;
}

// Ridge-regularized population loss in the paper's mu1 convention (the
// data-fit quadratic carries the mu1 coefficient, matching population_gd).
inline double ridge_population_loss(const Vec& w, double lambda, double mu1, double wstar1) {
    double dw = w[0] - wstar1;
    return 0.5 * mu1 * dw * dw + 0.5 * lambda * l2_norm_sq(w);
}

// Stationary point of the ridge loss: w1 = mu1/(mu1 + lambda) w*1, rest 0.
inline Vec ridge_solution(double lambda, double mu1, double wstar1, int d) {
    if (lambda < 0.0) throw std::invalid_argument("ridge_solution: lambda must be >= 0");
    Vec w(d, 0.0);
    w[0] = mu1 / (mu1 + lambda) * wstar1;
    return w;
}

// The linf-ball maximizer direction eps*sign(w), reaching <w, delta> =
// eps ||w||_1 (Hoelder equality).
inline Vec linf_maximizer(const Vec& w, double eps) {
    Vec delta(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) delta[i] = eps * sgn(w[i]);
    return delta;
}

} // namespace toy
} // namespace soar
