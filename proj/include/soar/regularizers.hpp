#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "soar/attacks.hpp"
#include "soar/diffcore.hpp"

namespace soar {
namespace reg {

using attacks::NormKind;

enum class SoarInit { Zero, Random, Pgd1 };

inline const char* init_name(SoarInit i) {
    switch (i) {
        case SoarInit::Zero: return "zero";
        case SoarInit::Random: return "random";
        default: return "pgd1";
    }
}

struct SoarConfig {
    double eps_reg = 0.0;          // radius inside the penalty coefficient
    double h = 0.01;               // finite-difference step
    int n_z = 1;                   // direction samples per evaluation
    SoarInit init = SoarInit::Pgd1;
    std::optional<double> clip = 10.0;  // cap on the penalty's parameter-gradient norm
    NormKind norm = NormKind::Linf;
    double weight = 1.0;           // overall penalty multiplier (0 disables)

    void validate() const {
        if (h <= 0.0) throw std::invalid_argument("SoarConfig: h must be > 0");
        if (n_z < 1) throw std::invalid_argument("SoarConfig: n_z must be >= 1");
        if (clip && *clip <= 0.0) throw std::invalid_argument("SoarConfig: clip must be > 0");
        if (weight < 0.0) throw std::invalid_argument("SoarConfig: weight must be >= 0");
    }

    // weight * (d eps^2 + 1)/2 for an Linf budget; (eps^2 + 1)/2 for L2.
    double coefficient(int d) const {
        double scale = norm == NormKind::Linf ? static_cast<double>(d) : 1.0;
        return weight * 0.5 * (scale * eps_reg * eps_reg + 1.0);
    }
};

// First-order penalty: loss(x) + eps * ||grad_x loss||_q with q dual to the
// budget norm (Linf -> l1, L2 -> l2).
inline double foar_penalty(const DiffFunction& f, const ParamSet& w, const Vec& x, double y,
                           double eps, NormKind norm = NormKind::Linf) {
    if (eps < 0.0) throw std::invalid_argument("foar_penalty: eps must be >= 0");
    Vec g = f.input_gradient(x, y, w);
    double dual = norm == NormKind::Linf ? l1_norm(g) : l2_norm(g);
    return f.eval_loss(x, y, w) + eps * dual;
}

// Augmented Hessian-vector product H z for the (d+1)x(d+1) operator
//   H = [[hess, grad], [grad^T, 1]],
// with the top block's hess*z_d term replaced by the finite difference
//   ||z_d|| (grad(x + h z_d/||z_d||) - grad(x)) / h.
// The FD term is 0 when z_d = 0 (its multiplier vanishes).
inline Vec augmented_hvp(const DiffFunction& f, const ParamSet& w, const Vec& x, double y,
                         const Vec& z, double h) {
    if (h <= 0.0) throw std::invalid_argument("augmented_hvp: h must be > 0");
    const std::size_t d = x.size();
    check_dim(z, d + 1, "augmented_hvp: z");
    Vec zd(z.begin(), z.begin() + d);
    const double z1 = z[d];
    Vec g0 = f.input_gradient(x, y, w);

    Vec out(d + 1, 0.0);
    double zd_norm = l2_norm(zd);
    if (zd_norm > 0.0) {
        Vec xs = x;
        axpy(h / zd_norm, zd, xs);
        Vec gh = f.input_gradient(xs, y, w);
        for (std::size_t i = 0; i < d; ++i) out[i] = zd_norm * (gh[i] - g0[i]) / h;
    }
    for (std::size_t i = 0; i < d; ++i) out[i] += z1 * g0[i];
    out[d] = dot(g0, zd) + z1;
    return out;
}

// SOAR penalty for one direction z: coefficient * ||H z||_2 with the FD
// Hessian-vector product above.
inline double soar_penalty(const DiffFunction& f, const ParamSet& w, const Vec& x, double y,
                           const Vec& z, const SoarConfig& cfg) {
    cfg.validate();
    return cfg.coefficient(f.input_dim()) * l2_norm(augmented_hvp(f, w, x, y, z, cfg.h));
}

// One-step PGD start inside the half-radius ball:
//   x' = proj_{Binf(x, eps/2)}( x + eta + (eps/2) sign(grad(x + eta)) ),
// eta_i ~ U(-eps/2, eps/2). The half/half split keeps the evaluation point
// plus the regularizer's reach inside the original eps ball.
inline Vec pgd1_init(const DiffFunction& f, const ParamSet& w, const Vec& x, double y, double eps,
                     RngStream& rng) {
    if (eps < 0.0) throw std::invalid_argument("pgd1_init: eps must be >= 0");
    const double half = 0.5 * eps;
    Vec p = x;
    for (auto& v : p) v += rng.uniform(-half, half);
    Vec g = f.input_gradient(p, y, w);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] += half * sgn(g[i]);
        p[i] = std::clamp(p[i], x[i] - half, x[i] + half);
    }
    return p;
}

// Parameter gradient of u^T grad_x loss(x, y; w), i.e. the vector-Jacobian
// product of the input gradient with direction u. Mixed partials commute, so
// it equals the directional derivative (along u, in input space) of the
// parameter gradient, which a central difference captures without any
// second-order machinery:
//   grad_w[u^T grad_x loss] ~= ||u|| (grad_w loss(x + t u/||u||)
//                                     - grad_w loss(x - t u/||u||)) / (2t).
inline ParamSet input_grad_vjp_param_gradient(const DiffFunction& f, const ParamSet& w,
                                              const Vec& x, double y, const Vec& u, double t) {
    if (t <= 0.0) throw std::invalid_argument("input_grad_vjp_param_gradient: step must be > 0");
    double un = l2_norm(u);
    if (un == 0.0) return zeros_like(w);
    Vec xp = x, xm = x;
    axpy(t / un, u, xp);
    axpy(-t / un, u, xm);
    ParamSet gp = f.param_gradient(xp, y, w);
    ParamSet gm = f.param_gradient(xm, y, w);
    axpy(-1.0, gm, gp);
    scale(gp, un / (2.0 * t));
    return gp;
}

// Rescales p to norm <= c (no-op when already inside).
inline void clip_to_norm(ParamSet& p, double c) {
    double n = l2_norm(p);
    if (n > c && n > 0.0) scale(p, c / n);
}

// Value and parameter gradient of the SOAR penalty for one direction z.
//
// With v = H z (FD form) and vhat = v/||v|| split as [ahat; bhat], the chain
// rule gives
//   grad_w penalty = coeff * [ J(x+h zt)^T (||z_d||/h) ahat
//                            + J(x)^T ((z1 - ||z_d||/h) ahat + bhat z_d) ],
// where J(p)^T u is the VJP above, evaluated with FD step t = h.
struct PenaltyTerm {
    double value = 0.0;
    ParamSet param_grad;
};

inline PenaltyTerm soar_penalty_with_param_gradient(const DiffFunction& f, const ParamSet& w,
                                                    const Vec& x, double y, const Vec& z,
                                                    const SoarConfig& cfg) {
    cfg.validate();
    const std::size_t d = x.size();
    check_dim(z, d + 1, "soar_penalty: z");
    const double coeff = cfg.coefficient(f.input_dim());
    Vec v = augmented_hvp(f, w, x, y, z, cfg.h);

    PenaltyTerm out;
    out.value = coeff * l2_norm(v);
    out.param_grad = zeros_like(w);
    double vn = l2_norm(v);
    if (vn == 0.0) return out;  // norm kink; take the zero subgradient

    Vec ahat(v.begin(), v.begin() + d);
    double bhat = v[d] / vn;
    for (auto& a : ahat) a /= vn;
    Vec zd(z.begin(), z.begin() + d);
    const double z1 = z[d];
    const double zd_norm = l2_norm(zd);

    Vec u0 = ahat;
    for (auto& a : u0) a *= z1;
    axpy(bhat, zd, u0);
    if (zd_norm > 0.0) {
        Vec xs = x;
        axpy(cfg.h / zd_norm, zd, xs);
        Vec uh = ahat;
        for (auto& a : uh) a *= zd_norm / cfg.h;
        axpy(-zd_norm / cfg.h, ahat, u0);
        ParamSet gh = input_grad_vjp_param_gradient(f, w, xs, y, uh, cfg.h);
        axpy(1.0, gh, out.param_grad);
    }
    ParamSet g0 = input_grad_vjp_param_gradient(f, w, x, y, u0, cfg.h);
    axpy(1.0, g0, out.param_grad);
    scale(out.param_grad, coeff);
    return out;
}

// Pointwise SOAR objective (value form): pick the evaluation point per
// cfg.init, sample n_z Gaussian directions, and return
//   loss(x', y) + mean_i penalty(x'; z_i).
// The coefficient radius is eps/2 under Pgd1 init and eps otherwise.
inline double soar_objective(const DiffFunction& f, const ParamSet& w, const Vec& x, double y,
                             double eps, const SoarConfig& cfg, RngStream& rng) {
    cfg.validate();
    SoarConfig local = cfg;
    local.eps_reg = cfg.init == SoarInit::Pgd1 ? 0.5 * eps : eps;
    Vec xp = x;
    if (cfg.init == SoarInit::Random) {
        for (auto& v : xp) v += rng.uniform(-eps, eps);
    } else if (cfg.init == SoarInit::Pgd1) {
        xp = pgd1_init(f, w, x, y, eps, rng);
    }
    double mean_penalty = 0.0;
    for (int i = 0; i < cfg.n_z; ++i) {
        Vec z = rng.normal_vec(x.size() + 1);
        mean_penalty += soar_penalty(f, w, xp, y, z, local);
    }
    mean_penalty /= cfg.n_z;
    return f.eval_loss(xp, y, w) + mean_penalty;
}

// Objective plus the split gradients the training loop needs. The loss and
// penalty parameter-gradients stay separate so the penalty part can be
// clipped before the optimizer step; x' is treated as a fixed point.
struct SoarPointwise {
    double objective = 0.0;
    double loss_term = 0.0;
    double penalty_mean = 0.0;
    ParamSet loss_grad;
    ParamSet penalty_grad;
    Vec x_eval;
};

inline SoarPointwise soar_pointwise(const DiffFunction& f, const ParamSet& w, const Vec& x,
                                    double y, double eps, const SoarConfig& cfg, RngStream& rng) {
    cfg.validate();
    SoarConfig local = cfg;
    local.eps_reg = cfg.init == SoarInit::Pgd1 ? 0.5 * eps : eps;

    SoarPointwise out;
    out.x_eval = x;
    if (cfg.init == SoarInit::Random) {
        for (auto& v : out.x_eval) v += rng.uniform(-eps, eps);
    } else if (cfg.init == SoarInit::Pgd1) {
        out.x_eval = pgd1_init(f, w, x, y, eps, rng);
    }

    out.loss_grad = zeros_like(w);
    out.loss_term = f.loss_with_gradients(out.x_eval, y, w, nullptr, &out.loss_grad);
    out.penalty_grad = zeros_like(w);
    for (int i = 0; i < cfg.n_z; ++i) {
        Vec z = rng.normal_vec(x.size() + 1);
        PenaltyTerm term = soar_penalty_with_param_gradient(f, w, out.x_eval, y, z, local);
        out.penalty_mean += term.value;
        axpy(1.0, term.param_grad, out.penalty_grad);
    }
    out.penalty_mean /= cfg.n_z;
    scale(out.penalty_grad, 1.0 / cfg.n_z);
    out.objective = out.loss_term + out.penalty_mean;
    return out;
}

// FOAR value and split gradients; the dual-norm subgradient direction is
// sign(g) for l1 and g/||g|| for l2. fd_step drives the VJP differences.
struct FoarPointwise {
    double value = 0.0;
    double loss_term = 0.0;
    double penalty = 0.0;
    ParamSet loss_grad;
    ParamSet penalty_grad;
};

inline FoarPointwise foar_pointwise(const DiffFunction& f, const ParamSet& w, const Vec& x,
                                    double y, double eps, NormKind norm, double fd_step) {
    FoarPointwise out;
    out.loss_grad = zeros_like(w);
    Vec g;
    out.loss_term = f.loss_with_gradients(x, y, w, &g, &out.loss_grad);
    double dual = norm == NormKind::Linf ? l1_norm(g) : l2_norm(g);
    out.penalty = eps * dual;
    out.value = out.loss_term + out.penalty;
    Vec u(g.size(), 0.0);
    if (norm == NormKind::Linf) {
        for (std::size_t i = 0; i < g.size(); ++i) u[i] = sgn(g[i]);
    } else if (dual > 0.0) {
        for (std::size_t i = 0; i < g.size(); ++i) u[i] = g[i] / dual;
    }
    out.penalty_grad = input_grad_vjp_param_gradient(f, w, x, y, u, fd_step);
    scale(out.penalty_grad, eps);
    return out;
}

inline constexpr int kOracleMaxDim = 64;

// Materialized (d+1)x(d+1) augmented Hessian for oracle-scale checks: the
// input Hessian comes from central differences of the input gradient and the
// result is symmetrized.
inline Mat exact_augmented_hessian(const DiffFunction& f, const ParamSet& w, const Vec& x,
                                   double y, double fd_step = 1e-5) {
    const int d = f.input_dim();
    if (d > kOracleMaxDim)
        throw std::invalid_argument("exact_augmented_hessian: input dimension too large");
    check_dim(x, static_cast<std::size_t>(d), "exact_augmented_hessian");
    Mat H(d + 1, d + 1);
    Vec g = f.input_gradient(x, y, w);
    for (int j = 0; j < d; ++j) {
        Vec xp = x, xm = x;
        xp[j] += fd_step;
        xm[j] -= fd_step;
        Vec gp = f.input_gradient(xp, y, w);
        Vec gm = f.input_gradient(xm, y, w);
        for (int i = 0; i < d; ++i) H(i, j) = (gp[i] - gm[i]) / (2.0 * fd_step);
    }
    for (int i = 0; i < d; ++i) {
        H(i, d) = g[i];
        H(d, i) = g[i];
    }
    H(d, d) = 1.0;
    H.symmetrize();
    return H;
}

// Hutchinson-style Frobenius estimate: draws z ~ N(0, I_dim) and returns the
// sample means of ||Hz||_2 and ||Hz||_2^2. The second moment is the unbiased
// route to ||H||_F^2 = E||Hz||^2; the first mean undershoots ||H||_F by
// Jensen.
inline std::pair<double, double> frobenius_estimate(const std::function<Vec(const Vec&)>& apply,
                                                    int dim, int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("frobenius_estimate: n must be >= 1");
    double mean_norm = 0.0;
    double mean_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec z = rng.normal_vec(dim);
        double nsq = l2_norm_sq(apply(z));
        mean_norm += std::sqrt(nsq);
        mean_sq += nsq;
    }
    return {mean_norm / n, mean_sq / n};
}

struct Prop1Mode {
    enum Kind { Sampled, ExactFrobenius } kind = ExactFrobenius;
    int n = 1;

    static Prop1Mode sampled(int n) { return {Sampled, n}; }
    static Prop1Mode exact() { return {ExactFrobenius, 1}; }
};

// Upper bound on max_{||delta||_inf <= eps} of the second-order expansion:
//   loss(x) + ((d eps^2 + 1)/2) F - 1/2.
// ExactFrobenius takes F = ||H||_F from the materialized oracle and is a
// certificate; Sampled(n) takes the mean of ||Hz||_2 over n FD products and
// can undershoot (Jensen gap).
inline double prop1_bound(const DiffFunction& f, const ParamSet& w, const Vec& x, double y,
                          double eps, const Prop1Mode& mode, RngStream* rng, double h = 1e-3) {
    const int d = f.input_dim();
    const double coeff = 0.5 * (d * eps * eps + 1.0);
    double F = 0.0;
    if (mode.kind == Prop1Mode::ExactFrobenius) {
        F = exact_augmented_hessian(f, w, x, y).frobenius();
    } else {
        if (!rng) throw std::invalid_argument("prop1_bound: Sampled mode needs an RNG stream");
        auto [mean_norm, mean_sq] = frobenius_estimate(
            [&](const Vec& z) { return augmented_hvp(f, w, x, y, z, h); }, d + 1, mode.n, *rng);
        (void)mean_sq;
        F = mean_norm;
    }
    return f.eval_loss(x, y, w) + coeff * F - 0.5;
}

} // namespace reg
} // namespace soar
