#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "soar/diffcore.hpp"

namespace soar {
namespace attacks {

enum class NormKind { Linf, L2 };

inline const char* norm_name(NormKind n) { return n == NormKind::Linf ? "linf" : "l2"; }

struct PerturbationBudget {
    NormKind norm = NormKind::Linf;
    double eps = 0.0;
    double step = 0.0;
    int iters = 0;
    int restarts = 1;
    bool random_init = true;
    std::optional<ClampBox> clamp_box;

    void validate() const {
        if (eps < 0.0) throw std::invalid_argument("PerturbationBudget: eps must be >= 0");
        if (iters < 0) throw std::invalid_argument("PerturbationBudget: iters must be >= 0");
        if (restarts < 1) throw std::invalid_argument("PerturbationBudget: restarts must be >= 1");
        if (iters > 0 && step <= 0.0)
            throw std::invalid_argument("PerturbationBudget: step must be > 0 when iterating");
        if (iters > 0 && step > 2.0 * eps)
            throw std::invalid_argument("PerturbationBudget: step must be <= 2*eps");
    }
};

// Projection onto the norm ball around `center` plus the clamp box.
// Linf: coordinate-wise clamp to [center - eps, center + eps];
// L2: radial scaling when outside the ball.
inline Vec project(const Vec& p, const Vec& center, const PerturbationBudget& b) {
    check_dim(p, center.size(), "project");
    Vec out = p;
    if (b.norm == NormKind::Linf) {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = std::clamp(out[i], center[i] - b.eps, center[i] + b.eps);
    } else {
        Vec delta = out - center;
        double n = l2_norm(delta);
        if (n > b.eps) {
            double s = b.eps / n;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = center[i] + s * delta[i];
        }
    }
    apply_clamp(out, b.clamp_box);
    return out;
}

// Single-step attack x + eps * sign(grad), with sign(0) = 0.
inline Vec fgsm(const DiffFunction& f, const ParamSet& w, const Vec& x, double y, double eps,
                const std::optional<ClampBox>& clamp_box = std::nullopt) {
    if (eps < 0.0) throw std::invalid_argument("fgsm: eps must be >= 0");
    Vec g = f.input_gradient(x, y, w);
    Vec out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += eps * sgn(g[i]);
    apply_clamp(out, clamp_box);
    return out;
}

// Uniform draw from the budget's ball around x (the PGD random start).
inline Vec random_point_in_ball(const Vec& x, const PerturbationBudget& b, RngStream& rng) {
    Vec p = x;
    if (b.norm == NormKind::Linf) {
        for (auto& v : p) v += rng.uniform(-b.eps, b.eps);
    } else {
        Vec dir = rng.normal_vec(x.size());
        double n = l2_norm(dir);
        if (n > 0.0) {
            double radius =
                b.eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(x.size()));
            axpy(radius / n, dir, p);
        }
    }
    apply_clamp(p, b.clamp_box);
    return p;
}

// Projected gradient ascent on the loss inside the budget ball. Each restart
// starts at x (+ a random draw when random_init), ascends by step*sign(grad)
// (Linf) or step*grad/||grad|| (L2), and projects after every step. The
// returned point is the highest-loss restart endpoint; ties keep the first.
// A zero gradient yields no movement that iteration.
inline Vec pgd(const DiffFunction& f, const ParamSet& w, const Vec& x, double y,
               const PerturbationBudget& b, std::uint64_t stream_seed) {
    b.validate();
    Vec best = x;
    double best_loss = -1.0;
    bool have_best = false;
    for (int r = 0; r < b.restarts; ++r) {
        RngStream rng(stream_seed, "restart/" + std::to_string(r));
        Vec p = b.random_init ? random_point_in_ball(x, b, rng) : x;
        p = project(p, x, b);
        for (int it = 0; it < b.iters; ++it) {
            Vec g = f.input_gradient(p, y, w);
            if (b.norm == NormKind::Linf) {
                for (std::size_t i = 0; i < p.size(); ++i) p[i] += b.step * sgn(g[i]);
            } else {
                double n = l2_norm(g);
                if (n > 0.0) axpy(b.step / n, g, p);
            }
            p = project(p, x, b);
        }
        double loss = f.eval_loss(p, y, w);
        if (!have_best || loss > best_loss) {
            have_best = true;
            best_loss = loss;
            best = p;
        }
    }
    return best;
}

// Per-example stream label used by batch attack drivers, so results do not
// depend on evaluation order or thread count.
inline std::uint64_t example_stream(std::uint64_t seed, std::size_t example_index) {
    return derive_seed(seed, "attack/example/" + std::to_string(example_index));
}

} // namespace attacks
} // namespace soar
