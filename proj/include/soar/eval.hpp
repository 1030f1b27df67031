#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "soar/attacks.hpp"
#include "soar/datasets.hpp"

namespace soar {
namespace eval {

using attacks::PerturbationBudget;

// All accuracies below are exact counts over the dataset divided by its size.
// Attack randomness comes from per-example streams, so results are identical
// for any thread count.

inline double clean_accuracy(const DiffFunction& f, const ParamSet& w, const data::Dataset& ds,
                             int threads = 1) {
    std::vector<char> ok(ds.size(), 0);
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        ok[i] = f.predicted_class(ds.inputs[i], w) == ds.labels[i];
    });
    std::size_t correct = 0;
    for (char c : ok) correct += c;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// Fraction still classified correctly at the per-example PGD point.
inline double robust_accuracy(const DiffFunction& f, const ParamSet& w, const data::Dataset& ds,
                              const PerturbationBudget& budget, std::uint64_t seed,
                              int threads = 1) {
    budget.validate();
    std::vector<char> ok(ds.size(), 0);
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        Vec xa =
            attacks::pgd(f, w, ds.inputs[i], ds.y_of(i), budget, attacks::example_stream(seed, i));
        ok[i] = f.predicted_class(xa, w) == ds.labels[i];
    });
    std::size_t correct = 0;
    for (char c : ok) correct += c;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// Adversarial points generated against the source model, evaluated on the
// target. Shares the robust_accuracy stream labels, so source == target
// reproduces the white-box number exactly.
inline double transfer_robust_accuracy(const DiffFunction& target_f, const ParamSet& target_w,
                                       const DiffFunction& source_f, const ParamSet& source_w,
                                       const data::Dataset& ds, const PerturbationBudget& budget,
                                       std::uint64_t seed, int threads = 1) {
    budget.validate();
    if (target_f.input_dim() != source_f.input_dim())
        throw std::invalid_argument("transfer_robust_accuracy: input dimension mismatch");
    std::vector<char> ok(ds.size(), 0);
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        Vec xa = attacks::pgd(source_f, source_w, ds.inputs[i], ds.y_of(i), budget,
                              attacks::example_stream(seed, i));
        ok[i] = target_f.predicted_class(xa, target_w) == ds.labels[i];
    });
    std::size_t correct = 0;
    for (char c : ok) correct += c;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

enum class ConfMode { Clean, Random, Pgd1 };

inline const char* conf_mode_name(ConfMode m) {
    switch (m) {
        case ConfMode::Clean: return "clean";
        case ConfMode::Random: return "random";
        default: return "pgd1";
    }
}

struct ConfidenceStats {
    double mean = 0.0;
    double stddev = 0.0;
};

// Mean and std of the max-class probability over the dataset, with inputs
// taken clean, uniformly perturbed inside the budget ball, or at a 1-step
// PGD point.
inline ConfidenceStats confidence_stats(const DiffFunction& f, const ParamSet& w,
                                        const data::Dataset& ds, ConfMode mode,
                                        const PerturbationBudget& budget, std::uint64_t seed,
                                        int threads = 1) {
    std::vector<double> conf(ds.size(), 0.0);
    PerturbationBudget one_step = budget;
    one_step.iters = 1;
    one_step.restarts = 1;
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        Vec x = ds.inputs[i];
        if (mode == ConfMode::Random) {
            RngStream rng(seed, "confidence/example/" + std::to_string(i));
            for (auto& v : x) v += rng.uniform(-budget.eps, budget.eps);
            apply_clamp(x, budget.clamp_box);
        } else if (mode == ConfMode::Pgd1) {
            x = attacks::pgd(f, w, x, ds.y_of(i), one_step, attacks::example_stream(seed, i));
        }
        Vec p = f.class_probabilities(x, w);
        double best = 0.0;
        for (double v : p) best = std::max(best, v);
        conf[i] = best;
    });
    ConfidenceStats out;
    for (double c : conf) out.mean += c;
    out.mean /= static_cast<double>(conf.size());
    for (double c : conf) out.stddev += (c - out.mean) * (c - out.mean);
    out.stddev = std::sqrt(out.stddev / static_cast<double>(conf.size()));
    return out;
}

// Mean count of input-gradient coordinates with |g_i| > tau; tau = 0 counts
// exact nonzeros (dead rectifier paths and saturated residuals produce exact
// zeros in double precision).
inline double grad_nonzero_count(const DiffFunction& f, const ParamSet& w,
                                 const data::Dataset& ds, double tau = 0.0, int threads = 1) {
    std::vector<double> counts(ds.size(), 0.0);
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        Vec g = f.input_gradient(ds.inputs[i], ds.y_of(i), w);
        int c = 0;
        for (double v : g)
            if (std::abs(v) > tau) ++c;
        counts[i] = c;
    });
    double mean = 0.0;
    for (double c : counts) mean += c;
    return mean / static_cast<double>(counts.size());
}

// Loss along the segment between x' (alpha = 0) and x (alpha = 1).
inline std::vector<std::pair<double, double>> loss_interpolation(const DiffFunction& f,
                                                                 const ParamSet& w, const Vec& x,
                                                                 const Vec& x_prime, double y,
                                                                 int steps) {
    if (steps < 2) throw std::invalid_argument("loss_interpolation: steps must be >= 2");
    check_dim(x_prime, x.size(), "loss_interpolation");
    std::vector<std::pair<double, double>> curve;
    curve.reserve(steps);
    for (int s = 0; s < steps; ++s) {
        double alpha = static_cast<double>(s) / static_cast<double>(steps - 1);
        Vec p(x.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = alpha * x[i] + (1.0 - alpha) * x_prime[i];
        curve.emplace_back(alpha, f.eval_loss(p, y, w));
    }
    return curve;
}

// Side-by-side inner-max estimates: mean loss at the linf PGD20 point with
// radius eps versus the l2 PGD100 point with radius sqrt(d)*eps. The second
// feasible set encloses the first.
inline std::pair<double, double> relaxation_gap(const DiffFunction& f, const ParamSet& w,
                                                const data::Dataset& ds, double eps,
                                                std::uint64_t seed,
                                                std::optional<ClampBox> clamp = std::nullopt,
                                                int threads = 1) {
    if (eps <= 0.0) throw std::invalid_argument("relaxation_gap: eps must be > 0");
    PerturbationBudget linf{attacks::NormKind::Linf, eps, eps / 4.0, 20, 1, true, clamp};
    double r2 = std::sqrt(static_cast<double>(f.input_dim())) * eps;
    PerturbationBudget l2{attacks::NormKind::L2, r2, r2 / 4.0, 100, 1, true, clamp};

    std::vector<double> loss_inf(ds.size(), 0.0), loss_l2(ds.size(), 0.0);
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        double y = ds.y_of(i);
        Vec a = attacks::pgd(f, w, ds.inputs[i], y, linf,
                             derive_seed(seed, "gap/linf/example/" + std::to_string(i)));
        Vec b = attacks::pgd(f, w, ds.inputs[i], y, l2,
                             derive_seed(seed, "gap/l2/example/" + std::to_string(i)));
        loss_inf[i] = f.eval_loss(a, y, w);
        loss_l2[i] = f.eval_loss(b, y, w);
    });
    double mi = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        mi += loss_inf[i];
        ml += loss_l2[i];
    }
    double n = static_cast<double>(ds.size());
    return {mi / n, ml / n};
}

// Robust accuracy when the linf radius saturates the [0,1] input range
// (eps = 1) with the step left unchanged; a model without masked gradients
// should approach zero.
inline double saturation_attack_accuracy(const DiffFunction& f, const ParamSet& w,
                                         const data::Dataset& ds,
                                         const PerturbationBudget& base, std::uint64_t seed,
                                         int threads = 1) {
    PerturbationBudget b = base;
    b.norm = attacks::NormKind::Linf;
    b.eps = 1.0;
    b.iters = 20;
    b.clamp_box = ClampBox{0.0, 1.0};
    return robust_accuracy(f, w, ds, b, derive_seed(seed, "saturation"), threads);
}

struct EvalReport {
    double clean_acc = 0.0;
    std::map<std::string, double> attack_acc;
    std::map<std::string, ConfidenceStats> confidence;  // keyed by mode name
    double grad_nonzero_mean = -1.0;
    std::optional<std::pair<double, double>> relaxation;  // (linf loss, l2 loss)
    std::optional<double> saturation_acc;
    std::map<std::string, double> transfer_acc;
};

} // namespace eval
} // namespace soar
