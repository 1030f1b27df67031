#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "soar/attacks.hpp"
#include "soar/datasets.hpp"
#include "soar/regularizers.hpp"

namespace soar {
namespace train {

enum class TrainMethod { Standard, AdvPgd, Foar, Soar };

inline const char* method_name(TrainMethod m) {
    switch (m) {
        case TrainMethod::Standard: return "standard";
        case TrainMethod::AdvPgd: return "adv_pgd";
        case TrainMethod::Foar: return "foar";
        default: return "soar";
    }
}

struct LrSchedule {
    double initial = 0.1;
    std::vector<int> decay_epochs;
    double decay_factor = 0.1;

    double at(int epoch) const {
        double lr = initial;
        for (int e : decay_epochs)
            if (epoch >= e) lr *= decay_factor;
        return lr;
    }
};

struct EarlyStopSpec {
    std::string metric;  // empty disables; train_loss | clean_acc | probe_pgd_acc
    int patience = 0;
};

// Signals stop once the metric fails to improve for `patience` consecutive
// epochs; tracks the best epoch so its checkpoint can be retained.
struct EarlyStopMonitor {
    int patience = 1;
    bool higher_better = true;
    bool has_best = false;
    double best = 0.0;
    int best_epoch = -1;
    int stale = 0;

    bool observe(int epoch, double value) {
        bool improved = !has_best || (higher_better ? value > best : value < best);
        if (improved) {
            has_best = true;
            best = value;
            best_epoch = epoch;
            stale = 0;
            return false;
        }
        return ++stale >= patience;
    }
};

struct TrainConfig {
    TrainMethod method = TrainMethod::Standard;
    int epochs = 10;
    int batch_size = 128;
    LrSchedule lr;
    double momentum = 0.9;
    double weight_decay = 2e-4;
    std::uint64_t seed = 1;

    // adversarial radius for AdvPgd / Foar / Soar
    double eps = 0.05;
    attacks::NormKind norm = attacks::NormKind::Linf;
    int pgd_k = 10;
    std::optional<ClampBox> clamp_box;

    reg::SoarConfig soar;
    EarlyStopSpec early_stop;

    // per-epoch probe attack (cheap PGD5 by default; set iters = 0 to skip)
    attacks::PerturbationBudget probe_budget{attacks::NormKind::Linf, 0.05, 0.0125, 5, 1, true,
                                             std::nullopt};

    void validate() const {
        if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
        if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
        if (method == TrainMethod::AdvPgd && pgd_k < 1)
            throw std::invalid_argument("TrainConfig: pgd_k must be >= 1");
        if (method == TrainMethod::Soar) soar.validate();
    }
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;  // mean pointwise loss term
    double reg_mean = 0.0;    // mean regularizer value (0 for Standard/AdvPgd)
    double clean_acc = -1.0;  // -1 when not a classifier
    double probe_pgd_acc = -1.0;
    double lr = 0.0;
};

struct RunRecord {
    std::vector<EpochMetrics> epochs;
    int best_epoch = -1;  // -1: no early-stop tracking
    bool aborted = false;
    std::string abort_reason;
    double wall_clock_sec = 0.0;
};

struct TrainResult {
    ParamSet params;
    RunRecord record;
};

inline double dataset_clean_accuracy(const DiffFunction& f, const ParamSet& w,
                                     const data::Dataset& ds) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (f.predicted_class(ds.inputs[i], w) == ds.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

inline double dataset_probe_pgd_accuracy(const DiffFunction& f, const ParamSet& w,
                                         const data::Dataset& ds,
                                         const attacks::PerturbationBudget& budget,
                                         std::uint64_t seed) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Vec xa = attacks::pgd(f, w, ds.inputs[i], ds.y_of(i), budget,
                              attacks::example_stream(seed, i));
        if (f.predicted_class(xa, w) == ds.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// Outer minimization: SGD with momentum and weight decay over the chosen
// pointwise objective. Deterministic for a fixed (config, seed, dataset)
// under single-threaded execution: batch order, attack noise and z draws all
// come from labeled streams, and the batch reduction runs in index order.
//
// SOAR batches clip the mean regularizer parameter-gradient to norm <=
// soar.clip before it joins the loss gradient. A non-finite batch objective
// aborts the run and reports the diagnostic instead of continuing.
inline TrainResult train(const DiffFunction& f, ParamSet w0, const data::Dataset& train_set,
                         const data::Dataset& probe_set, const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.size() == 0) throw std::invalid_argument("train: dataset is empty");
    auto t_start = std::chrono::steady_clock::now();

    TrainResult out;
    out.params = std::move(w0);
    ParamSet velocity = zeros_like(out.params);
    ParamSet best_params = out.params;

    EarlyStopMonitor monitor;
    const bool early = !cfg.early_stop.metric.empty() && cfg.early_stop.patience > 0;
    if (early) {
        monitor.patience = cfg.early_stop.patience;
        monitor.higher_better = cfg.early_stop.metric != "train_loss";
    }

    attacks::PerturbationBudget adv_budget;
    if (cfg.method == TrainMethod::AdvPgd) {
        adv_budget.norm = cfg.norm;
        adv_budget.eps = cfg.eps;
        adv_budget.step = std::min(2.5 * cfg.eps / cfg.pgd_k, cfg.eps);
        adv_budget.iters = cfg.pgd_k;
        adv_budget.restarts = 1;
        adv_budget.random_init = true;
        adv_budget.clamp_box = cfg.clamp_box;
    }

    const bool classifier = f.class_count() > 0;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cfg.lr.at(epoch);
        RngStream shuffle_rng(cfg.seed, "train/epoch/" + std::to_string(epoch) + "/shuffle");
        shuffle(order, shuffle_rng);

        double epoch_loss = 0.0;
        double epoch_reg = 0.0;
        std::size_t seen = 0;

        for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
            const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
            const double bn = static_cast<double>(b1 - b0);
            ParamSet loss_grad = zeros_like(out.params);
            ParamSet reg_grad = zeros_like(out.params);
            double batch_loss = 0.0;
            double batch_reg = 0.0;

            for (std::size_t k = b0; k < b1; ++k) {
                const std::size_t i = order[k];
                const Vec& x = train_set.inputs[i];
                const double y = train_set.y_of(i);
                const std::string ex_label =
                    "train/epoch/" + std::to_string(epoch) + "/example/" + std::to_string(i);
                switch (cfg.method) {
                    case TrainMethod::Standard: {
                        ParamSet g = zeros_like(out.params);
                        batch_loss += f.loss_with_gradients(x, y, out.params, nullptr, &g);
                        axpy(1.0, g, loss_grad);
                        break;
                    }
                    case TrainMethod::AdvPgd: {
                        Vec xa = attacks::pgd(f, out.params, x, y, adv_budget,
                                              derive_seed(cfg.seed, ex_label));
                        ParamSet g = zeros_like(out.params);
                        batch_loss += f.loss_with_gradients(xa, y, out.params, nullptr, &g);
                        axpy(1.0, g, loss_grad);
                        break;
                    }
                    case TrainMethod::Foar: {
                        auto fo = reg::foar_pointwise(f, out.params, x, y, cfg.eps, cfg.norm,
                                                      cfg.soar.h);
                        batch_loss += fo.loss_term;
                        batch_reg += fo.penalty;
                        axpy(1.0, fo.loss_grad, loss_grad);
                        axpy(1.0, fo.penalty_grad, reg_grad);
                        break;
                    }
                    case TrainMethod::Soar: {
                        RngStream rng(cfg.seed, ex_label);
                        auto sp = reg::soar_pointwise(f, out.params, x, y, cfg.eps, cfg.soar, rng);
                        batch_loss += sp.loss_term;
                        batch_reg += sp.penalty_mean;
                        axpy(1.0, sp.loss_grad, loss_grad);
                        axpy(1.0, sp.penalty_grad, reg_grad);
                        break;
                    }
                }
            }

            if (!std::isfinite(batch_loss) || !std::isfinite(batch_reg) ||
                !all_finite(loss_grad) || !all_finite(reg_grad)) {
                out.record.aborted = true;
                out.record.abort_reason = "non-finite batch objective at epoch " +
                                          std::to_string(epoch) +
                                          " (catastrophic overfitting guard)";
                out.record.wall_clock_sec =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                        .count();
                if (early && monitor.has_best) out.params = best_params;
                out.record.best_epoch = monitor.best_epoch;
                return out;
            }

            scale(loss_grad, 1.0 / bn);
            scale(reg_grad, 1.0 / bn);
            if (cfg.method == TrainMethod::Soar && cfg.soar.clip)
                reg::clip_to_norm(reg_grad, *cfg.soar.clip);
            axpy(1.0, reg_grad, loss_grad);
            if (cfg.weight_decay != 0.0) axpy(cfg.weight_decay, out.params, loss_grad);

            scale(velocity, cfg.momentum);
            axpy(1.0, loss_grad, velocity);
            axpy(-lr, velocity, out.params);

            epoch_loss += batch_loss;
            epoch_reg += batch_reg;
            seen += b1 - b0;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.lr = lr;
        m.train_loss = epoch_loss / static_cast<double>(seen);
        m.reg_mean = epoch_reg / static_cast<double>(seen);
        if (classifier && probe_set.size() > 0) {
            m.clean_acc = dataset_clean_accuracy(f, out.params, probe_set);
            if (cfg.probe_budget.iters > 0)
                m.probe_pgd_acc = dataset_probe_pgd_accuracy(
                    f, out.params, probe_set, cfg.probe_budget,
                    derive_seed(cfg.seed, "train/probe/epoch/" + std::to_string(epoch)));
        }
        out.record.epochs.push_back(m);

        if (early) {
            double value = m.train_loss;
            if (cfg.early_stop.metric == "clean_acc") value = m.clean_acc;
            if (cfg.early_stop.metric == "probe_pgd_acc") value = m.probe_pgd_acc;
            bool stop = monitor.observe(epoch, value);
            if (monitor.best_epoch == epoch) best_params = out.params;
            if (stop) break;
        }
    }

    if (early && monitor.has_best) out.params = best_params;
    out.record.best_epoch = monitor.best_epoch;
    out.record.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

} // namespace train
} // namespace soar
