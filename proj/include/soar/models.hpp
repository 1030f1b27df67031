#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "soar/diffcore.hpp"

namespace soar {
namespace models {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] inside the losses;
// high-confidence regimes otherwise hand log() an exact 0.
inline constexpr double kProbClamp = 1e-12;

inline double sigmoid(double s) {
    if (s >= 0.0) {
        double e = std::exp(-s);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(s);
    return e / (1.0 + e);
}

// Squared-error linear model against fixed target weights wstar:
//   loss(x) = 1/2 |<x, w> - <x, wstar>|^2,  residual r = <x, w - wstar>.
// The target moves with x, so the supplied y is ignored.
class LinearRegressor final : public DiffFunction {
public:
    explicit LinearRegressor(Vec wstar) : wstar_(std::move(wstar)) {}

    int input_dim() const override { return static_cast<int>(wstar_.size()); }
    int class_count() const override { return 0; }
    const Vec& wstar() const { return wstar_; }

    double residual(const Vec& x, const ParamSet& w) const {
        check_dim(x, wstar_.size(), "LinearRegressor");
        const Vec& wv = w.block("w").data;
        return dot(x, wv) - dot(x, wstar_);
    }

    double eval_loss(const Vec& x, double, const ParamSet& w) const override {
        double r = residual(x, w);
        return finite_or_throw(0.5 * r * r);
    }

    Vec input_gradient(const Vec& x, double, const ParamSet& w) const override {
        double r = residual(x, w);
        const Vec& wv = w.block("w").data;
        Vec g(wv.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = r * (wv[i] - wstar_[i]);
        return g;
    }

    ParamSet param_gradient(const Vec& x, double, const ParamSet& w) const override {
        double r = residual(x, w);
        ParamSet g = zeros_like(w);
        Vec& gv = g.block("w").data;
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = r * x[i];
        return g;
    }

    ParamSet init_params(RngStream& rng) const override {
        ParamSet p;
        p.blocks.emplace_back("w", input_dim(), 1);
        for (auto& v : p.blocks[0].data) v = rng.normal();
        return p;
    }

    ParamSet params_from(Vec w) const {
        ParamSet p;
        p.blocks.emplace_back("w", input_dim(), 1);
        p.blocks[0].data = std::move(w);
        return p;
    }

private:
    Vec wstar_;
};

// Binary logistic model f(x) = sigmoid(<w, x>) with cross-entropy loss,
// y in {0, 1}.
class LogisticClassifier final : public DiffFunction {
public:
    explicit LogisticClassifier(int d) : d_(d) {}

    int input_dim() const override { return d_; }
    int class_count() const override { return 2; }

    double score(const Vec& x, const ParamSet& w) const {
        check_dim(x, static_cast<std::size_t>(d_), "LogisticClassifier");
        return dot(w.block("w").data, x);
    }

    double eval_loss(const Vec& x, double y, const ParamSet& w) const override {
        double f = std::clamp(sigmoid(score(x, w)), kProbClamp, 1.0 - kProbClamp);
        double loss = -(y * std::log(f) + (1.0 - y) * std::log(1.0 - f));
        return finite_or_throw(loss);
    }

    Vec input_gradient(const Vec& x, double y, const ParamSet& w) const override {
        double r = sigmoid(score(x, w)) - y;
        Vec g(d_);
        const Vec& wv = w.block("w").data;
        for (int i = 0; i < d_; ++i) g[i] = r * wv[i];
        return g;
    }

    ParamSet param_gradient(const Vec& x, double y, const ParamSet& w) const override {
        double r = sigmoid(score(x, w)) - y;
        ParamSet g = zeros_like(w);
        Vec& gv = g.block("w").data;
        for (int i = 0; i < d_; ++i) gv[i] = r * x[i];
        return g;
    }

    Vec class_probabilities(const Vec& x, const ParamSet& w) const override {
        double f = sigmoid(score(x, w));
        return {1.0 - f, f};
    }

    ParamSet init_params(RngStream& rng) const override {
        ParamSet p;
        p.blocks.emplace_back("w", d_, 1);
        double s = 1.0 / std::sqrt(static_cast<double>(d_));
        for (auto& v : p.blocks[0].data) v = s * rng.normal();
        return p;
    }

    ParamSet params_from(Vec w) const {
        ParamSet p;
        p.blocks.emplace_back("w", d_, 1);
        p.blocks[0].data = std::move(w);
        return p;
    }

private:
    int d_;
};

// Closed forms for the logistic model at (x, y):
//   grad    = r w            with r = f(x) - y
//   hessian = u w w^T        with u = f(x)(1 - f(x))
struct LogisticClosedForms {
    Vec grad;
    Mat hessian;
    double r = 0.0;
    double u = 0.0;
};

inline LogisticClosedForms logistic_closed_forms(const LogisticClassifier& m, const Vec& x,
                                                 double y, const ParamSet& w) {
    double f = sigmoid(m.score(x, w));
    LogisticClosedForms out;
    out.r = f - y;
    out.u = f * (1.0 - f);
    const Vec& wv = w.block("w").data;
    out.grad.resize(wv.size());
    for (std::size_t i = 0; i < wv.size(); ++i) out.grad[i] = out.r * wv[i];
    out.hessian = Mat(m.input_dim(), m.input_dim());
    for (int i = 0; i < m.input_dim(); ++i)
        for (int j = 0; j < m.input_dim(); ++j) out.hessian(i, j) = out.u * wv[i] * wv[j];
    return out;
}

// Exact inner maximum of the second-order expansion of the logistic loss over
// the l2 ball of radius sqrt(d)*eps:
//   loss(x) + eps sqrt(d) |r| ||w||_2 + (d eps^2 / 2) u ||w||_2^2.
inline double logistic_inner_max_closed_form(const LogisticClassifier& m, const Vec& x, double y,
                                             const ParamSet& w, double eps) {
    if (eps < 0.0) throw std::invalid_argument("logistic_inner_max_closed_form: eps must be >= 0");
    auto cf = logistic_closed_forms(m, x, y, w);
    double wn = l2_norm(w.block("w").data);
    double d = static_cast<double>(m.input_dim());
    return m.eval_loss(x, y, w) + eps * std::sqrt(d) * std::abs(cf.r) * wn +
           0.5 * d * eps * eps * cf.u * wn * wn;
}

// Fully connected rectifier network with a softmax cross-entropy head.
// Parameter blocks: W1,b1,...,Wk,bk (hidden), Wout,bout. relu'(0) = 0.
class MlpClassifier final : public DiffFunction {
public:
    MlpClassifier(int input_dim, std::vector<int> hidden, int classes)
        : d_(input_dim), hidden_(std::move(hidden)), classes_(classes) {
        if (classes_ < 2) throw std::invalid_argument("MlpClassifier: classes must be >= 2");
        widths_.push_back(d_);
        for (int h : hidden_) widths_.push_back(h);
        widths_.push_back(classes_);
    }

    int input_dim() const override { return d_; }
    int class_count() const override { return classes_; }
    const std::vector<int>& hidden() const { return hidden_; }

    double eval_loss(const Vec& x, double y, const ParamSet& w) const override {
        Trace t = forward(x, w);
        return finite_or_throw(loss_from_probs(t.probs, label_of(y)));
    }

    Vec input_gradient(const Vec& x, double y, const ParamSet& w) const override {
        Trace t = forward(x, w);
        Vec gx;
        backward(x, label_of(y), w, t, &gx, nullptr);
        return gx;
    }

    ParamSet param_gradient(const Vec& x, double y, const ParamSet& w) const override {
        Trace t = forward(x, w);
        ParamSet gw = zeros_like(w);
        backward(x, label_of(y), w, t, nullptr, &gw);
        return gw;
    }

    double loss_with_gradients(const Vec& x, double y, const ParamSet& w, Vec* gx,
                               ParamSet* gw) const override {
        Trace t = forward(x, w);
        if (gw) *gw = zeros_like(w);
        if (gx || gw) backward(x, label_of(y), w, t, gx, gw);
        return finite_or_throw(loss_from_probs(t.probs, label_of(y)));
    }

    Vec class_probabilities(const Vec& x, const ParamSet& w) const override {
        return forward(x, w).probs;
    }

    ParamSet init_params(RngStream& rng) const override {
        ParamSet p;
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            int in = widths_[l];
            int out = widths_[l + 1];
            ParamBlock W(weight_name(l), out, in);
            double s = std::sqrt(2.0 / static_cast<double>(in));
            for (auto& v : W.data) v = s * rng.normal();
            p.blocks.push_back(std::move(W));
            p.blocks.emplace_back(bias_name(l), out, 1);
        }
        return p;
    }

private:
    struct Trace {
        std::vector<Vec> acts;     // acts[0] = x, acts[l+1] = relu(pre[l]) for hidden layers
        std::vector<Vec> preacts;  // preacts[l] = W_l acts[l] + b_l
        Vec probs;
    };

    static int label_of(double y) { return static_cast<int>(std::lround(y)); }

    std::string weight_name(std::size_t l) const {
        return l + 2 == widths_.size() ? "Wout" : "W" + std::to_string(l + 1);
    }
    std::string bias_name(std::size_t l) const {
        return l + 2 == widths_.size() ? "bout" : "b" + std::to_string(l + 1);
    }

    double loss_from_probs(const Vec& probs, int y) const {
        if (y < 0 || y >= classes_) throw std::invalid_argument("MlpClassifier: label out of range");
        double py = std::clamp(probs[y], kProbClamp, 1.0 - kProbClamp);
        return -std::log(py);
    }

    Trace forward(const Vec& x, const ParamSet& w) const {
        check_dim(x, static_cast<std::size_t>(d_), "MlpClassifier");
        Trace t;
        t.acts.push_back(x);
        const std::size_t layers = widths_.size() - 1;
        for (std::size_t l = 0; l < layers; ++l) {
            const ParamBlock& W = w.block(weight_name(l));
            const ParamBlock& b = w.block(bias_name(l));
            const Vec& in = t.acts.back();
            Vec pre(W.rows);
            for (int i = 0; i < W.rows; ++i) {
                double s = b.data[i];
                for (int j = 0; j < W.cols; ++j) s += W.at(i, j) * in[j];
                pre[i] = s;
            }
            t.preacts.push_back(pre);
            if (l + 1 < layers) {
                Vec a(pre.size());
                for (std::size_t i = 0; i < pre.size(); ++i) a[i] = pre[i] > 0.0 ? pre[i] : 0.0;
                t.acts.push_back(std::move(a));
            }
        }
        t.probs = softmax(t.preacts.back());
        return t;
    }

    static Vec softmax(const Vec& logits) {
        double m = logits[0];
        for (double v : logits) m = std::max(m, v);
        Vec p(logits.size());
        double z = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = std::exp(logits[i] - m);
            z += p[i];
        }
        for (auto& v : p) v /= z;
        return p;
    }

    void backward(const Vec&, int y, const ParamSet& w, const Trace& t, Vec* gx,
                  ParamSet* gw) const {
        const std::size_t layers = widths_.size() - 1;
        // delta at the softmax head: p - onehot(y)
        Vec delta = t.probs;
        delta[y] -= 1.0;
        for (std::size_t l = layers; l-- > 0;) {
            const ParamBlock& W = w.block(weight_name(l));
            const Vec& in = t.acts[l];
            if (gw) {
                ParamBlock& gW = gw->block(weight_name(l));
                ParamBlock& gb = gw->block(bias_name(l));
                for (int i = 0; i < W.rows; ++i) {
                    gb.data[i] += delta[i];
                    for (int j = 0; j < W.cols; ++j) gW.at(i, j) += delta[i] * in[j];
                }
            }
            if (l == 0 && !gx) break;
            Vec prev(W.cols, 0.0);
            for (int i = 0; i < W.rows; ++i)
                for (int j = 0; j < W.cols; ++j) prev[j] += W.at(i, j) * delta[i];
            if (l > 0) {
                const Vec& pre = t.preacts[l - 1];
                for (std::size_t i = 0; i < prev.size(); ++i)
                    if (pre[i] <= 0.0) prev[i] = 0.0;
            }
            delta = std::move(prev);
        }
        if (gx) *gx = delta;
    }

    int d_;
    std::vector<int> hidden_;
    int classes_;
    std::vector<int> widths_;
};

} // namespace models
} // namespace soar
