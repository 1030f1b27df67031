#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "soar/common.hpp"
#include "soar/rng.hpp"

namespace soar {

// One named parameter block. cols == 1 means a plain vector.
struct ParamBlock {
    std::string name;
    int rows = 0;
    int cols = 1;
    Vec data;

    ParamBlock() = default;
    ParamBlock(std::string n, int r, int c)
        : name(std::move(n)), rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

// A model's parameters as an ordered sequence of blocks. Block shapes are
// fixed after construction; arithmetic helpers below require matching shapes.
struct ParamSet {
    std::vector<ParamBlock> blocks;

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& b : blocks) n += b.data.size();
        return n;
    }

    const ParamBlock& block(const std::string& name) const {
        for (const auto& b : blocks)
            if (b.name == name) return b;
        throw std::invalid_argument("ParamSet: no block named " + name);
    }

    ParamBlock& block(const std::string& name) {
        for (auto& b : blocks)
            if (b.name == name) return b;
        throw std::invalid_argument("ParamSet: no block named " + name);
    }
};

inline void check_same_shape(const ParamSet& a, const ParamSet& b) {
    if (a.blocks.size() != b.blocks.size())
        throw std::invalid_argument("ParamSet: block count mismatch");
    for (std::size_t i = 0; i < a.blocks.size(); ++i)
        if (a.blocks[i].rows != b.blocks[i].rows || a.blocks[i].cols != b.blocks[i].cols)
            throw std::invalid_argument("ParamSet: shape mismatch in block " + a.blocks[i].name);
}

inline ParamSet zeros_like(const ParamSet& p) {
    ParamSet z = p;
    for (auto& b : z.blocks)
        for (auto& x : b.data) x = 0.0;
    return z;
}

inline void axpy(double a, const ParamSet& x, ParamSet& y) {
    check_same_shape(x, y);
    for (std::size_t i = 0; i < x.blocks.size(); ++i)
        axpy(a, x.blocks[i].data, y.blocks[i].data);
}

inline void scale(ParamSet& p, double a) {
    for (auto& b : p.blocks)
        for (auto& x : b.data) x *= a;
}

inline double dot(const ParamSet& a, const ParamSet& b) {
    check_same_shape(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.blocks.size(); ++i) s += dot(a.blocks[i].data, b.blocks[i].data);
    return s;
}

inline double l2_norm(const ParamSet& p) {
    double s = 0.0;
    for (const auto& b : p.blocks) s += l2_norm_sq(b.data);
    return std::sqrt(s);
}

inline bool all_finite(const ParamSet& p) {
    for (const auto& b : p.blocks)
        if (!all_finite(b.data)) return false;
    return true;
}

// A differentiable scalar loss over (input, target, parameters). Evaluation
// is deterministic; gradients are defined everywhere except the measure-zero
// kink set of piecewise-smooth activations (subgradient 0 at the kink).
//
// Gradients are explicit calls on an immutable (function, params) pair; there
// is no tape state, so concurrent evaluation from multiple threads is safe.
// For classifiers y is the class id in [0, C); for regressors y is the real
// target.
class DiffFunction {
public:
    virtual ~DiffFunction() = default;

    virtual int input_dim() const = 0;
    // 0 for regressors
    virtual int class_count() const = 0;

    virtual double eval_loss(const Vec& x, double y, const ParamSet& w) const = 0;
    virtual Vec input_gradient(const Vec& x, double y, const ParamSet& w) const = 0;
    virtual ParamSet param_gradient(const Vec& x, double y, const ParamSet& w) const = 0;

    // Loss plus either gradient in one pass; null pointers skip that output.
    virtual double loss_with_gradients(const Vec& x, double y, const ParamSet& w, Vec* gx,
                                       ParamSet* gw) const {
        if (gx) *gx = input_gradient(x, y, w);
        if (gw) *gw = param_gradient(x, y, w);
        return eval_loss(x, y, w);
    }

    // Class probabilities, summing to 1. Regressors have none.
    virtual Vec class_probabilities(const Vec&, const ParamSet&) const {
        throw std::logic_error("class_probabilities: not a classifier");
    }

    virtual ParamSet init_params(RngStream& rng) const = 0;

    int predicted_class(const Vec& x, const ParamSet& w) const {
        Vec p = class_probabilities(x, w);
        int best = 0;
        for (int c = 1; c < static_cast<int>(p.size()); ++c)
            if (p[c] > p[best]) best = c;
        return best;
    }

protected:
    double finite_or_throw(double v) const {
        if (!std::isfinite(v)) throw std::domain_error("loss is not finite (numerical overflow)");
        return v;
    }
};

} // namespace soar
