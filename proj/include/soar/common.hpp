#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace soar {

using Vec = std::vector<double>;

inline void check_dim(const Vec& v, std::size_t expected, const char* what) {
    if (v.size() != expected)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch, got " +
                                    std::to_string(v.size()) + ", expected " +
                                    std::to_string(expected));
}

inline double dot(const Vec& a, const Vec& b) {
    check_dim(b, a.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l1_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline double l2_norm_sq(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double l2_norm(const Vec& v) { return std::sqrt(l2_norm_sq(v)); }

inline double linf_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

// sign with sign(0) = 0
inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

inline Vec operator+(const Vec& a, const Vec& b) {
    check_dim(b, a.size(), "operator+");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    check_dim(b, a.size(), "operator-");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec operator*(double a, const Vec& v) {
    Vec r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = a * v[i];
    return r;
}

inline void axpy(double a, const Vec& x, Vec& y) {
    check_dim(y, x.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Per-coordinate clamp box [lo, hi], shared across coordinates.
struct ClampBox {
    double lo = 0.0;
    double hi = 1.0;
};

inline void apply_clamp(Vec& v, const std::optional<ClampBox>& box) {
    if (!box) return;
    for (double& x : v) x = std::clamp(x, box->lo, box->hi);
}

// Small dense row-major matrix for oracle-scale work.
struct Mat {
    int rows = 0;
    int cols = 0;
    Vec a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

    Vec apply(const Vec& x) const {
        check_dim(x, static_cast<std::size_t>(cols), "Mat::apply");
        Vec y(rows, 0.0);
        for (int i = 0; i < rows; ++i) {
            double s = 0.0;
            const double* row = &a[static_cast<std::size_t>(i) * cols];
            for (int j = 0; j < cols; ++j) s += row[j] * x[j];
            y[i] = s;
        }
        return y;
    }

    Vec apply_transposed(const Vec& x) const {
        check_dim(x, static_cast<std::size_t>(rows), "Mat::apply_transposed");
        Vec y(cols, 0.0);
        for (int i = 0; i < rows; ++i) {
            const double* row = &a[static_cast<std::size_t>(i) * cols];
            for (int j = 0; j < cols; ++j) y[j] += row[j] * x[i];
        }
        return y;
    }

    double frobenius_sq() const { return l2_norm_sq(a); }
    double frobenius() const { return std::sqrt(frobenius_sq()); }

    void symmetrize() {
        if (rows != cols) throw std::invalid_argument("symmetrize: square matrix required");
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < i; ++j) {
                double m = 0.5 * ((*this)(i, j) + (*this)(j, i));
                (*this)(i, j) = m;
                (*this)(j, i) = m;
            }
    }
};

// Runs fn(i) for i in [0, n). Results must be written to per-index slots so
// the outcome does not depend on the thread count.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int t = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(t);
    std::exception_ptr err;
    std::mutex err_mu;
    for (int k = 0; k < t; ++k) {
        pool.emplace_back([&, k]() {
            try {
                for (std::size_t i = k; i < n; i += t) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

} // namespace soar
