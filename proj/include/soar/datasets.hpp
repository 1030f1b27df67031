#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "soar/rng.hpp"
#include "soar/toy.hpp"

namespace soar {
namespace data {

struct Dataset {
    int d = 0;
    int classes = 0;  // 0 for regression
    std::vector<Vec> inputs;
    std::vector<int> labels;      // classification
    std::vector<double> targets;  // regression
    std::string split;
    std::string provenance;

    std::size_t size() const { return inputs.size(); }

    void validate() const {
        if (classes > 0 && labels.size() != inputs.size())
            throw std::invalid_argument("Dataset: inputs/labels length mismatch");
        if (classes == 0 && targets.size() != inputs.size())
            throw std::invalid_argument("Dataset: inputs/targets length mismatch");
        for (const auto& x : inputs) {
            check_dim(x, static_cast<std::size_t>(d), "Dataset");
            if (!all_finite(x)) throw std::invalid_argument("Dataset: non-finite feature");
        }
        for (int y : labels)
            if (y < 0 || y >= classes) throw std::invalid_argument("Dataset: label out of range");
    }

    double y_of(std::size_t i) const {
        return classes > 0 ? static_cast<double>(labels[i]) : targets[i];
    }
};

struct BlobSpec {
    int d = 2;
    int classes = 2;
    int n_per_class = 500;
    double separation = 2.0;
    bool rescale01 = true;
};

// Gaussian blobs: class c is centered at separation * e_{c mod d} with unit
// isotropic noise. With rescale01, every coordinate is mapped by the fixed
// affine [-4, separation + 4] -> [0, 1] and clipped, so the clamp box and
// eps budgets are on the unit scale. Train and test use disjoint streams.
inline Dataset gen_gaussian_blobs(const BlobSpec& spec, const std::string& split,
                                  std::uint64_t seed) {
    if (spec.d < 2 || spec.classes < 2)
        throw std::invalid_argument("gen_gaussian_blobs: need d >= 2 and classes >= 2");
    if (spec.n_per_class < 1) throw std::invalid_argument("gen_gaussian_blobs: n_per_class >= 1");

    Dataset ds;
    ds.d = spec.d;
    ds.classes = spec.classes;
    ds.split = split;
    const double lo = -4.0;
    const double hi = spec.separation + 4.0;
    for (int c = 0; c < spec.classes; ++c) {
        RngStream rng(seed, "blobs/" + split + "/class/" + std::to_string(c));
        for (int i = 0; i < spec.n_per_class; ++i) {
            Vec x(spec.d);
            for (int k = 0; k < spec.d; ++k) {
                double center = (k == c % spec.d) ? spec.separation : 0.0;
                x[k] = center + rng.normal();
                if (spec.rescale01) x[k] = std::clamp((x[k] - lo) / (hi - lo), 0.0, 1.0);
            }
            ds.inputs.push_back(std::move(x));
            ds.labels.push_back(c);
        }
    }
    std::ostringstream prov;
    prov << "blobs(d=" << spec.d << ",C=" << spec.classes << ",n=" << spec.n_per_class
         << ",sep=" << spec.separation << ",seed=" << seed << ",split=" << split;
    if (spec.rescale01) prov << ",affine=[" << lo << "," << hi << "]->[0,1]";
    prov << ")";
    ds.provenance = prov.str();
    return ds;
}

// Subspace regression data: x1 from the toy distribution, all other
// coordinates exactly 0, targets <x, w*> = x1 * wstar1.
inline Dataset gen_subspace_toy(const toy::ToySpec& spec, int n, const std::string& split,
                                std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("gen_subspace_toy: n must be >= 1");
    Dataset ds;
    ds.d = spec.d;
    ds.classes = 0;
    ds.split = split;
    RngStream rng(seed, "subspace_toy/" + split);
    for (int i = 0; i < n; ++i) {
        Vec x(spec.d, 0.0);
        x[0] = spec.mu1 + rng.normal();
        ds.targets.push_back(x[0] * spec.wstar1);
        ds.inputs.push_back(std::move(x));
    }
    std::ostringstream prov;
    prov << "subspace_toy(d=" << spec.d << ",mu1=" << spec.mu1 << ",n=" << n << ",seed=" << seed
         << ",split=" << split << ")";
    ds.provenance = prov.str();
    return ds;
}

inline std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x00000100000001b3ull;
        }
    }
    return h;
}

// CSV rows: d decimal features then one integer label, comma-separated, no
// header. Malformed rows and out-of-range labels fail with the line number.
inline Dataset load_csv(const std::string& path, int d, int classes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    Dataset ds;
    ds.d = d;
    ds.classes = classes;
    ds.split = "file";
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start_pos = 0;
        while (true) {
            std::size_t comma = line.find(',', start_pos);
            fields.push_back(line.substr(start_pos, comma - start_pos));
            if (comma == std::string::npos) break;
            start_pos = comma + 1;
        }
        if (static_cast<int>(fields.size()) != d + 1)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(d + 1) + " fields, got " +
                                     std::to_string(fields.size()));
        Vec x(d);
        for (int j = 0; j < d; ++j) {
            const std::string& s = fields[j];
            char* end = nullptr;
            x[j] = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0' || !std::isfinite(x[j]))
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": bad feature value '" + s + "'");
        }
        const std::string& ls = fields[d];
        int label = 0;
        auto [p, ec] = std::from_chars(ls.data(), ls.data() + ls.size(), label);
        if (ec != std::errc{} || p != ls.data() + ls.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad label '" + ls +
                                     "'");
        if (label < 0 || label >= classes)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": label " +
                                     std::to_string(label) + " out of range [0, " +
                                     std::to_string(classes) + ")");
        ds.inputs.push_back(std::move(x));
        ds.labels.push_back(label);
    }
    ds.provenance = "csv(" + path + ",hash=" + std::to_string(file_hash(path)) + ")";
    return ds;
}

inline void save_csv(const Dataset& ds, const std::string& path) {
    if (ds.classes == 0) throw std::invalid_argument("save_csv: classification datasets only");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    char buf[64];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < ds.d; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.inputs[i][j]);
            out << buf << ',';
        }
        out << ds.labels[i] << '\n';
    }
}

} // namespace data
} // namespace soar
