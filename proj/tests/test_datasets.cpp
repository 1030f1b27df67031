#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "soar/datasets.hpp"

using namespace soar;
using data::BlobSpec;
using data::Dataset;

namespace {

// nearest-centroid classifier fit on train, scored on test
double nearest_centroid_accuracy(const Dataset& train, const Dataset& test) {
    std::vector<Vec> centroids(train.classes, Vec(train.d, 0.0));
    std::vector<int> counts(train.classes, 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        axpy(1.0, train.inputs[i], centroids[train.labels[i]]);
        ++counts[train.labels[i]];
    }
    for (int c = 0; c < train.classes; ++c)
        for (auto& v : centroids[c]) v /= counts[c];
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        int best = 0;
        double best_d = 1e300;
        for (int c = 0; c < test.classes; ++c) {
            double dsq = l2_norm_sq(test.inputs[i] - centroids[c]);
            if (dsq < best_d) {
                best_d = dsq;
                best = c;
            }
        }
        correct += best == test.labels[i];
    }
    return static_cast<double>(correct) / test.size();
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("zero separation collapses to chance accuracy") {
    BlobSpec spec;
    spec.d = 2;
    spec.classes = 2;
    spec.n_per_class = 2000;
    spec.separation = 0.0;
    Dataset train = data::gen_gaussian_blobs(spec, "train", 5);
    Dataset test = data::gen_gaussian_blobs(spec, "test", 5);
    CHECK(nearest_centroid_accuracy(train, test) == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("well-separated blobs are linearly separable") {
    BlobSpec spec;
    spec.d = 2;
    spec.classes = 2;
    spec.n_per_class = 1000;
    spec.separation = 10.0;
    Dataset train = data::gen_gaussian_blobs(spec, "train", 5);
    Dataset test = data::gen_gaussian_blobs(spec, "test", 5);
    CHECK(nearest_centroid_accuracy(train, test) >= 0.99);
    for (const auto& x : test.inputs)
        for (double v : x) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
}

TEST_CASE("generators are pure functions of their arguments") {
    BlobSpec spec;
    spec.n_per_class = 50;
    Dataset a = data::gen_gaussian_blobs(spec, "train", 42);
    Dataset b = data::gen_gaussian_blobs(spec, "train", 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.labels[i] == b.labels[i]);
        for (int j = 0; j < a.d; ++j) CHECK(a.inputs[i][j] == b.inputs[i][j]);
    }
    Dataset c = data::gen_gaussian_blobs(spec, "test", 42);
    bool identical = true;
    for (std::size_t i = 0; i < a.size() && identical; ++i)
        identical = a.inputs[i] == c.inputs[i];
    CHECK_FALSE(identical);  // train/test streams are disjoint
}

TEST_CASE("subspace toy data lives on the first coordinate") {
    toy::ToySpec spec;
    spec.d = 6;
    spec.mu1 = 1.5;
    Dataset ds = data::gen_subspace_toy(spec, 20000, "train", 9);
    double mean = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (int j = 1; j < spec.d; ++j) CHECK(ds.inputs[i][j] == 0.0);
        CHECK(ds.targets[i] == ds.inputs[i][0] * spec.wstar1);
        mean += ds.inputs[i][0];
    }
    mean /= ds.size();
    // CLT: 3 standard errors of the mean at unit variance
    CHECK(std::abs(mean - spec.mu1) <= 3.0 / std::sqrt(20000.0));
}

TEST_CASE("csv round trip is the identity") {
    BlobSpec spec;
    spec.d = 3;
    spec.classes = 2;
    spec.n_per_class = 25;
    Dataset ds = data::gen_gaussian_blobs(spec, "train", 7);
    auto path = temp_file("soar_roundtrip.csv");
    data::save_csv(ds, path.string());
    Dataset back = data::load_csv(path.string(), 3, 2);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.labels[i] == ds.labels[i]);
        for (int j = 0; j < 3; ++j) CHECK(back.inputs[i][j] == ds.inputs[i][j]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("csv parser rejects malformed input with line numbers") {
    auto path = temp_file("soar_bad.csv");
    {
        std::ofstream out(path);
        out << "f0,f1,label\n0.5,0.25,1\n";
    }
    CHECK_THROWS_WITH_AS(data::load_csv(path.string(), 2, 2),
                         doctest::Contains(":1:"), std::runtime_error);
    {
        std::ofstream out(path);
        out << "0.5,0.25,1\n0.5,0.25,7\n";
    }
    CHECK_THROWS_WITH_AS(data::load_csv(path.string(), 2, 2),
                         doctest::Contains(":2:"), std::runtime_error);
    {
        std::ofstream out(path);
        out << "0.5,0.25\n";
    }
    CHECK_THROWS_AS(data::load_csv(path.string(), 2, 2), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("a hand-written csv parses to the expected rows") {
    auto path = temp_file("soar_hand.csv");
    {
        std::ofstream out(path);
        out << "0.25,-1.5,0\n1e-3,2.5,1\n-0.75,0.125,0\n";
    }
    Dataset ds = data::load_csv(path.string(), 2, 2);
    REQUIRE(ds.size() == 3);
    CHECK(ds.inputs[0][0] == 0.25);
    CHECK(ds.inputs[0][1] == -1.5);
    CHECK(ds.inputs[1][0] == 1e-3);
    CHECK(ds.labels[1] == 1);
    CHECK(ds.inputs[2][1] == 0.125);
    CHECK(ds.provenance.find("hash=") != std::string::npos);
    std::filesystem::remove(path);
}
