#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "soar/models.hpp"
#include "soar/training.hpp"

namespace soar {
namespace io {

using nlohmann::json;

inline constexpr const char* kVersionTag = "soarlab 0.1.0";

inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Write-then-rename so partially written artifacts never appear under the
// final name.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json param_set_to_json(const ParamSet& p) {
    json blocks = json::array();
    for (const auto& b : p.blocks)
        blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"data", b.data}});
    return blocks;
}

inline ParamSet param_set_from_json(const json& j) {
    ParamSet p;
    for (const auto& jb : j) {
        ParamBlock b(jb.at("name").get<std::string>(), jb.at("rows").get<int>(),
                     jb.at("cols").get<int>());
        b.data = jb.at("data").get<Vec>();
        if (b.data.size() != static_cast<std::size_t>(b.rows) * b.cols)
            throw std::runtime_error("checkpoint block " + b.name + " has inconsistent size");
        p.blocks.push_back(std::move(b));
    }
    return p;
}

inline std::unique_ptr<DiffFunction> model_from_descriptor(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        return std::make_unique<models::LinearRegressor>(j.at("wstar").get<Vec>());
    }
    if (kind == "logistic") {
        return std::make_unique<models::LogisticClassifier>(j.at("d").get<int>());
    }
    if (kind == "mlp") {
        return std::make_unique<models::MlpClassifier>(j.at("d").get<int>(),
                                                       j.at("hidden").get<std::vector<int>>(),
                                                       j.at("classes").get<int>());
    }
    throw std::runtime_error("unknown model kind: " + kind);
}

struct Checkpoint {
    json descriptor;
    ParamSet params;
};

inline void save_checkpoint(const std::filesystem::path& path, const json& descriptor,
                            const ParamSet& params) {
    json j;
    j["format"] = "soarlab-checkpoint-v1";
    j["model"] = descriptor;
    j["params"] = param_set_to_json(params);
    atomic_write(path, j.dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    json j = json::parse(read_file(path));
    if (j.value("format", "") != "soarlab-checkpoint-v1")
        throw std::runtime_error("not a soarlab checkpoint: " + path.string());
    Checkpoint c;
    c.descriptor = j.at("model");
    c.params = param_set_from_json(j.at("params"));
    return c;
}

inline json epoch_metrics_to_json(const train::EpochMetrics& m) {
    return {{"epoch", m.epoch},         {"train_loss", m.train_loss},
            {"reg_mean", m.reg_mean},   {"clean_acc", m.clean_acc},
            {"probe_pgd_acc", m.probe_pgd_acc}, {"lr", m.lr}};
}

inline train::EpochMetrics epoch_metrics_from_json(const json& j) {
    train::EpochMetrics m;
    m.epoch = j.at("epoch").get<int>();
    m.train_loss = j.at("train_loss").get<double>();
    m.reg_mean = j.at("reg_mean").get<double>();
    m.clean_acc = j.at("clean_acc").get<double>();
    m.probe_pgd_acc = j.at("probe_pgd_acc").get<double>();
    m.lr = j.at("lr").get<double>();
    return m;
}

// Full run record: config echo + per-epoch metrics + checkpoint reference.
inline json run_record_to_json(const train::RunRecord& r, const json& config_echo,
                               const std::string& checkpoint_ref) {
    json epochs = json::array();
    for (const auto& m : r.epochs) epochs.push_back(epoch_metrics_to_json(m));
    return {{"version", kVersionTag},
            {"config", config_echo},
            {"epochs", epochs},
            {"best_epoch", r.best_epoch},
            {"aborted", r.aborted},
            {"abort_reason", r.abort_reason},
            {"checkpoint", checkpoint_ref},
            {"wall_clock_sec", r.wall_clock_sec}};
}

inline train::RunRecord run_record_from_json(const json& j) {
    train::RunRecord r;
    for (const auto& je : j.at("epochs")) r.epochs.push_back(epoch_metrics_from_json(je));
    r.best_epoch = j.at("best_epoch").get<int>();
    r.aborted = j.at("aborted").get<bool>();
    r.abort_reason = j.at("abort_reason").get<std::string>();
    r.wall_clock_sec = j.at("wall_clock_sec").get<double>();
    return r;
}

// Per-epoch metrics as CSV; excludes wall-clock so reruns with the same
// config and seed are byte-identical.
inline std::string metrics_csv(const train::RunRecord& r) {
    std::string out = "epoch,train_loss,reg_mean,clean_acc,probe_pgd_acc,lr\n";
    for (const auto& m : r.epochs) {
        out += std::to_string(m.epoch) + ',' + fmt_double(m.train_loss) + ',' +
               fmt_double(m.reg_mean) + ',' + fmt_double(m.clean_acc) + ',' +
               fmt_double(m.probe_pgd_acc) + ',' + fmt_double(m.lr) + '\n';
    }
    return out;
}

inline void write_manifest(const std::filesystem::path& dir,
                           const std::vector<std::string>& files) {
    std::string content;
    for (const auto& f : files) content += f + '\n';
    atomic_write(dir / "manifest.txt", content);
}

} // namespace io
} // namespace soar
