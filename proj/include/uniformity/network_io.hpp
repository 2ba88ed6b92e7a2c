#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "ingest.hpp"
#include "network.hpp"

namespace uniformity {

// Parameter bundle: config.json plus one CSV per weight matrix (W1_<l>.csv,
// W2_<l>.csv, W_out.csv), one row per matrix row, hex-float entries.

inline nlohmann::json to_json(const NetConfig& cfg) {
    return {{"d", cfg.d}, {"hidden", cfg.hidden}, {"eps", cfg.eps}, {"out_dim", cfg.out_dim},
            {"block_scale", cfg.block_scale}};
}

inline NetConfig net_config_from_json(const nlohmann::json& j) {
    NetConfig cfg;
    try {
        cfg.d = j.at("d").get<std::size_t>();
        cfg.hidden = j.at("hidden").get<std::vector<std::size_t>>();
        cfg.eps = j.at("eps").get<double>();
        cfg.out_dim = j.at("out_dim").get<std::size_t>();
        cfg.block_scale = j.at("block_scale").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

namespace detail {

inline void write_matrix_csv(const std::filesystem::path& path, const WeightView& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t c = 0; c < w.cols; ++c) out << (c ? "," : "") << hex_float(w(r, c));
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void read_matrix_csv(const std::filesystem::path& path, std::size_t rows, std::size_t cols, double* dst) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line, field;
    std::size_t r = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (r == rows) throw ValidationError(path.string() + ": more than " + std::to_string(rows) + " rows");
        std::stringstream ss(line);
        std::size_t c = 0;
        while (std::getline(ss, field, ',')) {
            if (c == cols) throw ValidationError(path.string() + ": row " + std::to_string(r + 1) + " is too long");
            dst[r * cols + c++] = parse_real(field, r + 1);
        }
        if (c != cols) throw ValidationError(path.string() + ": row " + std::to_string(r + 1) + " is too short");
        ++r;
    }
    if (r != rows) throw ValidationError(path.string() + ": expected " + std::to_string(rows) + " rows");
}

}  // namespace detail

inline void write_params(const std::filesystem::path& dir, const ResidualNetParams& p, const NetConfig& cfg) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "config.json", std::ios::binary);
        if (!out) throw IoError("cannot write '" + (dir / "config.json").string() + "'");
        out << to_json(cfg).dump(2) << '\n';
    }
    for (std::size_t l = 0; l < cfg.blocks(); ++l) {
        detail::write_matrix_csv(dir / ("W1_" + std::to_string(l) + ".csv"), w1(p, cfg, l));
        detail::write_matrix_csv(dir / ("W2_" + std::to_string(l) + ".csv"), w2(p, cfg, l));
    }
    detail::write_matrix_csv(dir / "W_out.csv", w_out(p, cfg));
}

struct ParamBundle {
    NetConfig cfg;
    ResidualNetParams params;
};

inline ParamBundle read_params(const std::filesystem::path& dir) {
    std::ifstream in(dir / "config.json");
    if (!in) throw IoError("cannot open '" + (dir / "config.json").string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network config: ") + e.what());
    }
    ParamBundle b{net_config_from_json(j), {}};
    const NetConfig& cfg = b.cfg;
    b.params.theta.assign(cfg.parameter_count(), 0.0);
    for (std::size_t l = 0; l < cfg.blocks(); ++l) {
        detail::read_matrix_csv(dir / ("W1_" + std::to_string(l) + ".csv"), cfg.hidden[l], cfg.d,
                                b.params.theta.data() + cfg.w1_offset(l));
        detail::read_matrix_csv(dir / ("W2_" + std::to_string(l) + ".csv"), cfg.d, cfg.hidden[l],
                                b.params.theta.data() + cfg.w2_offset(l));
    }
    detail::read_matrix_csv(dir / "W_out.csv", cfg.out_dim, cfg.d, b.params.theta.data() + cfg.out_offset());
    return b;
}

}  // namespace uniformity
