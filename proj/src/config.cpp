#include "hyperlat/config.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace hyperlat {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

double need_number(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) fail(path + "." + key, "missing");
    if (!j[key].is_number()) fail(path + "." + key, "expected a number");
    return j[key].get<double>();
}

std::int64_t need_integer(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) fail(path + "." + key, "missing");
    if (!j[key].is_number_integer()) fail(path + "." + key, "expected an integer");
    return j[key].get<std::int64_t>();
}

Lattice parse_lattice(const json& j, const std::string& path) {
    if (j.is_string()) {
        try {
            return make_lattice(j.get<std::string>());
        } catch (const std::exception& e) {
            fail(path, e.what());
        }
    }
    if (!j.is_object()) fail(path, "expected a lattice name or {dim, basis}");
    reject_unknown_keys(j, {"dim", "basis"}, path);
    const int dim = static_cast<int>(need_integer(j, "dim", path));
    if (!j.contains("basis")) fail(path + ".basis", "missing");
    const json& b = j["basis"];
    if (!b.is_array() || static_cast<int>(b.size()) != dim)
        fail(path + ".basis", "expected " + std::to_string(dim) + " rows");
    Mat m;
    m.dim = dim;
    for (int r = 0; r < dim; ++r) {
        if (!b[r].is_array() || static_cast<int>(b[r].size()) != dim)
            fail(path + ".basis", "row " + std::to_string(r) + " must have " +
                                       std::to_string(dim) + " entries");
        for (int c = 0; c < dim; ++c) {
            if (!b[r][c].is_number()) fail(path + ".basis", "entries must be numbers");
            m.at(r, c) = b[r][c].get<double>();
        }
    }
    try {
        return make_lattice(dim, m);
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
}

BlockLaw parse_block_law(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected a block-law object");
    if (!j.contains("type") || !j["type"].is_string()) fail(path + ".type", "missing");
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "fixed") {
            reject_unknown_keys(j, {"type", "n"}, path);
            const std::int64_t n = need_integer(j, "n", path);
            if (n < 10) fail(path + ".n", "block side must satisfy N >= 10");
            return BlockLaw::fixed(n);
        }
        if (type == "pareto_ceil") {
            reject_unknown_keys(j, {"type", "tail_index", "scale"}, path);
            return BlockLaw::pareto_ceil(need_number(j, "tail_index", path),
                                         need_number(j, "scale", path));
        }
        if (type == "power") {
            reject_unknown_keys(j, {"type", "exponent", "min", "max"}, path);
            const std::int64_t lo = need_integer(j, "min", path);
            const std::int64_t hi = need_integer(j, "max", path);
            if (lo < 10) fail(path + ".min", "block side must satisfy N >= 10");
            return BlockLaw::power_range(need_number(j, "exponent", path), lo, hi);
        }
        if (type == "table") {
            reject_unknown_keys(j, {"type", "n", "w"}, path);
            if (!j.contains("n") || !j["n"].is_array()) fail(path + ".n", "expected array");
            if (!j.contains("w") || !j["w"].is_array()) fail(path + ".w", "expected array");
            std::vector<std::int64_t> ns = j["n"].get<std::vector<std::int64_t>>();
            std::vector<double> ws = j["w"].get<std::vector<double>>();
            for (std::int64_t n : ns)
                if (n < 10) fail(path + ".n", "block side must satisfy N >= 10");
            return BlockLaw::table(std::move(ns), std::move(ws));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    fail(path + ".type", "unknown block-law type '" + type + "'");
}

IidDistribution parse_distribution(const json& j, int dim, const std::string& path) {
    if (!j.is_object()) fail(path, "expected a distribution object");
    if (!j.contains("type") || !j["type"].is_string()) fail(path + ".type", "missing");
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "gaussian") {
            reject_unknown_keys(j, {"type", "sd"}, path);
            return IidDistribution::gaussian(dim, need_number(j, "sd", path));
        }
        if (type == "uniform") {
            reject_unknown_keys(j, {"type", "half_width"}, path);
            return IidDistribution::uniform(dim, need_number(j, "half_width", path));
        }
        if (type == "pareto") {
            reject_unknown_keys(j, {"type", "tail_index", "scale"}, path);
            return IidDistribution::pareto(dim, need_number(j, "tail_index", path),
                                           need_number(j, "scale", path));
        }
        if (type == "point_mass") {
            // The optional value is accepted but centered away (displacement
            // laws are centered at spec-compile time).
            reject_unknown_keys(j, {"type", "value"}, path);
            return IidDistribution::point_mass(dim);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    fail(path + ".type", "unknown distribution type '" + type + "'");
}

FieldSpec parse_field(const json& j, int dim, const std::string& path) {
    if (!j.is_object()) fail(path, "expected a field object");
    if (!j.contains("type") || !j["type"].is_string()) fail(path + ".type", "missing");
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "iid") {
            reject_unknown_keys(j, {"type", "distribution"}, path);
            if (!j.contains("distribution")) fail(path + ".distribution", "missing");
            return FieldSpec::make_iid(parse_distribution(j["distribution"], dim,
                                                          path + ".distribution"));
        }
        if (type == "spectral_gaussian") {
            reject_unknown_keys(j, {"type", "delta", "grid", "amplitude"}, path);
            return FieldSpec::spectral_gaussian(need_number(j, "delta", path),
                                                static_cast<int>(need_integer(j, "grid", path)),
                                                need_number(j, "amplitude", path));
        }
        if (type == "cube_collapse") {
            reject_unknown_keys(j, {"type", "block_law"}, path);
            if (!j.contains("block_law")) fail(path + ".block_law", "missing");
            return FieldSpec::cube_collapse(parse_block_law(j["block_law"], path + ".block_law"));
        }
        if (type == "radial_push") {
            reject_unknown_keys(j, {"type", "epsilon", "block_law"}, path);
            if (!j.contains("block_law")) fail(path + ".block_law", "missing");
            return FieldSpec::radial_push(need_number(j, "epsilon", path),
                                          parse_block_law(j["block_law"], path + ".block_law"));
        }
        if (type == "slow_decay") {
            reject_unknown_keys(j, {"type", "sigma_tilde", "n_max"}, path);
            const std::int64_t n_max = need_integer(j, "n_max", path);
            if (!j.contains("sigma_tilde")) fail(path + ".sigma_tilde", "missing");
            std::vector<double> table;
            if (j["sigma_tilde"].is_string()) {
                const std::string name = j["sigma_tilde"].get<std::string>();
                if (name != "inv_log")
                    fail(path + ".sigma_tilde", "unknown profile '" + name + "'");
                table = sigma_tilde_inv_log(n_max);
            } else if (j["sigma_tilde"].is_array()) {
                table = j["sigma_tilde"].get<std::vector<double>>();
            } else {
                fail(path + ".sigma_tilde", "expected a profile name or value array");
            }
            return FieldSpec::slow_decay_mixture(table, dim, n_max);
        }
        if (type == "poisson") {
            reject_unknown_keys(j, {"type", "intensity"}, path);
            return FieldSpec::poisson(j.contains("intensity") ? need_number(j, "intensity", path)
                                                              : 1.0);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    fail(path + ".type", "unknown field type '" + type + "'");
}

}  // namespace

std::vector<double> sigma_tilde_inv_log(std::int64_t n_max) {
    std::vector<double> t(n_max + 1);
    for (std::int64_t i = 0; i <= n_max; ++i)
        t[i] = 1.0 / std::log(M_E + static_cast<double>(i + 1));
    return t;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown_keys(j, {"lattice", "field", "radii", "replicas", "seed", "batch_count",
                            "window_margin", "threads"},
                        "config");

    ExperimentConfig cfg;
    if (!j.contains("lattice")) fail("config.lattice", "missing");
    cfg.lattice = parse_lattice(j["lattice"], "config.lattice");

    if (!j.contains("field")) fail("config.field", "missing");
    cfg.field = parse_field(j["field"], cfg.lattice.dim, "config.field");

    if (!j.contains("radii") || !j["radii"].is_array()) fail("config.radii", "expected an array");
    cfg.radii = j["radii"].get<std::vector<double>>();

    cfg.replicas = need_integer(j, "replicas", "config");
    cfg.seed = static_cast<std::uint64_t>(need_integer(j, "seed", "config"));
    if (j.contains("batch_count"))
        cfg.batch_count = static_cast<int>(need_integer(j, "batch_count", "config"));
    if (j.contains("threads")) cfg.threads = static_cast<int>(need_integer(j, "threads", "config"));

    if (j.contains("window_margin")) {
        const json& m = j["window_margin"];
        if (!m.is_object()) fail("config.window_margin", "expected an object");
        reject_unknown_keys(m, {"policy", "value"}, "config.window_margin");
        if (!m.contains("policy") || !m["policy"].is_string())
            fail("config.window_margin.policy", "missing");
        const std::string policy = m["policy"].get<std::string>();
        if (policy == "adaptive") {
            cfg.margin.kind = MarginPolicy::Kind::Adaptive;
        } else if (policy == "fixed") {
            cfg.margin.kind = MarginPolicy::Kind::Fixed;
            cfg.margin.fixed_value = need_number(m, "value", "config.window_margin");
        } else {
            fail("config.window_margin.policy", "must be 'adaptive' or 'fixed'");
        }
    }

    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config.") + e.what());
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    nlohmann::json basis = nlohmann::json::array();
    for (int r = 0; r < cfg.lattice.dim; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < cfg.lattice.dim; ++c) row.push_back(cfg.lattice.basis.at(r, c));
        basis.push_back(row);
    }
    j["lattice"] = {{"dim", cfg.lattice.dim}, {"basis", basis}};

    nlohmann::json f;
    switch (cfg.field.kind) {
        case FieldSpec::Kind::Iid: {
            nlohmann::json d;
            switch (cfg.field.iid.kind) {
                case IidDistribution::Kind::PointMass:
                    d = {{"type", "point_mass"}};
                    break;
                case IidDistribution::Kind::Gaussian:
                    d = {{"type", "gaussian"}, {"sd", cfg.field.iid.sd}};
                    break;
                case IidDistribution::Kind::Uniform:
                    d = {{"type", "uniform"}, {"half_width", cfg.field.iid.half_width}};
                    break;
                case IidDistribution::Kind::Pareto:
                    d = {{"type", "pareto"},
                         {"tail_index", cfg.field.iid.tail_index},
                         {"scale", cfg.field.iid.pareto_scale}};
                    break;
            }
            f = {{"type", "iid"}, {"distribution", d}};
            break;
        }
        case FieldSpec::Kind::SpectralGaussian:
            f = {{"type", "spectral_gaussian"},
                 {"delta", cfg.field.delta},
                 {"grid", cfg.field.grid},
                 {"amplitude", cfg.field.amplitude}};
            break;
        case FieldSpec::Kind::CubeCollapse:
        case FieldSpec::Kind::SlowDecayMixture:
        case FieldSpec::Kind::RadialPush: {
            nlohmann::json law;
            switch (cfg.field.block_law.kind) {
                case BlockLaw::Kind::Fixed:
                    law = {{"type", "fixed"}, {"n", cfg.field.block_law.fixed_n}};
                    break;
                case BlockLaw::Kind::ParetoCeil:
                    law = {{"type", "pareto_ceil"},
                           {"tail_index", cfg.field.block_law.tail_index},
                           {"scale", cfg.field.block_law.scale}};
                    break;
                case BlockLaw::Kind::Table:
                    law = {{"type", "table"},
                           {"n", cfg.field.block_law.table_n},
                           {"w", cfg.field.block_law.table_w}};
                    break;
            }
            if (cfg.field.kind == FieldSpec::Kind::RadialPush)
                f = {{"type", "radial_push"}, {"epsilon", cfg.field.epsilon}, {"block_law", law}};
            else if (cfg.field.kind == FieldSpec::Kind::CubeCollapse)
                f = {{"type", "cube_collapse"}, {"block_law", law}};
            else
                f = {{"type", "slow_decay_compiled"},
                     {"block_law", law},
                     {"normalizer", cfg.field.mixture_normalizer},
                     {"truncated_mass", cfg.field.mixture_truncated_mass}};
            break;
        }
        case FieldSpec::Kind::Poisson:
            f = {{"type", "poisson"}, {"intensity", cfg.field.intensity}};
            break;
    }
    j["field"] = f;
    j["radii"] = cfg.radii;
    j["replicas"] = cfg.replicas;
    j["seed"] = cfg.seed;
    j["batch_count"] = cfg.batch_count;
    j["window_margin"] =
        cfg.margin.kind == MarginPolicy::Kind::Adaptive
            ? nlohmann::json{{"policy", "adaptive"}}
            : nlohmann::json{{"policy", "fixed"}, {"value", cfg.margin.fixed_value}};
    return j;
}

std::string config_hash(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_curve_csv(const std::string& path, const VarianceCurve& curve) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "r,mean_count,variance,sigma,stderr,replicas\n";
    for (const RadiusStats& p : curve.points) {
        out << format_double(p.r) << ',' << format_double(p.mean_count) << ','
            << format_double(p.variance) << ',' << format_double(p.sigma) << ','
            << format_double(p.std_error) << ',' << p.replicas << '\n';
    }
}

nlohmann::json make_manifest(const ExperimentConfig& cfg, const VarianceCurve& curve,
                             double wall_seconds) {
    const nlohmann::json echo = config_to_json(cfg);
    nlohmann::json m;
    m["config"] = echo;
    m["config_hash"] = config_hash(echo);
    m["master_seed"] = cfg.seed;
    m["substream_scheme"] = "xoshiro256++(seed, stream, replica_index)";
    m["replicas"] = curve.total_replicas;
    m["flagged_replicas"] = curve.flagged_replicas;
    m["reliable"] = curve.reliable;
    m["margin"] = curve.margin;
    m["window_radius"] = curve.window_radius;
    m["truncation"] = {{"mixture_truncated_mass", cfg.field.mixture_truncated_mass}};
    m["versions"] = {{"hyperlat", "0.1.0"}};
    m["wall_time_seconds"] = wall_seconds;
    return m;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace hyperlat
