#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "vad/binary_io.hpp"
#include "vad/error.hpp"
#include "vad/pipeline.hpp"

namespace vad {

std::string to_string(ConditionSource source) {
    switch (source) {
        case ConditionSource::None:
            return "none";
        case ConditionSource::Star:
            return "star";
        case ConditionSource::Dynamic:
            return "dynamic";
        case ConditionSource::External:
            return "external";
    }
    return "none";
}

ConditionSource parse_condition_source(const std::string& name) {
    if (name == "none") return ConditionSource::None;
    if (name == "star") return ConditionSource::Star;
    if (name == "dynamic") return ConditionSource::Dynamic;
    if (name == "external") return ConditionSource::External;
    throw ConfigError("condition.source must be none|star|dynamic|external, got '" + name + "'");
}

std::size_t RunConfig::start_index() const {
    if (start_t) return *start_t;
    return conditioned() ? 1 : 4;
}

SigmaSchedule RunConfig::schedule() const {
    try {
        return karras_schedule(sigma_min, sigma_max, steps, rho);
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
}

SamplerConfig RunConfig::sampler() const {
    SamplerConfig s;
    s.lms_order = lms_order;
    s.start_index = start_index();
    return s;
}

void RunConfig::validate() const {
    noise.validate();
    sampler().validate(schedule());
    if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
    if (eval_batch == 0) throw ConfigError("score.eval_batch must be >= 1");
    if (embed_dim == 0 || embed_dim % 2 != 0) throw ConfigError("model.embed_dim must be a positive even number");
    if (encoder_widths.empty() || decoder_widths.empty()) throw ConfigError("model widths must be non-empty");
    if (role_swap && !conditioned()) throw ConfigError("model.role_swap requires a condition source");
    if (!(optimizer.inv_gamma > 0)) throw ConfigError("train.inv_gamma must be > 0");
    if (!(optimizer.learning_rate > 0)) throw ConfigError("train.lr must be > 0");
    if (!(optimizer.ema_decay >= 0 && optimizer.ema_decay < 1)) throw ConfigError("train.ema_decay must lie in [0, 1)");
    if (!(optimizer.ema_warmup >= 0)) throw ConfigError("train.ema_warmup must be >= 0");
    if (!(threshold_k >= 0) || !std::isfinite(threshold_k)) throw ConfigError("score.k must be finite and >= 0");
}

// ---- key/value form ----------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    // Shortest round-trip spelling, so "0.10" and "1e-1" normalize alike.
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::logic_error&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = trim(item);
        if (!t.empty()) out.push_back(parse_uint(key, t));
    }
    if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
    return out;
}

std::string join_widths(const std::vector<std::size_t>& w) {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) out += (i ? "," : "") + std::to_string(w[i]);
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto dbl = [](double RunConfig::*field) {
            return [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = parse_double(k, v); };
        };
        auto size = [](std::size_t RunConfig::*field) {
            return [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = parse_uint(k, v); };
        };
        auto opt = [](double OptimizerConfig::*field) {
            return [field](RunConfig& c, const std::string& k, const std::string& v) {
                c.optimizer.*field = parse_double(k, v);
            };
        };
        t["data.train_manifest"] = [](RunConfig& c, const std::string&, const std::string& v) { c.train_manifest = v; };
        t["data.test_manifest"] = [](RunConfig& c, const std::string&, const std::string& v) { c.test_manifest = v; };
        t["condition.source"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.condition_source = parse_condition_source(v);
        };
        t["model.role_swap"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.role_swap = parse_bool(k, v);
        };
        t["model.embed_dim"] = size(&RunConfig::embed_dim);
        t["model.embed_std"] = dbl(&RunConfig::embed_std);
        t["model.encoder_widths"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.encoder_widths = parse_widths(k, v);
        };
        t["model.decoder_widths"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.decoder_widths = parse_widths(k, v);
        };
        t["noise.p_mean"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.noise.p_mean = parse_double(k, v);
        };
        t["noise.p_std"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.noise.p_std = parse_double(k, v);
        };
        t["noise.sigma_data"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.noise.sigma_data = parse_double(k, v);
        };
        t["schedule.sigma_min"] = dbl(&RunConfig::sigma_min);
        t["schedule.sigma_max"] = dbl(&RunConfig::sigma_max);
        t["schedule.rho"] = dbl(&RunConfig::rho);
        t["schedule.steps"] = size(&RunConfig::steps);
        t["sampler.lms_order"] = size(&RunConfig::lms_order);
        t["sampler.start_t"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "auto") {
                c.start_t.reset();
            } else {
                c.start_t = parse_uint(k, v);
            }
        };
        t["train.epochs"] = size(&RunConfig::epochs);
        t["train.batch_size"] = size(&RunConfig::batch_size);
        t["train.lr"] = opt(&OptimizerConfig::learning_rate);
        t["train.weight_decay"] = opt(&OptimizerConfig::weight_decay);
        t["train.ema_decay"] = opt(&OptimizerConfig::ema_decay);
        t["train.ema_warmup"] = opt(&OptimizerConfig::ema_warmup);
        t["train.inv_gamma"] = opt(&OptimizerConfig::inv_gamma);
        t["train.lr_power"] = opt(&OptimizerConfig::power);
        t["train.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_uint(k, v); };
        t["score.k"] = dbl(&RunConfig::threshold_k);
        t["score.eval_batch"] = size(&RunConfig::eval_batch);
        t["score.shuffle"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.shuffle_eval = parse_bool(k, v);
        };
        t["score.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.score_seed = parse_uint(k, v);
        };
        t["score.use_ema"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.use_ema = parse_bool(k, v);
        };
        t["eval.normalize_per_batch"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.normalize_per_batch = parse_bool(k, v);
        };
        t["cache.dir"] = [](RunConfig& c, const std::string&, const std::string& v) { c.cache_dir = v; };
        return t;
    }();
    return table;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fingerprint_of(const KeyValues& kv) {
    std::string canonical;
    for (const auto& [k, v] : kv) canonical += k + "=" + v + "\n";
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
    return buf;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

void apply_key_values(RunConfig& cfg, const KeyValues& kv) {
    const auto& table = setters();
    for (const auto& [k, v] : kv) {
        const auto it = table.find(k);
        if (it == table.end()) throw ConfigError("unknown config key '" + k + "'");
        it->second(cfg, k, v);
    }
}

KeyValues to_key_values(const RunConfig& c) {
    KeyValues kv;
    kv["data.train_manifest"] = c.train_manifest;
    kv["data.test_manifest"] = c.test_manifest;
    kv["condition.source"] = to_string(c.condition_source);
    kv["model.role_swap"] = c.role_swap ? "true" : "false";
    kv["model.embed_dim"] = std::to_string(c.embed_dim);
    kv["model.embed_std"] = format_double(c.embed_std);
    kv["model.encoder_widths"] = join_widths(c.encoder_widths);
    kv["model.decoder_widths"] = join_widths(c.decoder_widths);
    kv["noise.p_mean"] = format_double(c.noise.p_mean);
    kv["noise.p_std"] = format_double(c.noise.p_std);
    kv["noise.sigma_data"] = format_double(c.noise.sigma_data);
    kv["schedule.sigma_min"] = format_double(c.sigma_min);
    kv["schedule.sigma_max"] = format_double(c.sigma_max);
    kv["schedule.rho"] = format_double(c.rho);
    kv["schedule.steps"] = std::to_string(c.steps);
    kv["sampler.lms_order"] = std::to_string(c.lms_order);
    kv["sampler.start_t"] = c.start_t ? std::to_string(*c.start_t) : "auto";
    kv["train.epochs"] = std::to_string(c.epochs);
    kv["train.batch_size"] = std::to_string(c.batch_size);
    kv["train.lr"] = format_double(c.optimizer.learning_rate);
    kv["train.weight_decay"] = format_double(c.optimizer.weight_decay);
    kv["train.ema_decay"] = format_double(c.optimizer.ema_decay);
    kv["train.ema_warmup"] = format_double(c.optimizer.ema_warmup);
    kv["train.inv_gamma"] = format_double(c.optimizer.inv_gamma);
    kv["train.lr_power"] = format_double(c.optimizer.power);
    kv["train.seed"] = std::to_string(c.seed);
    kv["score.k"] = format_double(c.threshold_k);
    kv["score.eval_batch"] = std::to_string(c.eval_batch);
    kv["score.shuffle"] = c.shuffle_eval ? "true" : "false";
    kv["score.seed"] = std::to_string(c.score_seed);
    kv["score.use_ema"] = c.use_ema ? "true" : "false";
    kv["eval.normalize_per_batch"] = c.normalize_per_batch ? "true" : "false";
    kv["cache.dir"] = c.cache_dir;
    return kv;
}

std::string to_config_text(const RunConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : to_key_values(cfg)) out += k + " = " + v + "\n";
    return out;
}

RunConfig load_config(const std::filesystem::path& path, const KeyValues& overrides) {
    RunConfig cfg;
    if (!path.empty()) {
        std::string text;
        try {
            text = io::read_text(path);
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
        apply_key_values(cfg, parse_key_values(text));
    }
    apply_key_values(cfg, overrides);
    cfg.validate();
    return cfg;
}

std::string config_fingerprint(const RunConfig& cfg) {
    auto kv = to_key_values(cfg);
    kv.erase("cache.dir");  // where results are cached does not change them
    return fingerprint_of(kv);
}

std::string training_fingerprint(const RunConfig& cfg) {
    static const char* kTrainingKeys[] = {
        "data.train_manifest", "condition.source",   "model.role_swap", "model.embed_dim",    "model.embed_std",
        "model.encoder_widths", "model.decoder_widths", "noise.p_mean",   "noise.p_std",        "noise.sigma_data",
        "train.epochs",        "train.batch_size",   "train.lr",        "train.weight_decay", "train.ema_decay", "train.ema_warmup",
        "train.inv_gamma",     "train.lr_power",     "train.seed",
    };
    const auto all = to_key_values(cfg);
    KeyValues subset;
    for (const char* k : kTrainingKeys) subset[k] = all.at(k);
    // The manifest is identified by its absolute path.
    if (!cfg.train_manifest.empty()) {
        subset["data.train_manifest"] = std::filesystem::absolute(cfg.train_manifest).lexically_normal().string();
    }
    return fingerprint_of(subset);
}

}  // namespace vad
