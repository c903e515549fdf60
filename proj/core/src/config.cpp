#include "airx/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "airx/errors.hpp"

namespace airx {

namespace {

using nlohmann::json;

std::string join(const std::string& a, const std::string& b) {
    return a.empty() ? b : a + "." + b;
}

/// Tracks which keys of a JSON object have been consumed so finish() can
/// reject everything unknown with its full key path.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(where() + ": expected an object");
    }

    const json* find(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string child(const char* key) const { return join(path_, key); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (seen_.find(it.key()) == seen_.end())
                throw ConfigError(join(path_, it.key()) + ": unknown key");
    }

private:
    std::string where() const { return path_.empty() ? std::string("top level") : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

long as_long(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw ConfigError(path + ": expected an integer");
    return j.get<long>();
}

int as_int(const json& j, const std::string& path) {
    return static_cast<int>(as_long(j, path));
}

std::uint64_t as_u64(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0)
        return static_cast<std::uint64_t>(j.get<long long>());
    throw ConfigError(path + ": expected a non-negative integer");
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
}

void opt_double(ObjectReader& r, const char* key, double& out) {
    if (const json* v = r.find(key)) out = as_double(*v, r.child(key));
}

void opt_int(ObjectReader& r, const char* key, int& out) {
    if (const json* v = r.find(key)) out = as_int(*v, r.child(key));
}

void opt_long(ObjectReader& r, const char* key, long& out) {
    if (const json* v = r.find(key)) out = as_long(*v, r.child(key));
}

void opt_u64(ObjectReader& r, const char* key, std::uint64_t& out) {
    if (const json* v = r.find(key)) out = as_u64(*v, r.child(key));
}

void opt_bool(ObjectReader& r, const char* key, bool& out) {
    if (const json* v = r.find(key)) out = as_bool(*v, r.child(key));
}

void opt_string(ObjectReader& r, const char* key, std::string& out) {
    if (const json* v = r.find(key)) out = as_string(*v, r.child(key));
}

std::array<int, 3> as_delay_triple(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(path + ": expected an array of 3 delays");
    std::array<int, 3> d{};
    for (std::size_t i = 0; i < 3; ++i)
        d[i] = as_int(j[i], path + "[" + std::to_string(i) + "]");
    if (d[0] != 0 || d[1] <= d[0] || d[2] <= d[1])
        throw ConfigError(path + ": delays must start at 0 and increase");
    return d;
}

OfdmConfig parse_ofdm(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    OfdmConfig cfg;
    opt_int(r, "fft_size", cfg.fft_size);
    opt_int(r, "active_count", cfg.active_count);
    opt_int(r, "cp_len", cfg.cp_len);
    opt_int(r, "mod_order", cfg.mod_order);
    opt_u64(r, "pilot_seed", cfg.pilot_seed);
    r.finish();
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return cfg;
}

ChannelEnsemble parse_channel(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    std::string kind = "exp";
    opt_string(r, "kind", kind);
    ChannelEnsemble ens;
    if (kind == "exp") {
        ens = ChannelEnsemble::exp_default();
        opt_double(r, "tau_rms_min", ens.tau_rms_min);
        opt_double(r, "tau_rms_max", ens.tau_rms_max);
        if (!(ens.tau_rms_min > 0.0) || ens.tau_rms_max < ens.tau_rms_min)
            throw ConfigError(path + ": tau_rms range must satisfy 0 < min <= max");
    } else if (kind == "sui5") {
        ens = ChannelEnsemble::sui5_default();
        opt_int(r, "n_max_min", ens.n_max_min);
        opt_int(r, "n_max_max", ens.n_max_max);
        if (const json* v = r.find("delays"))
            ens.sui5_delays = as_delay_triple(*v, r.child("delays"));
        if (ens.n_max_min < 1 || ens.n_max_max < ens.n_max_min)
            throw ConfigError(path + ": n_max range must satisfy 1 <= min <= max");
    } else if (kind == "two_ray") {
        ens = ChannelEnsemble::two_ray(1.0);
        opt_double(r, "power_ratio", ens.power_ratio);
        if (!(ens.power_ratio >= 0.0))
            throw ConfigError(path + ": power_ratio must be >= 0");
    } else {
        throw ConfigError(r.child("kind") + ": unknown channel kind: " + kind);
    }
    r.finish();
    return ens;
}

TrainingConfig parse_training(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    TrainingConfig tc;
    opt_double(r, "snr_db", tc.snr_db);
    opt_int(r, "epochs", tc.epochs);
    opt_double(r, "lr", tc.lr);
    opt_int(r, "frames_per_epoch", tc.frames_per_epoch);
    opt_int(r, "batch_frames", tc.batch_frames);
    opt_u64(r, "seed", tc.seed);
    opt_double(r, "lr_decay", tc.lr_decay);
    r.finish();
    if (tc.epochs < 1) throw ConfigError(path + ".epochs: must be >= 1");
    if (tc.frames_per_epoch < 1) throw ConfigError(path + ".frames_per_epoch: must be >= 1");
    if (tc.batch_frames < 1 || tc.batch_frames > tc.frames_per_epoch)
        throw ConfigError(path + ".batch_frames: must be in [1, frames_per_epoch]");
    if (!(tc.lr > 0.0)) throw ConfigError(path + ".lr: must be positive");
    if (!(tc.lr_decay > 0.0) || tc.lr_decay > 1.0)
        throw ConfigError(path + ".lr_decay: must be in (0, 1]");
    return tc;
}

OnlineConfig parse_online(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    OnlineConfig oc;
    opt_int(r, "symbols_per_epoch", oc.symbols_per_epoch);
    opt_int(r, "batch_symbols", oc.batch_symbols);
    opt_int(r, "epochs_per_group", oc.epochs_per_group);
    opt_double(r, "alpha_lr", oc.alpha_lr);
    opt_double(r, "transfer_lr", oc.transfer_lr);
    opt_int(r, "collected_symbols", oc.collected_symbols);
    opt_double(r, "snr_db", oc.snr_db);
    r.finish();
    if (oc.symbols_per_epoch < 1) throw ConfigError(path + ".symbols_per_epoch: must be >= 1");
    if (oc.batch_symbols < 1 || oc.batch_symbols > oc.symbols_per_epoch)
        throw ConfigError(path + ".batch_symbols: must be in [1, symbols_per_epoch]");
    if (oc.epochs_per_group < 1) throw ConfigError(path + ".epochs_per_group: must be >= 1");
    if (!(oc.alpha_lr > 0.0) || !(oc.transfer_lr > 0.0))
        throw ConfigError(path + ": learning rates must be positive");
    if (oc.collected_symbols < 1) throw ConfigError(path + ".collected_symbols: must be >= 1");
    return oc;
}

SweepConfig parse_sweep(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    SweepConfig sweep;
    if (const json* v = r.find("snr_db")) {
        if (!v->is_array() || v->empty())
            throw ConfigError(r.child("snr_db") + ": expected a non-empty array of numbers");
        sweep.snr_db.clear();
        for (std::size_t i = 0; i < v->size(); ++i)
            sweep.snr_db.push_back(
                as_double((*v)[i], r.child("snr_db") + "[" + std::to_string(i) + "]"));
    }
    opt_long(r, "min_bits", sweep.min_bits);
    opt_long(r, "max_frames", sweep.max_frames);
    opt_bool(r, "noiseless", sweep.noiseless);
    opt_int(r, "threads", sweep.threads);
    r.finish();
    return sweep;
}

ReceiverKind parse_receiver(const json& j, const std::string& path) {
    const std::string name = as_string(j, path);
    try {
        return receiver_from_name(name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    ObjectReader r(j, "");

    ExperimentConfig cfg;
    opt_u64(r, "seed", cfg.seed);
    opt_string(r, "out_dir", cfg.out_dir);
    if (const json* v = r.find("ofdm")) cfg.ofdm = parse_ofdm(*v, r.child("ofdm"));
    if (const json* v = r.find("channel")) cfg.channel = parse_channel(*v, r.child("channel"));
    if (const json* v = r.find("channel_b"))
        cfg.channel_b = parse_channel(*v, r.child("channel_b"));

    if (const json* v = r.find("lmmse")) {
        ObjectReader lr(*v, r.child("lmmse"));
        opt_double(lr, "tau_rms", cfg.lmmse_spec.tau_rms);
        opt_double(lr, "tau0", cfg.lmmse_spec.tau0);
        opt_double(lr, "design_snr_db", cfg.lmmse_design_snr_db);
        lr.finish();
        if (!(cfg.lmmse_spec.tau_rms > 0.0))
            throw ConfigError(r.child("lmmse") + ".tau_rms: must be positive");
    }

    if (const json* v = r.find("receiver")) cfg.receiver = parse_receiver(*v, r.child("receiver"));
    if (const json* v = r.find("receivers")) {
        if (!v->is_array())
            throw ConfigError(r.child("receivers") + ": expected an array of receiver names");
        cfg.receivers.clear();
        for (std::size_t i = 0; i < v->size(); ++i)
            cfg.receivers.push_back(
                parse_receiver((*v)[i], r.child("receivers") + "[" + std::to_string(i) + "]"));
    }
    if (const json* v = r.find("sd_mode")) {
        const std::string mode = as_string(*v, r.child("sd_mode"));
        if (mode == "relu") cfg.sd_mode = SdMode::relu;
        else if (mode == "linear") cfg.sd_mode = SdMode::linear;
        else throw ConfigError(r.child("sd_mode") + ": expected \"relu\" or \"linear\"");
    }

    if (const json* v = r.find("training")) cfg.training = parse_training(*v, r.child("training"));
    if (const json* v = r.find("online")) cfg.online = parse_online(*v, r.child("online"));
    if (const json* v = r.find("online_mode")) {
        cfg.online_mode = as_string(*v, r.child("online_mode"));
        if (cfg.online_mode != "alpha" && cfg.online_mode != "transfer")
            throw ConfigError(r.child("online_mode") + ": expected \"alpha\" or \"transfer\"");
    }
    if (const json* v = r.find("warmup_groups")) {
        cfg.warmup_groups = as_int(*v, r.child("warmup_groups"));
        if (cfg.warmup_groups < 0)
            throw ConfigError(r.child("warmup_groups") + ": must be >= 0");
    }
    if (const json* v = r.find("switch_profiles")) {
        if (!v->is_array() || v->empty())
            throw ConfigError(r.child("switch_profiles") + ": expected a non-empty array");
        cfg.switch_profiles.clear();
        for (std::size_t i = 0; i < v->size(); ++i)
            cfg.switch_profiles.push_back(as_delay_triple(
                (*v)[i], r.child("switch_profiles") + "[" + std::to_string(i) + "]"));
    }

    if (const json* v = r.find("sweep")) cfg.sweep = parse_sweep(*v, r.child("sweep"));

    if (const json* v = r.find("dataset")) {
        ObjectReader dr(*v, r.child("dataset"));
        opt_long(dr, "count", cfg.dataset_count);
        opt_double(dr, "snr_db", cfg.dataset_snr_db);
        opt_string(dr, "path", cfg.dataset_path);
        dr.finish();
        if (cfg.dataset_count < 1)
            throw ConfigError(r.child("dataset") + ".count: must be >= 1");
    }

    if (const json* v = r.find("checkpoints")) {
        if (!v->is_object())
            throw ConfigError(r.child("checkpoints") + ": expected an object");
        for (auto it = v->begin(); it != v->end(); ++it) {
            const std::string path = r.child("checkpoints") + "." + it.key();
            try {
                receiver_from_name(it.key());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(path + ": " + e.what());
            }
            cfg.checkpoints[it.key()] = as_string(it.value(), path);
        }
    }

    r.finish();
    cfg.config_hash = fnv1a_hex(j.dump());
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace airx
