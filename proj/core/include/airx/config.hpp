#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "airx/experiment.hpp"

namespace airx {

/// Everything a run can be configured with, parsed from a JSON file.
/// Unknown keys anywhere in the tree are rejected.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    OfdmConfig ofdm;
    ChannelEnsemble channel = ChannelEnsemble::exp_default();
    std::optional<ChannelEnsemble> channel_b; // second channel (mismatch/switch/online)

    TheoreticalChannelSpec lmmse_spec;
    double lmmse_design_snr_db = 25.0;

    ReceiverKind receiver = ReceiverKind::comnet;
    std::vector<ReceiverKind> receivers; // eval may sweep several at once
    SdMode sd_mode = SdMode::relu;

    TrainingConfig training;
    OnlineConfig online;
    std::string online_mode = "alpha"; // "alpha" or "transfer"
    int warmup_groups = 20;
    std::vector<std::array<int, 3>> switch_profiles = {{0, 4, 10}, {0, 4, 8}, {0, 5, 12}};

    SweepConfig sweep;

    // dataset generation
    long dataset_count = 1000;
    double dataset_snr_db = 25.0;
    std::string dataset_path = "dataset.airx";

    std::map<std::string, std::string> checkpoints; // receiver name -> path

    std::string config_hash; // FNV-1a of the canonical JSON text
};

/// Parse and validate a JSON config file. Throws ConfigError with the
/// offending key path on any unknown or ill-typed entry.
ExperimentConfig load_config(const std::string& path);

/// Parse from an in-memory JSON string (same validation).
ExperimentConfig parse_config(const std::string& json_text);

/// FNV-1a 64-bit hash, hex encoded.
std::string fnv1a_hex(const std::string& text);

} // namespace airx
