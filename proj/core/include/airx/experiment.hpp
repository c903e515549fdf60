#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "airx/trainer.hpp"

namespace airx {

enum class ReceiverKind {
    ls_zf,
    lmmse,
    zf_perfect,
    fcdnn,
    comnet,
    comnet_linear_sd,
    switchnet,
};

std::string receiver_name(ReceiverKind kind);
ReceiverKind receiver_from_name(const std::string& name);

/// BER sweep shape: SNR grid and the stopping rule per point. A point runs
/// ceil(min_bits / bits_per_frame) frames, capped at max_frames.
struct SweepConfig {
    std::vector<double> snr_db = {5, 10, 15, 20, 25, 30, 35, 40};
    long min_bits = 100000;
    long max_frames = 2000000;
    bool noiseless = false;
    int threads = 1;
};

struct BerPoint {
    double snr_db = 0.0;
    long bits = 0;
    long errors = 0;
    double ber = 0.0;
    long frames = 0;
    double seconds = 0.0;
};

struct BerReport {
    std::string receiver;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<BerPoint> points;
};

/// Receiver under sweep: consumes one labeled frame and the operating SNR
/// in dB (infinite when noiseless), returns decided bits.
using ReceiverFn = std::function<std::vector<std::uint8_t>(const LabeledRecord&, double)>;

/// Run a BER sweep. Frames are addressed by (seed, SNR index, frame index),
/// so every receiver swept with the same seed sees identical frames and
/// parallel execution reproduces the serial result bit for bit.
BerReport run_ber_sweep(const OfdmConfig& cfg, const ChannelEnsemble& ensemble,
                        const SweepConfig& sweep, const ReceiverFn& receive,
                        const std::string& receiver_label, std::uint64_t seed,
                        const std::string& config_hash = "");

void write_ber_csv(const std::string& path, const BerReport& report);

/// One "epoch,value" row per entry, with a named value column.
void write_trace_csv(const std::string& path, const std::string& value_name,
                     const std::vector<double>& values, int first_epoch = 1);

/// Parameter count and forward FLOPs for each learned receiver.
struct ComplexityRow {
    std::string receiver;
    long params = 0;
    long flops = 0;
};

std::vector<ComplexityRow> complexity_report();
void write_complexity_csv(const std::string& path, const std::vector<ComplexityRow>& rows);

/// Mismatch experiment: evaluate given receivers on a matched and a
/// mismatched channel over the same sweep, and derive the BER ordering
/// per SNR point.
struct MismatchResult {
    std::map<std::string, BerReport> matched;
    std::map<std::string, BerReport> mismatched;
};

/// Channel-switch experiment outcome for one direction and profile.
struct SwitchRun {
    std::string label;
    int switch_epoch = 0;        // first epoch index after the channel change
    std::vector<double> alpha;   // full trace including warmup epochs
    double settled_alpha = 0.0;  // trailing-window mean
};

/// Drive the online alpha loop across a channel change: warmup_groups
/// groups on `before`, the rest of the stream on `after`. alpha_init should
/// be the settled value for `before`.
SwitchRun run_alpha_switch(SwitchNetParams params, const OfdmConfig& cfg,
                           const ChannelEnsemble& before, const ChannelEnsemble& after,
                           const OnlineConfig& oc, int warmup_groups, int total_groups,
                           double alpha_init, std::uint64_t seed, const std::string& label);

} // namespace airx
