#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "airx/dataset.hpp"
#include "airx/receivers.hpp"

namespace airx {

/// Offline training schedule. Every epoch consumes frames_per_epoch freshly
/// generated frames in batches of batch_frames, one optimizer step per batch.
struct TrainingConfig {
    double snr_db = 25.0;
    int epochs = 2000;
    double lr = 0.001;
    int frames_per_epoch = 1000;
    int batch_frames = 100;
    std::uint64_t seed = 1;
    /// Multiplies the learning rate at each quarter of the run when < 1.
    double lr_decay = 1.0;
};

/// Online adaptation schedule: the loop waits for a full group of
/// symbols_per_epoch labeled symbols, then trains epochs_per_group epochs
/// on that group, each epoch a reshuffled pass in batches of batch_symbols.
struct OnlineConfig {
    int symbols_per_epoch = 50;
    int batch_symbols = 10;
    int epochs_per_group = 2;
    double alpha_lr = 0.006;
    double transfer_lr = 0.01;
    int collected_symbols = 5000;
    double snr_db = 25.0;
};

/// Deterministic frame synthesizer: one seed fixes bits, channel draw and
/// noise, so datasets and training streams replay exactly.
LabeledRecord synthesize_frame(const OfdmConfig& cfg, const ChannelEnsemble& ensemble,
                               const NoiseSpec& noise, std::uint64_t frame_seed);

/// Frame stream addressed by (epoch, index); every address is its own seed.
struct FrameSource {
    OfdmConfig cfg;
    ChannelEnsemble ensemble;
    NoiseSpec noise;
    std::uint64_t seed = 1;

    LabeledRecord make(std::uint64_t epoch, std::uint64_t index) const;
};

LabeledDataset generate_dataset(const OfdmConfig& cfg, const ChannelEnsemble& ensemble,
                                const NoiseSpec& noise, std::size_t count, std::uint64_t seed,
                                ChannelTag tag);

/// True channel frequency response of a record on the active bins.
std::vector<cdouble> record_channel_label(const LabeledRecord& rec, const OfdmConfig& cfg);

struct TrainTrace {
    std::vector<double> loss; // one entry per epoch
};

/// Train the dense receiver end to end: MSE between the 128 soft bits and
/// the payload bits, per-subnet Adam at cfg.lr.
FcdnnParams train_fcdnn(const OfdmConfig& cfg, const TrainingConfig& tc, const FrameSource& src,
                        TrainTrace* trace = nullptr);

/// Two-stage training of the model-based receiver. Stage 1 fits the
/// refinement layer to true channel labels starting from the LMMSE matrix;
/// stage 2 freezes it and fits the detection subnets to the payload bits.
ComnetParams train_comnet(const OfdmConfig& cfg, const TrainingConfig& tc, const FrameSource& src,
                          const LmmseInit& lmmse, SdMode sd_mode, TrainTrace* ce_trace = nullptr,
                          TrainTrace* sd_trace = nullptr);

/// Three-stage training of the switching receiver: stage 1 fits (W1, B1)
/// on the short-delay source at alpha = 0; stage 2 freezes them and fits
/// (W2, B2) on the long-delay source at alpha = 1; stage 3 fits the shared
/// detection subnets on a 50/50 mixture with alpha matched per frame.
SwitchNetParams train_switchnet_offline(const OfdmConfig& cfg, const TrainingConfig& tc,
                                        const FrameSource& short_src, const FrameSource& long_src,
                                        const LmmseInit& lmmse, SdMode sd_mode,
                                        TrainTrace* ce1_trace = nullptr,
                                        TrainTrace* ce2_trace = nullptr,
                                        TrainTrace* sd_trace = nullptr);

/// Pull-based labeled symbol stream; empty optional = stream exhausted.
using SymbolStream = std::function<std::optional<LabeledRecord>()>;

/// Stream over a prebuilt list of records.
SymbolStream stream_from_records(std::vector<LabeledRecord> records);

struct AlphaTrace {
    std::vector<double> alpha; // after every epoch
};

/// One-parameter online adaptation: everything is frozen except alpha,
/// updated by Adam on the end-to-end soft-bit MSE against the labels
/// carried by the stream. Emits alpha after every epoch.
AlphaTrace online_train_alpha(SwitchNetParams& params, const SymbolStream& stream,
                              const OnlineConfig& oc, const OfdmConfig& cfg, std::uint64_t seed);

struct TransferTrace {
    double ber_before = 0.0;
    std::vector<double> ber; // after every epoch, on the held-out frames
};

/// Online transfer learning: every parameter trains end to end on the
/// stream at oc.transfer_lr. BER on the held-out frames is recorded after
/// each epoch.
TransferTrace online_transfer_comnet(ComnetParams& params, const SymbolStream& stream,
                                     const OnlineConfig& oc, const OfdmConfig& cfg,
                                     const std::vector<LabeledRecord>& test_frames,
                                     std::uint64_t seed);

TransferTrace online_transfer_fcdnn(FcdnnParams& params, const SymbolStream& stream,
                                    const OnlineConfig& oc, const OfdmConfig& cfg,
                                    const std::vector<LabeledRecord>& test_frames,
                                    std::uint64_t seed);

/// Mean squared channel-estimate error of an estimator over a record set.
double channel_estimate_mse(const OfdmConfig& cfg, const std::vector<LabeledRecord>& frames,
                            const std::function<std::vector<cdouble>(const std::vector<cdouble>&)>& estimator);

/// Fraction of wrong bits a receiver makes on a record set.
double record_set_ber(const std::vector<LabeledRecord>& frames,
                      const std::function<std::vector<std::uint8_t>(const LabeledRecord&)>& receive);

} // namespace airx
