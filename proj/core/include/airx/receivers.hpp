#pragma once

#include <array>
#include <vector>

#include "airx/channel.hpp"
#include "airx/nnkit.hpp"

namespace airx {

/// [Re(v); Im(v)] stacking used at every complex/real boundary.
std::vector<double> to_real_vector(const std::vector<cdouble>& v);
std::vector<cdouble> to_complex_vector(const std::vector<double>& v);

/// Real 2Kx2K block form [[Re W, -Im W], [Im W, Re W]] of a complex KxK
/// matrix, consistent with to_real_vector.
Eigen::MatrixXd complex_to_real_block(const Eigen::MatrixXcd& w);

/// Per-subcarrier least-squares channel estimate y_p(k) / x_p(k).
std::vector<cdouble> ls_estimate(const std::vector<cdouble>& y_p, const std::vector<cdouble>& x_p);

/// Zero-forcing equalization y_d(k) / h(k); outputs 0 where |h(k)|^2 is
/// below the divide guard (1e-12 on the squared magnitude).
std::vector<cdouble> zf_detect(const std::vector<cdouble>& y_d, const std::vector<cdouble>& h);

/// MMSE equalization conj(h) y / (|h|^2 + sigma_w_sq).
std::vector<cdouble> mmse_detect(const std::vector<cdouble>& y_d, const std::vector<cdouble>& h,
                                 double sigma_w_sq);

/// Linear MMSE channel smoother built from the theoretical autocorrelation:
/// W = R (R + (beta/snr) I)^-1 with beta = 1, evaluated at a fixed design
/// SNR. Built once, applied as a matrix to the LS estimate.
struct LmmseInit {
    Eigen::MatrixXcd weight;     // K x K
    Eigen::MatrixXd weight_real; // 2K x 2K block form
    double design_snr_db = 25.0;
};

LmmseInit build_lmmse(const TheoreticalChannelSpec& spec, const OfdmConfig& cfg, double design_snr_db);

std::vector<cdouble> lmmse_estimate(const LmmseInit& lmmse, const std::vector<cdouble>& h_ls);

/// Classical baseline: LS -> LMMSE smoothing -> MMSE equalization -> hard
/// decision. The equalizer uses the actual noise level of the run.
std::vector<std::uint8_t> lmmse_mmse_baseline(const std::vector<cdouble>& y_p,
                                              const std::vector<cdouble>& y_d,
                                              const OfdmConfig& cfg, const LmmseInit& lmmse,
                                              const NoiseSpec& noise);

/// LS -> ZF -> hard decision, no smoothing.
std::vector<std::uint8_t> ls_zf_receive(const std::vector<cdouble>& y_p,
                                        const std::vector<cdouble>& y_d, const OfdmConfig& cfg);

constexpr int kNumSubnets = 8;
constexpr int kBitsPerSubnet = 16;

/// Soft bit in [0,1] decided at 0.5 (ties go to 1).
std::vector<std::uint8_t> hard_decisions(const std::vector<double>& soft);

/// Full-frame dense receiver: 8 parallel subnets, each mapping the stacked
/// real pilot+data observation (256 values) through 500/250/120 hidden units
/// to 16 sigmoid soft bits. Subnet j owns bits [16j, 16j+16).
struct FcdnnParams {
    std::array<nn::Network, kNumSubnets> subnets;
};

std::vector<nn::DenseLayerSpec> fcdnn_subnet_specs();
FcdnnParams init_fcdnn(Rng& rng);
std::vector<double> fcdnn_soft(const FcdnnParams& p, const std::vector<cdouble>& y_p,
                               const std::vector<cdouble>& y_d);
std::vector<std::uint8_t> fcdnn_receive(const FcdnnParams& p, const std::vector<cdouble>& y_p,
                                        const std::vector<cdouble>& y_d);

enum class SdMode : std::uint8_t { relu = 0, linear = 1 };

/// Model-based receiver: a single real 128x128 refinement layer on the LS
/// estimate (initialized at the LMMSE matrix), ZF equalization, then 8
/// detection subnets of one 120-unit hidden layer (ReLU, or none in the
/// linear variant) and 16 sigmoid outputs each.
struct ComnetParams {
    nn::Network ce;                              // single 128 -> 128 linear layer
    std::array<nn::Network, kNumSubnets> sd;
    SdMode sd_mode = SdMode::relu;
    bool qam_short_path = false;                 // bypass SD with a hard decision on the ZF symbols
};

std::vector<nn::DenseLayerSpec> comnet_ce_specs();
std::vector<nn::DenseLayerSpec> comnet_sd_subnet_specs(SdMode mode);
ComnetParams init_comnet(const LmmseInit& lmmse, SdMode mode, Rng& rng);

struct NeuralReceiveResult {
    std::vector<cdouble> h_hat;  // refined channel estimate, active bins
    std::vector<cdouble> zf;     // equalized data symbols
    std::vector<double> soft;    // 128 soft bits
    std::vector<std::uint8_t> bits;
};

NeuralReceiveResult comnet_forward(const ComnetParams& p, const std::vector<cdouble>& y_p,
                                   const std::vector<cdouble>& y_d, const OfdmConfig& cfg);
std::vector<std::uint8_t> comnet_receive(const ComnetParams& p, const std::vector<cdouble>& y_p,
                                         const std::vector<cdouble>& y_d, const OfdmConfig& cfg);

/// Channel-switching variant of the model-based receiver. The refinement
/// stage is h = (alpha W2 + I)(W1 h_ls + B1) + alpha B2 on stacked real
/// vectors: alpha = 0 reduces it to the single-matrix refinement, alpha = 1
/// engages the second stage trained for the long-delay channel. alpha is
/// the only parameter touched by online adaptation.
struct SwitchNetCeParams {
    Eigen::MatrixXd W1; // 128 x 128
    Eigen::VectorXd B1;
    Eigen::MatrixXd W2;
    Eigen::VectorXd B2;
    double alpha = 0.0;
};

struct SwitchNetParams {
    SwitchNetCeParams ce;
    std::array<nn::Network, kNumSubnets> sd;
    SdMode sd_mode = SdMode::relu;
};

std::vector<nn::DenseLayerSpec> switchnet_ce_specs();

/// Apply the two-stage refinement to a stacked real LS estimate.
Eigen::VectorXd switchnet_ce_forward(const SwitchNetCeParams& ce, const Eigen::VectorXd& h_ls_real);

NeuralReceiveResult switchnet_forward(const SwitchNetParams& p, const std::vector<cdouble>& y_p,
                                      const std::vector<cdouble>& y_d, const OfdmConfig& cfg);
std::vector<std::uint8_t> switchnet_receive(const SwitchNetParams& p, const std::vector<cdouble>& y_p,
                                            const std::vector<cdouble>& y_d, const OfdmConfig& cfg);

/// Shared detection-subnet forward: stacked real equalized symbols in,
/// 128 soft bits out.
std::vector<double> sd_soft(const std::array<nn::Network, kNumSubnets>& sd,
                            const std::vector<double>& zf_real);

/// Checkpoint layout helpers. A checkpoint is a flat layer list:
/// 8 x 4 subnet layers for the dense receiver; [ce, 8 x 2 sd] for the
/// model-based receiver; [ce1, ce2, alpha carrier (1x1), 8 x 2 sd] for the
/// switching receiver.
void save_fcdnn(const std::string& path, const FcdnnParams& p);
FcdnnParams load_fcdnn(const std::string& path);
void save_comnet(const std::string& path, const ComnetParams& p);
ComnetParams load_comnet(const std::string& path);
void save_switchnet(const std::string& path, const SwitchNetParams& p);
SwitchNetParams load_switchnet(const std::string& path);

} // namespace airx
