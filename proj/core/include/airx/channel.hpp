#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "airx/baseband.hpp"
#include "airx/rng.hpp"

namespace airx {

/// One multipath draw: complex tap gains indexed by whole-sample delay.
struct ChannelRealization {
    std::vector<cdouble> taps;
    int num_taps() const { return static_cast<int>(taps.size()); }
};

/// Exponential power-delay profile. Tap l has variance proportional to
/// exp(-l / tau_rms), taps 0..max_delay, total variance normalized to 1.
struct ExpChannelSpec {
    double tau_rms = 0.5; // in samples
    int max_delay = 5;    // last tap delay in samples
};

/// Three-tap long-delay profile with tap powers 10^0, 10^-0.5, 10^-1
/// (normalized) at delays [0, round(0.4 * n_max), n_max]. An explicit
/// delay triple may be given instead of the derived one.
struct Sui5ChannelSpec {
    int n_max = 10;
    std::optional<std::array<int, 3>> delays;

    std::array<int, 3> resolved_delays() const;
    static const std::array<double, 3>& normalized_powers();
};

/// Two taps at delays {0, 1} with deterministic magnitudes set by
/// power_ratio = |h1|^2 / |h0|^2 and independent uniform phases.
struct TwoRayChannelSpec {
    double power_ratio = 1.0;
};

/// Parameters of the closed-form frequency autocorrelation used to build
/// the linear MMSE estimator: exponential delay profile with RMS spread
/// tau_rms samples and first-path delay tau0 samples.
struct TheoreticalChannelSpec {
    double tau_rms = 0.5;
    double tau0 = 0.0;
};

/// Additive white Gaussian noise level. sigma_w_sq() = 10^(-snr_db/10);
/// an infinite snr_db means noiseless.
struct NoiseSpec {
    double snr_db = 25.0;
    double sigma_w_sq() const;
    static NoiseSpec noiseless();
};

/// Draw an exponential-profile realization. Requires max_delay < cp_len.
ChannelRealization sample_exp_channel(const ExpChannelSpec& spec, int cp_len, Rng& rng);

/// Draw a long-delay three-tap realization. Requires n_max < cp_len.
ChannelRealization sample_sui5_channel(const Sui5ChannelSpec& spec, int cp_len, Rng& rng);

/// Draw a two-ray realization with random phases.
ChannelRealization sample_two_ray_channel(const TwoRayChannelSpec& spec, Rng& rng);

/// Deterministic two-ray taps for given phases. Unit total power.
std::vector<cdouble> two_ray_taps(double power_ratio, double phase0, double phase1);

/// Unnormalized N-point DFT of the zero-padded taps: H(k) = sum_l h_l e^{-j2*pi*kl/N}.
std::vector<cdouble> channel_frequency_response(const ChannelRealization& ch, int fft_size);

/// The frequency response restricted to the active bins.
std::vector<cdouble> active_frequency_response(const ChannelRealization& ch, const OfdmConfig& cfg);

/// Linear convolution of one CP-extended symbol with the taps, truncated to
/// the symbol length (receiver aligned to path 0), plus AWGN per sample.
std::vector<cdouble> apply_channel(const std::vector<cdouble>& time_symbol,
                                   const ChannelRealization& ch,
                                   const NoiseSpec& noise, Rng& rng);

/// Normalized frequency autocorrelation at integer subcarrier lag k:
/// R(k)/R(0) = exp(-j2*pi*tau0*k/N) / (1 + j2*pi*tau_rms*k/N).
cdouble theoretical_autocorrelation(const TheoreticalChannelSpec& spec, int lag, int fft_size);

/// Channel population sampled per frame. EXP draws tau_rms uniformly in
/// [tau_rms_min, tau_rms_max] with max_delay = round(10 * tau_rms); SUI-5
/// draws n_max uniformly in {n_max_min..n_max_max} unless a fixed delay
/// profile is set. Degenerate ranges (min == max) pin the draw.
struct ChannelEnsemble {
    enum class Kind { exp, sui5, two_ray };

    Kind kind = Kind::exp;
    double tau_rms_min = 0.3;
    double tau_rms_max = 0.7;
    int n_max_min = 8;
    int n_max_max = 14;
    std::optional<std::array<int, 3>> sui5_delays;
    double power_ratio = 1.0;

    ChannelRealization sample(int cp_len, Rng& rng) const;

    static ChannelEnsemble exp_default();
    static ChannelEnsemble sui5_default();
    static ChannelEnsemble sui5_profile(const std::array<int, 3>& delays);
    static ChannelEnsemble two_ray(double power_ratio);
};

} // namespace airx
