#include "airx/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace airx {

namespace {

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

} // namespace

std::array<int, 3> Sui5ChannelSpec::resolved_delays() const {
    if (delays) return *delays;
    return {0, round_half_up(0.4 * n_max), n_max};
}

const std::array<double, 3>& Sui5ChannelSpec::normalized_powers() {
    static const std::array<double, 3> powers = [] {
        std::array<double, 3> p{1.0, std::pow(10.0, -0.5), std::pow(10.0, -1.0)};
        const double sum = p[0] + p[1] + p[2];
        for (auto& v : p) v /= sum;
        return p;
    }();
    return powers;
}

double NoiseSpec::sigma_w_sq() const {
    if (std::isinf(snr_db)) return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

NoiseSpec NoiseSpec::noiseless() {
    NoiseSpec n;
    n.snr_db = std::numeric_limits<double>::infinity();
    return n;
}

ChannelRealization sample_exp_channel(const ExpChannelSpec& spec, int cp_len, Rng& rng) {
    if (spec.tau_rms <= 0.0) throw std::invalid_argument("tau_rms must be positive");
    if (spec.max_delay < 0) throw std::invalid_argument("max_delay must be non-negative");
    if (spec.max_delay >= cp_len)
        throw std::invalid_argument("max_delay must be below the cyclic prefix length");
    const int L = spec.max_delay + 1;
    std::vector<double> var(L);
    double sum = 0.0;
    for (int l = 0; l < L; ++l) {
        var[l] = std::exp(-static_cast<double>(l) / spec.tau_rms);
        sum += var[l];
    }
    ChannelRealization ch;
    ch.taps.resize(L);
    for (int l = 0; l < L; ++l) ch.taps[l] = rng.cnormal(var[l] / sum);
    return ch;
}

ChannelRealization sample_sui5_channel(const Sui5ChannelSpec& spec, int cp_len, Rng& rng) {
    const auto delays = spec.resolved_delays();
    if (delays[0] < 0 || delays[0] >= delays[1] || delays[1] >= delays[2])
        throw std::invalid_argument("delays must be strictly increasing and non-negative");
    if (delays[2] >= cp_len)
        throw std::invalid_argument("last path delay must be below the cyclic prefix length");
    const auto& powers = Sui5ChannelSpec::normalized_powers();
    ChannelRealization ch;
    ch.taps.assign(static_cast<std::size_t>(delays[2]) + 1, cdouble(0.0, 0.0));
    for (int i = 0; i < 3; ++i) ch.taps[delays[i]] = rng.cnormal(powers[i]);
    return ch;
}

std::vector<cdouble> two_ray_taps(double power_ratio, double phase0, double phase1) {
    if (power_ratio <= 0.0) throw std::invalid_argument("power_ratio must be positive");
    const double p0 = 1.0 / (1.0 + power_ratio);
    const double p1 = power_ratio / (1.0 + power_ratio);
    return {std::sqrt(p0) * cdouble(std::cos(phase0), std::sin(phase0)),
            std::sqrt(p1) * cdouble(std::cos(phase1), std::sin(phase1))};
}

ChannelRealization sample_two_ray_channel(const TwoRayChannelSpec& spec, Rng& rng) {
    const double ph0 = rng.uniform(0.0, 2.0 * M_PI);
    const double ph1 = rng.uniform(0.0, 2.0 * M_PI);
    return ChannelRealization{two_ray_taps(spec.power_ratio, ph0, ph1)};
}

std::vector<cdouble> channel_frequency_response(const ChannelRealization& ch, int fft_size) {
    if (fft_size <= 0) throw std::invalid_argument("fft_size must be positive");
    std::vector<cdouble> h(static_cast<std::size_t>(fft_size));
    for (int k = 0; k < fft_size; ++k) {
        cdouble acc = 0.0;
        for (std::size_t l = 0; l < ch.taps.size(); ++l) {
            const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(l) /
                               static_cast<double>(fft_size);
            acc += ch.taps[l] * cdouble(std::cos(ang), std::sin(ang));
        }
        h[k] = acc;
    }
    return h;
}

std::vector<cdouble> active_frequency_response(const ChannelRealization& ch, const OfdmConfig& cfg) {
    const auto full = channel_frequency_response(ch, cfg.fft_size);
    const auto idx = cfg.active_indices();
    std::vector<cdouble> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = full[idx[i]];
    return out;
}

std::vector<cdouble> apply_channel(const std::vector<cdouble>& time_symbol,
                                   const ChannelRealization& ch, const NoiseSpec& noise,
                                   Rng& rng) {
    if (ch.taps.empty()) throw std::invalid_argument("channel has no taps");
    const std::size_t n = time_symbol.size();
    std::vector<cdouble> y(n, cdouble(0.0, 0.0));
    for (std::size_t l = 0; l < ch.taps.size() && l < n; ++l) {
        const cdouble g = ch.taps[l];
        if (g == cdouble(0.0, 0.0)) continue;
        for (std::size_t t = l; t < n; ++t) y[t] += g * time_symbol[t - l];
    }
    const double s2 = noise.sigma_w_sq();
    if (s2 > 0.0) {
        for (auto& v : y) v += rng.cnormal(s2);
    }
    return y;
}

cdouble theoretical_autocorrelation(const TheoreticalChannelSpec& spec, int lag, int fft_size) {
    if (fft_size <= 0) throw std::invalid_argument("fft_size must be positive");
    if (lag <= -fft_size || lag >= fft_size)
        throw std::invalid_argument("lag must satisfy |lag| < fft_size");
    const double x = 2.0 * M_PI * static_cast<double>(lag) / static_cast<double>(fft_size);
    const cdouble rotation(std::cos(-spec.tau0 * x), std::sin(-spec.tau0 * x));
    return rotation / cdouble(1.0, spec.tau_rms * x);
}

ChannelRealization ChannelEnsemble::sample(int cp_len, Rng& rng) const {
    switch (kind) {
    case Kind::exp: {
        ExpChannelSpec spec;
        spec.tau_rms = tau_rms_min == tau_rms_max ? tau_rms_min
                                                  : rng.uniform(tau_rms_min, tau_rms_max);
        spec.max_delay = static_cast<int>(std::floor(10.0 * spec.tau_rms + 0.5));
        return sample_exp_channel(spec, cp_len, rng);
    }
    case Kind::sui5: {
        Sui5ChannelSpec spec;
        spec.delays = sui5_delays;
        spec.n_max = n_max_min == n_max_max
                         ? n_max_min
                         : n_max_min + static_cast<int>(rng.integer(
                               static_cast<std::uint64_t>(n_max_max - n_max_min + 1)));
        return sample_sui5_channel(spec, cp_len, rng);
    }
    case Kind::two_ray: {
        TwoRayChannelSpec spec;
        spec.power_ratio = power_ratio;
        return sample_two_ray_channel(spec, rng);
    }
    }
    throw std::invalid_argument("unknown channel kind");
}

ChannelEnsemble ChannelEnsemble::exp_default() { return ChannelEnsemble{}; }

ChannelEnsemble ChannelEnsemble::sui5_default() {
    ChannelEnsemble e;
    e.kind = Kind::sui5;
    return e;
}

ChannelEnsemble ChannelEnsemble::sui5_profile(const std::array<int, 3>& delays) {
    ChannelEnsemble e;
    e.kind = Kind::sui5;
    e.sui5_delays = delays;
    e.n_max_min = e.n_max_max = delays[2];
    return e;
}

ChannelEnsemble ChannelEnsemble::two_ray(double power_ratio) {
    ChannelEnsemble e;
    e.kind = Kind::two_ray;
    e.power_ratio = power_ratio;
    return e;
}

} // namespace airx
