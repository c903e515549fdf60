#include "airx/baseband.hpp"

#include <cmath>
#include <stdexcept>

namespace airx {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

std::vector<int> OfdmConfig::active_indices() const {
    std::vector<int> idx;
    idx.reserve(active_count);
    const int half = active_count / 2;
    for (int k = 1; k <= half; ++k) idx.push_back(k);
    for (int k = fft_size - half; k < fft_size; ++k) idx.push_back(k);
    return idx;
}

void OfdmConfig::validate() const {
    if (fft_size < 4) throw std::invalid_argument("fft_size must be at least 4");
    if (active_count <= 0 || active_count % 2 != 0)
        throw std::invalid_argument("active_count must be positive and even");
    if (active_count > fft_size - 2)
        throw std::invalid_argument("active_count must leave room for the DC null");
    if (cp_len < 0 || cp_len >= fft_size)
        throw std::invalid_argument("cp_len must be in [0, fft_size)");
    if (mod_order != 4) throw std::invalid_argument("only mod_order 4 (QPSK) is supported");
}

std::vector<cdouble> map_bits(const std::vector<std::uint8_t>& bits) {
    if (bits.size() % 2 != 0) throw std::invalid_argument("map_bits needs an even bit count");
    for (const auto b : bits)
        if (b > 1) throw std::invalid_argument("map_bits needs bits in {0, 1}");
    std::vector<cdouble> out(bits.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double re = bits[2 * i] ? -kInvSqrt2 : kInvSqrt2;
        const double im = bits[2 * i + 1] ? -kInvSqrt2 : kInvSqrt2;
        out[i] = {re, im};
    }
    return out;
}

std::vector<std::uint8_t> demap_symbols(const std::vector<cdouble>& symbols) {
    std::vector<std::uint8_t> bits(symbols.size() * 2);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        bits[2 * i] = symbols[i].real() < 0.0 ? 1 : 0;
        bits[2 * i + 1] = symbols[i].imag() < 0.0 ? 1 : 0;
    }
    return bits;
}

void dft_inplace(std::vector<cdouble>& v, int sign) {
    const std::size_t n = v.size();
    if (n == 0) return;
    if (sign != 1 && sign != -1) throw std::invalid_argument("dft sign must be +1 or -1");
    if (!is_pow2(static_cast<int>(n))) {
        // Direct transform for odd sizes; only used by tests.
        std::vector<cdouble> out(n);
        for (std::size_t k = 0; k < n; ++k) {
            cdouble acc = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                const double ang = sign * 2.0 * M_PI * static_cast<double>(k * t) / static_cast<double>(n);
                acc += v[t] * cdouble(std::cos(ang), std::sin(ang));
            }
            out[k] = acc;
        }
        v = std::move(out);
        return;
    }
    // Iterative radix-2 with bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const cdouble wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cdouble w = 1.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cdouble a = v[i + k];
                const cdouble b = v[i + k + len / 2] * w;
                v[i + k] = a + b;
                v[i + k + len / 2] = a - b;
                w *= wl;
            }
        }
    }
}

std::vector<cdouble> ofdm_modulate(const OfdmConfig& cfg, const std::vector<cdouble>& active_values) {
    cfg.validate();
    const auto idx = cfg.active_indices();
    if (active_values.size() != idx.size())
        throw std::invalid_argument("active value count does not match the grid");
    std::vector<cdouble> bins(cfg.fft_size, cdouble(0.0, 0.0));
    for (std::size_t i = 0; i < idx.size(); ++i) bins[idx[i]] = active_values[i];
    dft_inplace(bins, +1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.fft_size));
    for (auto& s : bins) s *= scale;
    std::vector<cdouble> out;
    out.reserve(cfg.symbol_len());
    out.insert(out.end(), bins.end() - cfg.cp_len, bins.end());
    out.insert(out.end(), bins.begin(), bins.end());
    return out;
}

std::vector<cdouble> ofdm_demodulate(const OfdmConfig& cfg, const std::vector<cdouble>& time_symbol) {
    cfg.validate();
    if (time_symbol.size() != static_cast<std::size_t>(cfg.symbol_len()))
        throw std::invalid_argument("time symbol has wrong length");
    std::vector<cdouble> body(time_symbol.begin() + cfg.cp_len, time_symbol.end());
    dft_inplace(body, -1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.fft_size));
    const auto idx = cfg.active_indices();
    std::vector<cdouble> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = body[idx[i]] * scale;
    return out;
}

std::vector<cdouble> pilot_symbols(const OfdmConfig& cfg) {
    Rng rng(mix_seed(cfg.pilot_seed, 0x70696c6fULL));
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(cfg.bits_per_symbol()));
    for (auto& b : bits) b = rng.uniform() < 0.5 ? 0 : 1;
    return map_bits(bits);
}

std::vector<std::uint8_t> random_bits(int count, Rng& rng) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(count));
    for (auto& b : bits) b = rng.uniform() < 0.5 ? 0 : 1;
    return bits;
}

Frame make_frame(const OfdmConfig& cfg, const std::vector<std::uint8_t>& bits) {
    if (bits.size() != static_cast<std::size_t>(cfg.bits_per_frame()))
        throw std::invalid_argument("payload size does not match the grid");
    Frame f;
    f.bits = bits;
    f.pilot_time = ofdm_modulate(cfg, pilot_symbols(cfg));
    f.data_time = ofdm_modulate(cfg, map_bits(bits));
    return f;
}

} // namespace airx
