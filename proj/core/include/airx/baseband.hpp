#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "airx/rng.hpp"

namespace airx {

using cdouble = std::complex<double>;

/// OFDM grid layout: FFT size, occupied subcarriers, cyclic prefix length.
///
/// Active subcarriers sit symmetrically around DC: bins 1..K/2 and
/// N-K/2..N-1. Bin 0 (DC) is null and the middle bins form the guard band.
struct OfdmConfig {
    int fft_size = 128;
    int active_count = 64;
    int cp_len = 16;
    int mod_order = 4; // constellation size; only 4 (QPSK) is supported
    std::uint64_t pilot_seed = 7;

    /// Active bin indices in ascending order.
    std::vector<int> active_indices() const;

    int bits_per_symbol() const { return active_count * 2; }
    /// Payload bits carried by one frame (one data symbol).
    int bits_per_frame() const { return bits_per_symbol(); }
    int symbol_len() const { return fft_size + cp_len; }

    /// Throws std::invalid_argument when the layout is unusable.
    void validate() const;
};

/// One transmit frame: pilot symbol then data symbol, both CP-extended
/// time-domain signals, plus the source bits of the data symbol.
struct Frame {
    std::vector<cdouble> pilot_time;
    std::vector<cdouble> data_time;
    std::vector<std::uint8_t> bits;
};

/// Gray-coded QPSK. Bit pair (b0, b1) maps to ((1-2*b0) + j(1-2*b1))/sqrt(2):
/// 00 -> (+1+j)/sqrt(2), 01 -> (+1-j)/sqrt(2), 11 -> (-1-j)/sqrt(2), 10 -> (-1+j)/sqrt(2).
std::vector<cdouble> map_bits(const std::vector<std::uint8_t>& bits);

/// Nearest-constellation-point hard decision, inverse of map_bits.
std::vector<std::uint8_t> demap_symbols(const std::vector<cdouble>& symbols);

/// Unnormalized DFT, radix-2 for power-of-two lengths. sign = -1 forward,
/// +1 inverse (inverse here is unnormalized as well).
void dft_inplace(std::vector<cdouble>& v, int sign);

/// IFFT of the active values placed on their bins, unitary scaling
/// (1/sqrt(N)), cyclic prefix prepended. Returns N+P samples.
std::vector<cdouble> ofdm_modulate(const OfdmConfig& cfg, const std::vector<cdouble>& active_values);

/// Drops the CP, applies the unitary FFT, returns the active-bin values.
/// Exact inverse of ofdm_modulate.
std::vector<cdouble> ofdm_demodulate(const OfdmConfig& cfg, const std::vector<cdouble>& time_symbol);

/// Fixed unit-modulus QPSK pilot sequence derived from cfg.pilot_seed.
std::vector<cdouble> pilot_symbols(const OfdmConfig& cfg);

/// Random payload bits for one frame.
std::vector<std::uint8_t> random_bits(int count, Rng& rng);

/// Assemble pilot + data time-domain symbols from payload bits.
Frame make_frame(const OfdmConfig& cfg, const std::vector<std::uint8_t>& bits);

} // namespace airx
