#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "airx/baseband.hpp"
#include "airx/channel.hpp"

namespace airx {

enum class ChannelTag : std::uint8_t { exp = 0, sui5 = 1, two_ray = 2, mixed = 3 };

/// One labeled frame: post-FFT received pilot and data symbols on the
/// active bins, the payload bits, and the true channel taps.
struct LabeledRecord {
    std::vector<cdouble> rx_pilot;
    std::vector<cdouble> rx_data;
    std::vector<std::uint8_t> bits;
    std::vector<cdouble> taps;
};

struct LabeledDataset {
    int active_count = 64;
    int bits_per_frame = 128;
    ChannelTag tag = ChannelTag::exp;
    std::vector<LabeledRecord> frames;
};

/// Binary dataset file. Little-endian; layout: "AIRX", u8 'D', u32 version,
/// u8 channel tag, u32 active count, u32 bits per frame, u64 frame count,
/// then per frame u32 tap count, pilot and data symbols as interleaved
/// re/im f64, one u8 per bit, taps as interleaved re/im f64.
void save_dataset(const std::string& path, const LabeledDataset& ds);
LabeledDataset load_dataset(const std::string& path);

} // namespace airx
