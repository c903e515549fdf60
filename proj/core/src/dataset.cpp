#include "airx/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "airx/errors.hpp"

namespace airx {

namespace {

constexpr char kMagic[4] = {'A', 'I', 'R', 'X'};
constexpr std::uint8_t kRecordType = 'D';
constexpr std::uint32_t kDatasetVersion = 1;

void put_u8(std::string& buf, std::uint8_t v) { buf.push_back(static_cast<char>(v)); }

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

void put_cvec(std::string& buf, const std::vector<cdouble>& v) {
    for (const auto& c : v) {
        put_f64(buf, c.real());
        put_f64(buf, c.imag());
    }
}

class ByteReader {
public:
    ByteReader(std::string data, std::string origin)
        : data_(std::move(data)), origin_(std::move(origin)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<cdouble> cvec(std::size_t n) {
        std::vector<cdouble> v(n);
        for (auto& c : v) {
            const double re = f64();
            const double im = f64();
            c = {re, im};
        }
        return v;
    }
    std::uint64_t offset() const { return pos_; }
    bool exhausted() const { return pos_ == data_.size(); }

    void expect_magic() {
        need(4);
        if (std::memcmp(data_.data() + pos_, kMagic, 4) != 0)
            throw FormatError(origin_ + ": bad magic", pos_);
        pos_ += 4;
    }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size()) throw FormatError(origin_ + ": truncated file", pos_);
    }
    std::string data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

} // namespace

void save_dataset(const std::string& path, const LabeledDataset& ds) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u8(buf, kRecordType);
    put_u32(buf, kDatasetVersion);
    put_u8(buf, static_cast<std::uint8_t>(ds.tag));
    put_u32(buf, static_cast<std::uint32_t>(ds.active_count));
    put_u32(buf, static_cast<std::uint32_t>(ds.bits_per_frame));
    put_u64(buf, ds.frames.size());
    for (const auto& f : ds.frames) {
        if (f.rx_pilot.size() != static_cast<std::size_t>(ds.active_count) ||
            f.rx_data.size() != static_cast<std::size_t>(ds.active_count) ||
            f.bits.size() != static_cast<std::size_t>(ds.bits_per_frame))
            throw FormatError("frame does not match the dataset header");
        put_u32(buf, static_cast<std::uint32_t>(f.taps.size()));
        put_cvec(buf, f.rx_pilot);
        put_cvec(buf, f.rx_data);
        for (auto b : f.bits) put_u8(buf, b);
        put_cvec(buf, f.taps);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError("short write to " + path);
}

LabeledDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ByteReader rd(std::move(data), path);
    rd.expect_magic();
    if (rd.u8() != kRecordType) throw FormatError(path + ": not a dataset file", rd.offset());
    const std::uint32_t version = rd.u32();
    if (version != kDatasetVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    LabeledDataset ds;
    const std::uint8_t tag = rd.u8();
    if (tag > 3) throw FormatError(path + ": unknown channel tag", rd.offset());
    ds.tag = static_cast<ChannelTag>(tag);
    ds.active_count = static_cast<int>(rd.u32());
    ds.bits_per_frame = static_cast<int>(rd.u32());
    if (ds.active_count <= 0 || ds.active_count > (1 << 16) || ds.bits_per_frame <= 0 ||
        ds.bits_per_frame > (1 << 20))
        throw FormatError(path + ": implausible header", rd.offset());
    const std::uint64_t count = rd.u64();
    ds.frames.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        LabeledRecord f;
        const std::uint32_t taps = rd.u32();
        if (taps > (1u << 16)) throw FormatError(path + ": implausible tap count", rd.offset());
        f.rx_pilot = rd.cvec(static_cast<std::size_t>(ds.active_count));
        f.rx_data = rd.cvec(static_cast<std::size_t>(ds.active_count));
        f.bits.resize(static_cast<std::size_t>(ds.bits_per_frame));
        for (auto& b : f.bits) {
            b = rd.u8();
            if (b > 1) throw FormatError(path + ": bit out of range", rd.offset());
        }
        f.taps = rd.cvec(taps);
        ds.frames.push_back(std::move(f));
    }
    if (!rd.exhausted()) throw FormatError(path + ": trailing bytes", rd.offset());
    return ds;
}

} // namespace airx
