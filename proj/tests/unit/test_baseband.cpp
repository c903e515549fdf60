#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "airx/baseband.hpp"

using namespace airx;

namespace {

/// Brute-force reference DFT, O(n^2).
std::vector<cdouble> dft_reference(const std::vector<cdouble>& v, int sign) {
    const std::size_t n = v.size();
    std::vector<cdouble> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cdouble acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k * t) /
                                 static_cast<double>(n);
            acc += v[t] * cdouble(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<cdouble> random_symbols(int n, Rng& rng) {
    std::vector<cdouble> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.cnormal(1.0);
    return v;
}

double max_abs_diff(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_SUITE("baseband") {

TEST_CASE("qpsk mapping hits the four gray-coded points") {
    const double s = 1.0 / std::sqrt(2.0);
    const auto pts = map_bits({0, 0, 0, 1, 1, 1, 1, 0});
    REQUIRE(pts.size() == 4);
    const std::vector<cdouble> expect = {{s, s}, {s, -s}, {-s, -s}, {-s, s}};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(pts[i].real() == doctest::Approx(expect[i].real()).epsilon(1e-15));
        CHECK(pts[i].imag() == doctest::Approx(expect[i].imag()).epsilon(1e-15));
    }
    for (const auto& p : pts) CHECK(std::abs(std::abs(p) - 1.0) < 1e-12);
}

TEST_CASE("qpsk mapping rejects odd bit counts and non-binary values") {
    CHECK_THROWS_AS(map_bits({1}), std::invalid_argument);
    CHECK_THROWS_AS(map_bits({0, 2}), std::invalid_argument);
}

TEST_CASE("demapping inverts the mapping under small perturbations") {
    Rng rng(11);
    const auto bits = random_bits(128, rng);
    auto symbols = map_bits(bits);
    for (auto& s : symbols) s += rng.cnormal(1.0) * 0.05;
    CHECK(demap_symbols(symbols) == bits);
}

TEST_CASE("fft matches the brute-force dft") {
    Rng rng(5);
    for (const int n : {8, 128}) {
        for (const int sign : {-1, +1}) {
            auto v = random_symbols(n, rng);
            const auto want = dft_reference(v, sign);
            dft_inplace(v, sign);
            CHECK(max_abs_diff(v, want) < 1e-9 * std::sqrt(static_cast<double>(n)));
        }
    }
}

TEST_CASE("dft handles non-power-of-two lengths") {
    Rng rng(6);
    auto v = random_symbols(12, rng);
    const auto want = dft_reference(v, -1);
    dft_inplace(v, -1);
    CHECK(max_abs_diff(v, want) < 1e-9);
}

TEST_CASE("active bins sit symmetrically around dc") {
    const OfdmConfig cfg;
    const auto idx = cfg.active_indices();
    REQUIRE(static_cast<int>(idx.size()) == cfg.active_count);
    CHECK(idx.front() == 1);
    CHECK(idx[31] == 32);
    CHECK(idx[32] == 96);
    CHECK(idx.back() == 127);
    for (const int i : idx) {
        CHECK(i != 0);
        CHECK((i <= 32 || i >= 96));
    }
}

TEST_CASE("modulate and demodulate are exact inverses") {
    const OfdmConfig cfg;
    Rng rng(21);
    const auto values = random_symbols(cfg.active_count, rng);
    const auto time = ofdm_modulate(cfg, values);
    REQUIRE(static_cast<int>(time.size()) == cfg.symbol_len());
    const auto back = ofdm_demodulate(cfg, time);
    CHECK(max_abs_diff(values, back) < 1e-10);
}

TEST_CASE("cyclic prefix repeats the symbol tail") {
    const OfdmConfig cfg;
    Rng rng(22);
    const auto time = ofdm_modulate(cfg, random_symbols(cfg.active_count, rng));
    for (int i = 0; i < cfg.cp_len; ++i)
        CHECK(std::abs(time[static_cast<std::size_t>(i)] -
                       time[static_cast<std::size_t>(cfg.fft_size + i)]) < 1e-12);
}

TEST_CASE("modulation is unitary on the symbol body") {
    const OfdmConfig cfg;
    Rng rng(23);
    const auto values = random_symbols(cfg.active_count, rng);
    const auto time = ofdm_modulate(cfg, values);
    double freq_power = 0.0;
    for (const auto& v : values) freq_power += std::norm(v);
    double time_power = 0.0;
    for (int i = cfg.cp_len; i < cfg.symbol_len(); ++i)
        time_power += std::norm(time[static_cast<std::size_t>(i)]);
    CHECK(time_power == doctest::Approx(freq_power).epsilon(1e-9));
}

TEST_CASE("pilot sequence is deterministic and unit modulus") {
    const OfdmConfig cfg;
    const auto p1 = pilot_symbols(cfg);
    const auto p2 = pilot_symbols(cfg);
    REQUIRE(static_cast<int>(p1.size()) == cfg.active_count);
    CHECK(p1 == p2);
    for (const auto& p : p1) CHECK(std::abs(std::abs(p) - 1.0) < 1e-12);
    OfdmConfig other = cfg;
    other.pilot_seed = cfg.pilot_seed + 1;
    CHECK(pilot_symbols(other) != p1);
}

TEST_CASE("frame assembly carries the payload bits") {
    const OfdmConfig cfg;
    Rng rng(31);
    const auto bits = random_bits(cfg.bits_per_frame(), rng);
    const Frame frame = make_frame(cfg, bits);
    CHECK(frame.bits == bits);
    REQUIRE(static_cast<int>(frame.data_time.size()) == cfg.symbol_len());
    const auto data = ofdm_demodulate(cfg, frame.data_time);
    CHECK(demap_symbols(data) == bits);
    const auto pilot = ofdm_demodulate(cfg, frame.pilot_time);
    CHECK(max_abs_diff(pilot, pilot_symbols(cfg)) < 1e-10);
}

TEST_CASE("layout validation rejects unusable grids") {
    OfdmConfig cfg;
    cfg.active_count = 63;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = OfdmConfig{};
    cfg.cp_len = 128;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = OfdmConfig{};
    cfg.mod_order = 16;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = OfdmConfig{};
    cfg.active_count = 128;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = OfdmConfig{};
    CHECK_NOTHROW(cfg.validate());
}

} // TEST_SUITE
