#include <cmath>
#include <complex>
#include <filesystem>
#include <vector>

#include <doctest.h>

#include "airx/errors.hpp"
#include "airx/receivers.hpp"
#include "airx/trainer.hpp"

using namespace airx;

namespace {

std::vector<cdouble> random_complex(int n, Rng& rng) {
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

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

LmmseInit default_lmmse(const OfdmConfig& cfg) {
    return build_lmmse(TheoreticalChannelSpec{0.5, 0.0}, cfg, 25.0);
}

} // namespace

TEST_SUITE("receivers") {

TEST_CASE("real stacking round-trips and matches the block matrix form") {
    Rng rng(301);
    const auto v = random_complex(16, rng);
    const auto stacked = to_real_vector(v);
    REQUIRE(stacked.size() == 32);
    CHECK(stacked[0] == v[0].real());
    CHECK(stacked[16] == v[0].imag());
    CHECK(max_abs_diff(to_complex_vector(stacked), v) == 0.0);

    Eigen::MatrixXcd w(16, 16);
    for (long i = 0; i < w.size(); ++i) w.data()[i] = rng.cnormal(1.0);
    const Eigen::MatrixXd wr = complex_to_real_block(w);
    Eigen::VectorXcd vc(16);
    for (int i = 0; i < 16; ++i) vc(i) = v[static_cast<std::size_t>(i)];
    const Eigen::VectorXcd want = w * vc;
    Eigen::VectorXd sr(32);
    for (int i = 0; i < 32; ++i) sr(i) = stacked[static_cast<std::size_t>(i)];
    const Eigen::VectorXd got = wr * sr;
    for (int i = 0; i < 16; ++i) {
        CHECK(got(i) == doctest::Approx(want(i).real()).epsilon(1e-12));
        CHECK(got(16 + i) == doctest::Approx(want(i).imag()).epsilon(1e-12));
    }
}

TEST_CASE("least-squares estimate is exact on noiseless observations") {
    Rng rng(302);
    const auto h = random_complex(64, rng);
    const auto x = random_complex(64, rng);
    std::vector<cdouble> y(64);
    for (std::size_t i = 0; i < 64; ++i) y[i] = h[i] * x[i];
    CHECK(max_abs_diff(ls_estimate(y, x), h) < 1e-12);
}

TEST_CASE("zero-forcing detection divides and guards") {
    const std::vector<cdouble> y{cdouble(2.0, 0.0), cdouble(1.0, 1.0)};
    const std::vector<cdouble> h{cdouble(2.0, 0.0), cdouble(0.0, 0.0)};
    const auto x = zf_detect(y, h);
    CHECK(std::abs(x[0] - cdouble(1.0, 0.0)) < 1e-15);
    CHECK(x[1] == cdouble(0.0, 0.0));
}

TEST_CASE("mmse detection reduces to zero forcing without noise") {
    Rng rng(303);
    const auto h = random_complex(8, rng);
    const auto y = random_complex(8, rng);
    CHECK(max_abs_diff(mmse_detect(y, h, 0.0), zf_detect(y, h)) < 1e-12);
    // with noise the estimate shrinks toward zero
    const auto shrunk = mmse_detect(y, h, 1.0);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(shrunk[i]) < std::abs(y[i] / h[i]));
}

TEST_CASE("linear smoother nearly preserves in-model channels") {
    const OfdmConfig cfg;
    const LmmseInit lmmse = default_lmmse(cfg);
    CHECK(lmmse.weight.rows() == 64);
    Rng rng(304);
    for (int i = 0; i < 10; ++i) {
        const auto ch = sample_exp_channel({0.5, 5}, cfg.cp_len, rng);
        const auto h = active_frequency_response(ch, cfg);
        const auto smoothed = lmmse_estimate(lmmse, h);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) {
            num += std::norm(smoothed[k] - h[k]);
            den += std::norm(h[k]);
        }
        CHECK(std::sqrt(num / den) < 0.05);
    }
}

TEST_CASE("linear smoothing beats raw least squares at low snr") {
    const OfdmConfig cfg;
    const LmmseInit lmmse = default_lmmse(cfg);
    const auto ensemble = ChannelEnsemble::exp_default();
    std::vector<LabeledRecord> frames;
    for (int i = 0; i < 1000; ++i)
        frames.push_back(synthesize_frame(cfg, ensemble, NoiseSpec{10.0}, mix_seed(305, i)));
    const double mse_ls = channel_estimate_mse(cfg, frames, [](const std::vector<cdouble>& h) {
        return h;
    });
    const double mse_sm = channel_estimate_mse(cfg, frames, [&](const std::vector<cdouble>& h) {
        return lmmse_estimate(lmmse, h);
    });
    CHECK(mse_sm < 0.5 * mse_ls);
}

TEST_CASE("model-based receiver at initialization equals the linear smoother") {
    const OfdmConfig cfg;
    const LmmseInit lmmse = default_lmmse(cfg);
    Rng rng(306);
    const ComnetParams p = init_comnet(lmmse, SdMode::relu, rng);
    const auto ensemble = ChannelEnsemble::exp_default();
    const auto rec = synthesize_frame(cfg, ensemble, NoiseSpec{25.0}, 307);
    const auto result = comnet_forward(p, rec.rx_pilot, rec.rx_data, cfg);
    const auto h_ls = ls_estimate(rec.rx_pilot, pilot_symbols(cfg));
    CHECK(max_abs_diff(result.h_hat, lmmse_estimate(lmmse, h_ls)) < 1e-10);
    CHECK(max_abs_diff(result.zf, zf_detect(rec.rx_data, result.h_hat)) < 1e-12);
    CHECK(result.soft.size() == 128);
    CHECK(result.bits.size() == 128);
}

TEST_CASE("hard-decision short path bypasses the detection subnets") {
    const OfdmConfig cfg;
    const LmmseInit lmmse = default_lmmse(cfg);
    Rng rng(308);
    ComnetParams p = init_comnet(lmmse, SdMode::relu, rng);
    p.qam_short_path = true;
    const auto rec = synthesize_frame(cfg, ChannelEnsemble::exp_default(), NoiseSpec{25.0}, 309);
    const auto result = comnet_forward(p, rec.rx_pilot, rec.rx_data, cfg);
    CHECK(result.bits == demap_symbols(result.zf));
}

TEST_CASE("switching receiver at alpha zero equals the single-stage receiver") {
    const OfdmConfig cfg;
    const LmmseInit lmmse = default_lmmse(cfg);
    Rng rng(310);
    const ComnetParams cp = init_comnet(lmmse, SdMode::relu, rng);

    SwitchNetParams sp;
    sp.ce.W1 = cp.ce[0].W;
    sp.ce.B1 = cp.ce[0].b;
    sp.ce.W2 = Eigen::MatrixXd::Random(128, 128);
    sp.ce.B2 = Eigen::VectorXd::Random(128);
    sp.ce.alpha = 0.0;
    sp.sd = cp.sd;
    sp.sd_mode = cp.sd_mode;

    const auto rec = synthesize_frame(cfg, ChannelEnsemble::exp_default(), NoiseSpec{25.0}, 311);
    const auto a = comnet_forward(cp, rec.rx_pilot, rec.rx_data, cfg);
    const auto b = switchnet_forward(sp, rec.rx_pilot, rec.rx_data, cfg);
    CHECK(max_abs_diff(a.h_hat, b.h_hat) < 1e-12);
    CHECK(max_abs_diff(a.zf, b.zf) < 1e-12);
    for (std::size_t i = 0; i < a.soft.size(); ++i)
        CHECK(std::abs(a.soft[i] - b.soft[i]) < 1e-12);
    CHECK(a.bits == b.bits);

    // at alpha one the second stage engages
    SwitchNetParams engaged = sp;
    engaged.ce.alpha = 1.0;
    const Eigen::VectorXd h_ls_real =
        Eigen::Map<const Eigen::VectorXd>(to_real_vector(ls_estimate(rec.rx_pilot, pilot_symbols(cfg))).data(), 128);
    const Eigen::VectorXd u = sp.ce.W1 * h_ls_real + sp.ce.B1;
    const Eigen::VectorXd want = u + (sp.ce.W2 * u + sp.ce.B2);
    const Eigen::VectorXd got = switchnet_ce_forward(engaged.ce, h_ls_real);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense receiver produces one soft bit per payload bit") {
    Rng rng(312);
    const FcdnnParams p = init_fcdnn(rng);
    const auto rec = synthesize_frame(OfdmConfig{}, ChannelEnsemble::exp_default(),
                                      NoiseSpec{25.0}, 313);
    const auto soft = fcdnn_soft(p, rec.rx_pilot, rec.rx_data);
    REQUIRE(soft.size() == 128);
    for (const double s : soft) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
    CHECK(fcdnn_receive(p, rec.rx_pilot, rec.rx_data) == hard_decisions(soft));
}

TEST_CASE("hard decisions split at one half with ties up") {
    const std::vector<double> soft{0.0, 0.4999, 0.5, 0.5001, 1.0};
    CHECK(hard_decisions(soft) == std::vector<std::uint8_t>{0, 0, 1, 1, 1});
}

TEST_CASE("non-finite soft outputs are reported as training failures") {
    Rng rng(314);
    FcdnnParams p = init_fcdnn(rng);
    p.subnets[0][0].W(0, 0) = std::numeric_limits<double>::quiet_NaN();
    const auto rec = synthesize_frame(OfdmConfig{}, ChannelEnsemble::exp_default(),
                                      NoiseSpec{25.0}, 315);
    CHECK_THROWS_AS(fcdnn_receive(p, rec.rx_pilot, rec.rx_data), TrainingError);
}

TEST_CASE("architecture shapes match the published layout") {
    const auto fc = fcdnn_subnet_specs();
    REQUIRE(fc.size() == 4);
    CHECK(fc[0].in_dim == 256);
    CHECK(fc[0].out_dim == 500);
    CHECK(fc[1].out_dim == 250);
    CHECK(fc[2].out_dim == 120);
    CHECK(fc[3].out_dim == 16);
    CHECK(fc[3].act == nn::Activation::sigmoid);

    const auto ce = comnet_ce_specs();
    REQUIRE(ce.size() == 1);
    CHECK(ce[0].in_dim == 128);
    CHECK(ce[0].out_dim == 128);
    CHECK(ce[0].act == nn::Activation::none);

    const auto sd = comnet_sd_subnet_specs(SdMode::relu);
    REQUIRE(sd.size() == 2);
    CHECK(sd[0].out_dim == 120);
    CHECK(sd[0].act == nn::Activation::relu);
    CHECK(comnet_sd_subnet_specs(SdMode::linear)[0].act == nn::Activation::none);

    CHECK(switchnet_ce_specs().size() == 2);
}

TEST_CASE("receiver checkpoints round-trip exactly") {
    const OfdmConfig cfg;
    const LmmseInit lmmse = default_lmmse(cfg);
    Rng rng(316);

    SUBCASE("dense receiver") {
        const FcdnnParams p = init_fcdnn(rng);
        const auto path = temp_file("airx_fcdnn_ckpt.airx");
        save_fcdnn(path.string(), p);
        const FcdnnParams back = load_fcdnn(path.string());
        for (int j = 0; j < kNumSubnets; ++j)
            for (std::size_t l = 0; l < p.subnets[j].size(); ++l) {
                CHECK(back.subnets[j][l].W == p.subnets[j][l].W);
                CHECK(back.subnets[j][l].b == p.subnets[j][l].b);
            }
        std::filesystem::remove(path);
    }
    SUBCASE("model-based receiver keeps its detection mode") {
        for (const SdMode mode : {SdMode::relu, SdMode::linear}) {
            const ComnetParams p = init_comnet(lmmse, mode, rng);
            const auto path = temp_file("airx_comnet_ckpt.airx");
            save_comnet(path.string(), p);
            const ComnetParams back = load_comnet(path.string());
            CHECK(back.sd_mode == mode);
            CHECK(back.ce[0].W == p.ce[0].W);
            for (int j = 0; j < kNumSubnets; ++j)
                for (std::size_t l = 0; l < p.sd[j].size(); ++l)
                    CHECK(back.sd[j][l].W == p.sd[j][l].W);
            std::filesystem::remove(path);
        }
    }
    SUBCASE("switching receiver keeps alpha") {
        SwitchNetParams p;
        p.ce.W1 = Eigen::MatrixXd::Random(128, 128);
        p.ce.B1 = Eigen::VectorXd::Random(128);
        p.ce.W2 = Eigen::MatrixXd::Random(128, 128);
        p.ce.B2 = Eigen::VectorXd::Random(128);
        p.ce.alpha = 0.73;
        for (auto& net : p.sd) net = nn::init_network(comnet_sd_subnet_specs(SdMode::relu), rng);
        const auto path = temp_file("airx_switchnet_ckpt.airx");
        save_switchnet(path.string(), p);
        const SwitchNetParams back = load_switchnet(path.string());
        CHECK(back.ce.alpha == 0.73);
        CHECK(back.ce.W1 == p.ce.W1);
        CHECK(back.ce.W2 == p.ce.W2);
        CHECK(back.ce.B2 == p.ce.B2);
        std::filesystem::remove(path);
    }
    SUBCASE("layer count mismatches are format errors") {
        const ComnetParams p = init_comnet(lmmse, SdMode::relu, rng);
        const auto path = temp_file("airx_wrong_kind.airx");
        save_comnet(path.string(), p);
        CHECK_THROWS_AS(load_fcdnn(path.string()), FormatError);
        std::filesystem::remove(path);
    }
}

} // TEST_SUITE
