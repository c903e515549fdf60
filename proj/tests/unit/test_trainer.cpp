#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include <doctest.h>

#include "airx/trainer.hpp"

using namespace airx;

namespace {

LmmseInit default_lmmse(const OfdmConfig& cfg) {
    return build_lmmse(TheoreticalChannelSpec{0.5, 0.0}, cfg, 25.0);
}

std::vector<LabeledRecord> sample_frames(const OfdmConfig& cfg, const ChannelEnsemble& ensemble,
                                         double snr_db, int count, std::uint64_t seed) {
    std::vector<LabeledRecord> frames;
    frames.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        frames.push_back(synthesize_frame(cfg, ensemble, NoiseSpec{snr_db},
                                          mix_seed(seed, static_cast<std::uint64_t>(i))));
    return frames;
}

/// Mean squared soft-bit error of the switching receiver over a batch,
/// matching the online training objective.
double switchnet_batch_loss(const SwitchNetParams& p, const std::vector<LabeledRecord>& recs,
                            const OfdmConfig& cfg) {
    double sq = 0.0;
    long n = 0;
    for (const auto& rec : recs) {
        const auto soft = switchnet_forward(p, rec.rx_pilot, rec.rx_data, cfg).soft;
        for (std::size_t i = 0; i < soft.size(); ++i) {
            const double d = soft[i] - static_cast<double>(rec.bits[i]);
            sq += d * d;
            ++n;
        }
    }
    return sq / static_cast<double>(n);
}

double comnet_batch_loss(const ComnetParams& p, const std::vector<LabeledRecord>& recs,
                         const OfdmConfig& cfg) {
    double sq = 0.0;
    long n = 0;
    for (const auto& rec : recs) {
        const auto soft = comnet_forward(p, rec.rx_pilot, rec.rx_data, cfg).soft;
        for (std::size_t i = 0; i < soft.size(); ++i) {
            const double d = soft[i] - static_cast<double>(rec.bits[i]);
            sq += d * d;
            ++n;
        }
    }
    return sq / static_cast<double>(n);
}

SwitchNetParams random_switchnet(const OfdmConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    SwitchNetParams p;
    p.ce.W1 = default_lmmse(cfg).weight_real;
    p.ce.B1 = Eigen::VectorXd::Zero(128);
    const auto l2 = nn::init_layer({128, 128, nn::Activation::none}, rng);
    p.ce.W2 = l2.W;
    p.ce.B2 = Eigen::VectorXd::Zero(128);
    for (int i = 0; i < 128; ++i) p.ce.B2(i) = rng.uniform(-0.01, 0.01);
    p.ce.alpha = 0.2;
    for (auto& net : p.sd) net = nn::init_network(comnet_sd_subnet_specs(SdMode::relu), rng);
    p.sd_mode = SdMode::relu;
    return p;
}

TrainingConfig tiny_schedule() {
    TrainingConfig tc;
    tc.epochs = 3;
    tc.frames_per_epoch = 20;
    tc.batch_frames = 10;
    tc.snr_db = 25.0;
    tc.seed = 5;
    return tc;
}

} // namespace

TEST_SUITE("trainer") {

TEST_CASE("synthesized frames obey the per-bin channel model") {
    const OfdmConfig cfg;
    const auto rec = synthesize_frame(cfg, ChannelEnsemble::exp_default(),
                                      NoiseSpec::noiseless(), 501);
    REQUIRE(static_cast<int>(rec.rx_pilot.size()) == cfg.active_count);
    REQUIRE(static_cast<int>(rec.rx_data.size()) == cfg.active_count);
    REQUIRE(static_cast<int>(rec.bits.size()) == cfg.bits_per_frame());
    const auto h = record_channel_label(rec, cfg);
    const auto pilots = pilot_symbols(cfg);
    const auto data = map_bits(rec.bits);
    for (std::size_t k = 0; k < h.size(); ++k) {
        CHECK(std::abs(rec.rx_pilot[k] - h[k] * pilots[k]) < 1e-9);
        CHECK(std::abs(rec.rx_data[k] - h[k] * data[k]) < 1e-9);
    }
}

TEST_CASE("frame synthesis replays from its seed") {
    const OfdmConfig cfg;
    const auto ens = ChannelEnsemble::exp_default();
    const auto a = synthesize_frame(cfg, ens, NoiseSpec{25.0}, 502);
    const auto b = synthesize_frame(cfg, ens, NoiseSpec{25.0}, 502);
    CHECK(a.rx_pilot == b.rx_pilot);
    CHECK(a.rx_data == b.rx_data);
    CHECK(a.bits == b.bits);
    CHECK(a.taps == b.taps);
    const auto c = synthesize_frame(cfg, ens, NoiseSpec{25.0}, 503);
    CHECK(a.rx_data != c.rx_data);

    const FrameSource src{cfg, ens, NoiseSpec{25.0}, 99};
    CHECK(src.make(3, 7).rx_data == src.make(3, 7).rx_data);
    CHECK(src.make(3, 7).rx_data != src.make(3, 8).rx_data);
    CHECK(src.make(3, 7).rx_data != src.make(4, 7).rx_data);
}

TEST_CASE("record streams deliver in order and then end") {
    const OfdmConfig cfg;
    auto frames = sample_frames(cfg, ChannelEnsemble::exp_default(), 25.0, 3, 504);
    const auto first_bits = frames[0].bits;
    auto stream = stream_from_records(std::move(frames));
    auto r0 = stream();
    REQUIRE(r0.has_value());
    CHECK(r0->bits == first_bits);
    CHECK(stream().has_value());
    CHECK(stream().has_value());
    CHECK_FALSE(stream().has_value());
    CHECK_FALSE(stream().has_value());
}

TEST_CASE("estimator and receiver scoring helpers") {
    const OfdmConfig cfg;
    const auto frames = sample_frames(cfg, ChannelEnsemble::exp_default(),
                                      std::numeric_limits<double>::infinity(), 10, 505);
    // noiseless least squares recovers the channel exactly
    const double mse = channel_estimate_mse(cfg, frames, [](const std::vector<cdouble>& h) {
        return h;
    });
    CHECK(mse < 1e-18);

    const double ber_ideal = record_set_ber(frames, [](const LabeledRecord& r) {
        return r.bits;
    });
    CHECK(ber_ideal == 0.0);
    const double ber_flipped = record_set_ber(frames, [](const LabeledRecord& r) {
        std::vector<std::uint8_t> wrong(r.bits.size());
        for (std::size_t i = 0; i < r.bits.size(); ++i) wrong[i] = 1 - r.bits[i];
        return wrong;
    });
    CHECK(ber_flipped == 1.0);
}

TEST_CASE("dense receiver training is deterministic") {
    const OfdmConfig cfg;
    const TrainingConfig tc = tiny_schedule();
    const FrameSource src{cfg, ChannelEnsemble::exp_default(), NoiseSpec{tc.snr_db}, 55};
    TrainTrace ta;
    const FcdnnParams a = train_fcdnn(cfg, tc, src, &ta);
    TrainTrace tb;
    const FcdnnParams b = train_fcdnn(cfg, tc, src, &tb);
    CHECK(ta.loss == tb.loss);
    CHECK(a.subnets[0][0].W == b.subnets[0][0].W);
    CHECK(a.subnets[7][3].b == b.subnets[7][3].b);
    REQUIRE(ta.loss.size() == 3);
}

TEST_CASE("dense receiver training reduces the loss") {
    const OfdmConfig cfg;
    TrainingConfig tc = tiny_schedule();
    tc.epochs = 10;
    tc.frames_per_epoch = 200;
    tc.batch_frames = 20;
    tc.lr = 0.003;
    const FrameSource src{cfg, ChannelEnsemble::exp_default(), NoiseSpec{tc.snr_db}, 55};
    TrainTrace tr;
    train_fcdnn(cfg, tc, src, &tr);
    REQUIRE(tr.loss.size() == 10);
    CHECK(tr.loss.front() - tr.loss.back() > 1e-3);
}

TEST_CASE("model-based training drives the refinement stage") {
    const OfdmConfig cfg;
    const TrainingConfig tc = tiny_schedule();
    const FrameSource src{cfg, ChannelEnsemble::exp_default(), NoiseSpec{tc.snr_db}, 56};
    const LmmseInit lmmse = default_lmmse(cfg);
    TrainTrace ce_trace;
    TrainTrace sd_trace;
    const ComnetParams p = train_comnet(cfg, tc, src, lmmse, SdMode::relu, &ce_trace, &sd_trace);
    REQUIRE(ce_trace.loss.size() == 3);
    REQUIRE(sd_trace.loss.size() == 3);
    CHECK(p.ce[0].trainable);
    CHECK(p.ce[0].W != lmmse.weight_real);
    CHECK(p.sd_mode == SdMode::relu);
    for (const double l : ce_trace.loss) CHECK(std::isfinite(l));
}

TEST_CASE("three-stage training produces both refinement stages") {
    const OfdmConfig cfg;
    const TrainingConfig tc = tiny_schedule();
    const FrameSource short_src{cfg, ChannelEnsemble::exp_default(), NoiseSpec{tc.snr_db}, 57};
    const FrameSource long_src{cfg, ChannelEnsemble::sui5_default(), NoiseSpec{tc.snr_db}, 58};
    TrainTrace t1, t2, t3;
    const SwitchNetParams p = train_switchnet_offline(cfg, tc, short_src, long_src,
                                                      default_lmmse(cfg), SdMode::relu,
                                                      &t1, &t2, &t3);
    CHECK(t1.loss.size() == 3);
    CHECK(t2.loss.size() == 3);
    CHECK(t3.loss.size() == 3);
    CHECK(p.ce.alpha == 0.0);
    CHECK(p.ce.W1.rows() == 128);
    CHECK(p.ce.W2.cwiseAbs().sum() > 0.0);
}

TEST_CASE("online alpha adaptation touches only alpha") {
    const OfdmConfig cfg;
    SwitchNetParams p = random_switchnet(cfg, 506);
    const SwitchNetParams before = p;
    OnlineConfig oc;
    oc.symbols_per_epoch = 10;
    oc.batch_symbols = 5;
    oc.epochs_per_group = 2;
    auto frames = sample_frames(cfg, ChannelEnsemble::sui5_default(), 25.0, 30, 507);
    const AlphaTrace trace = online_train_alpha(p, stream_from_records(std::move(frames)), oc,
                                                cfg, 508);
    // 3 full groups, 2 epochs each
    REQUIRE(trace.alpha.size() == 6);
    CHECK(p.ce.alpha != before.ce.alpha);
    CHECK(trace.alpha.back() == p.ce.alpha);
    CHECK(p.ce.W1 == before.ce.W1);
    CHECK(p.ce.B1 == before.ce.B1);
    CHECK(p.ce.W2 == before.ce.W2);
    CHECK(p.ce.B2 == before.ce.B2);
    for (int j = 0; j < kNumSubnets; ++j)
        for (std::size_t l = 0; l < p.sd[j].size(); ++l) {
            CHECK(p.sd[j][l].W == before.sd[j][l].W);
            CHECK(p.sd[j][l].b == before.sd[j][l].b);
        }
}

TEST_CASE("first alpha step follows the finite-difference gradient") {
    const OfdmConfig cfg;
    const SwitchNetParams p = random_switchnet(cfg, 509);
    const double alpha0 = p.ce.alpha;
    OnlineConfig oc;
    oc.symbols_per_epoch = 10;
    oc.batch_symbols = 10;
    oc.epochs_per_group = 1;
    oc.alpha_lr = 1e-3;
    const auto frames = sample_frames(cfg, ChannelEnsemble::sui5_default(), 25.0, 10, 510);

    const double h = 1e-5;
    SwitchNetParams up = p;
    up.ce.alpha = alpha0 + h;
    SwitchNetParams down = p;
    down.ce.alpha = alpha0 - h;
    const double fd = (switchnet_batch_loss(up, frames, cfg) -
                       switchnet_batch_loss(down, frames, cfg)) / (2.0 * h);
    REQUIRE(std::abs(fd) > 1e-6);

    SwitchNetParams trained = p;
    online_train_alpha(trained, stream_from_records(frames), oc, cfg, 511);
    // the first bias-corrected step moves by the learning rate against the
    // gradient sign
    const double step = trained.ce.alpha - alpha0;
    CHECK(step == doctest::Approx(-oc.alpha_lr * (fd > 0 ? 1.0 : -1.0)).epsilon(1e-4));
}

TEST_CASE("first transfer step follows the finite-difference gradient") {
    const OfdmConfig cfg;
    const LmmseInit lmmse = default_lmmse(cfg);
    Rng rng(512);
    const ComnetParams p = init_comnet(lmmse, SdMode::relu, rng);
    OnlineConfig oc;
    oc.symbols_per_epoch = 10;
    oc.batch_symbols = 10;
    oc.epochs_per_group = 1;
    oc.transfer_lr = 1e-3;
    const auto frames = sample_frames(cfg, ChannelEnsemble::sui5_default(), 25.0, 10, 513);

    const double h = 1e-5;
    for (const auto [row, col] : {std::pair<int, int>{0, 0}, {17, 45}, {100, 3}}) {
        ComnetParams probe = p;
        probe.ce[0].W(row, col) = p.ce[0].W(row, col) + h;
        const double up = comnet_batch_loss(probe, frames, cfg);
        probe.ce[0].W(row, col) = p.ce[0].W(row, col) - h;
        const double down = comnet_batch_loss(probe, frames, cfg);
        const double fd = (up - down) / (2.0 * h);
        if (std::abs(fd) < 1e-6) continue; // sign unstable, skip this entry

        ComnetParams trained = p;
        online_transfer_comnet(trained, stream_from_records(frames), oc, cfg, {}, 514);
        const double step = trained.ce[0].W(row, col) - p.ce[0].W(row, col);
        CHECK(step == doctest::Approx(-oc.transfer_lr * (fd > 0 ? 1.0 : -1.0)).epsilon(1e-4));
    }
}

TEST_CASE("transfer learning records the held-out error rate") {
    const OfdmConfig cfg;
    const LmmseInit lmmse = default_lmmse(cfg);
    Rng rng(515);
    ComnetParams p = init_comnet(lmmse, SdMode::relu, rng);
    OnlineConfig oc;
    oc.symbols_per_epoch = 10;
    oc.batch_symbols = 5;
    oc.epochs_per_group = 2;
    oc.transfer_lr = 1e-9; // vanishingly small updates must not hurt
    const auto test_frames = sample_frames(cfg, ChannelEnsemble::exp_default(), 25.0, 20, 516);
    auto frames = sample_frames(cfg, ChannelEnsemble::exp_default(), 25.0, 20, 517);
    const TransferTrace trace = online_transfer_comnet(p, stream_from_records(std::move(frames)),
                                                       oc, cfg, test_frames, 518);
    REQUIRE(trace.ber.size() == 4);
    for (const double b : trace.ber)
        CHECK(b == doctest::Approx(trace.ber_before).epsilon(0.05));
}

TEST_CASE("invalid schedules are rejected") {
    const OfdmConfig cfg;
    const FrameSource src{cfg, ChannelEnsemble::exp_default(), NoiseSpec{25.0}, 59};
    TrainingConfig tc = tiny_schedule();
    tc.epochs = 0;
    CHECK_THROWS_AS(train_fcdnn(cfg, tc, src, nullptr), std::invalid_argument);
    tc = tiny_schedule();
    tc.batch_frames = 50;
    CHECK_THROWS_AS(train_fcdnn(cfg, tc, src, nullptr), std::invalid_argument);
    tc = tiny_schedule();
    tc.lr = 0.0;
    CHECK_THROWS_AS(train_fcdnn(cfg, tc, src, nullptr), std::invalid_argument);

    SwitchNetParams p = random_switchnet(cfg, 519);
    OnlineConfig oc;
    oc.batch_symbols = 100;
    auto frames = sample_frames(cfg, ChannelEnsemble::exp_default(), 25.0, 5, 520);
    CHECK_THROWS_AS(online_train_alpha(p, stream_from_records(std::move(frames)), oc, cfg, 521),
                    std::invalid_argument);
}

} // TEST_SUITE
