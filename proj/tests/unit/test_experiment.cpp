#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "airx/experiment.hpp"

using namespace airx;

namespace {

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("airx_exp_test_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

ReceiverFn classical() {
    return [](const LabeledRecord& rec, double) {
        OfdmConfig cfg;
        return ls_zf_receive(rec.rx_pilot, rec.rx_data, cfg);
    };
}

} // namespace

TEST_SUITE("experiment") {

TEST_CASE("receiver names round-trip") {
    for (const auto kind : {ReceiverKind::ls_zf, ReceiverKind::lmmse, ReceiverKind::zf_perfect,
                            ReceiverKind::fcdnn, ReceiverKind::comnet,
                            ReceiverKind::comnet_linear_sd, ReceiverKind::switchnet})
        CHECK(receiver_from_name(receiver_name(kind)) == kind);
    CHECK_THROWS_AS(receiver_from_name("nonsense"), std::invalid_argument);
}

TEST_CASE("sweeps replay bit for bit and across thread counts") {
    const OfdmConfig cfg;
    SweepConfig sweep;
    sweep.snr_db = {10.0, 20.0};
    sweep.min_bits = 12800; // 100 frames per point
    const auto a = run_ber_sweep(cfg, ChannelEnsemble::exp_default(), sweep, classical(),
                                 "probe", 21, "h");
    const auto b = run_ber_sweep(cfg, ChannelEnsemble::exp_default(), sweep, classical(),
                                 "probe", 21, "h");
    REQUIRE(a.points.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.points[i].errors == b.points[i].errors);
        CHECK(a.points[i].bits == b.points[i].bits);
    }

    sweep.threads = 2;
    const auto c = run_ber_sweep(cfg, ChannelEnsemble::exp_default(), sweep, classical(),
                                 "probe", 21, "h");
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.points[i].errors == c.points[i].errors);
        CHECK(a.points[i].bits == c.points[i].bits);
        CHECK(a.points[i].frames == c.points[i].frames);
    }

    const auto d = run_ber_sweep(cfg, ChannelEnsemble::exp_default(), sweep, classical(),
                                 "probe", 22, "h");
    CHECK(a.points[0].errors != d.points[0].errors);
}

TEST_CASE("frame budget follows the stopping rule") {
    const OfdmConfig cfg;
    SweepConfig sweep;
    sweep.snr_db = {15.0};
    sweep.min_bits = 12801; // needs 101 frames of 128 bits
    const auto r = run_ber_sweep(cfg, ChannelEnsemble::exp_default(), sweep, classical(),
                                 "probe", 23, "");
    CHECK(r.points[0].frames == 101);
    CHECK(r.points[0].bits == 101 * 128);

    sweep.max_frames = 7;
    const auto capped = run_ber_sweep(cfg, ChannelEnsemble::exp_default(), sweep, classical(),
                                      "probe", 23, "");
    CHECK(capped.points[0].frames == 7);
}

TEST_CASE("perfect channel knowledge decodes noiseless frames exactly") {
    const OfdmConfig cfg;
    SweepConfig sweep;
    sweep.snr_db = {40.0};
    sweep.min_bits = 6400;
    sweep.noiseless = true;
    const ReceiverFn perfect = [&cfg](const LabeledRecord& rec, double) {
        const auto h = record_channel_label(rec, cfg);
        return hard_decisions([&] {
            const auto eq = zf_detect(rec.rx_data, h);
            std::vector<double> soft;
            soft.reserve(eq.size() * 2);
            for (const auto& s : eq) {
                soft.push_back(s.real() > 0 ? 0.0 : 1.0);
                soft.push_back(s.imag() > 0 ? 0.0 : 1.0);
            }
            return soft;
        }());
    };
    const auto r = run_ber_sweep(cfg, ChannelEnsemble::sui5_default(), sweep, perfect, "zf", 24, "");
    CHECK(r.points[0].errors == 0);
    CHECK(r.points[0].ber == 0.0);
}

TEST_CASE("ber csv carries metadata and all rows") {
    TempDir tmp;
    BerReport rep;
    rep.receiver = "probe";
    rep.seed = 77;
    rep.config_hash = "deadbeef";
    rep.points.push_back({10.0, 128000, 512, 0.004, 1000, 1.25});
    rep.points.push_back({20.0, 128000, 3, 3.0 / 128000.0, 1000, 1.5});
    const auto path = tmp.path / "ber.csv";
    write_ber_csv(path.string(), rep);
    const std::string text = read_all(path);
    CHECK(text.find("# receiver=probe") != std::string::npos);
    CHECK(text.find("# seed=77") != std::string::npos);
    CHECK(text.find("# config=deadbeef") != std::string::npos);
    CHECK(text.find("snr_db,bits,errors,ber,frames,seconds") != std::string::npos);
    CHECK(text.find("10,128000,512,4.000000e-03,1000,1.250") != std::string::npos);
    CHECK(text.find("20,128000,3,2.343750e-05,1000,1.500") != std::string::npos);
}

TEST_CASE("trace csv writes one row per epoch") {
    TempDir tmp;
    const auto path = tmp.path / "trace.csv";
    write_trace_csv(path.string(), "alpha", {0.25, 0.5, 1.0}, 0);
    const std::string text = read_all(path);
    CHECK(text.find("epoch,alpha") != std::string::npos);
    CHECK(text.find("0,0.25") != std::string::npos);
    CHECK(text.find("1,0.5") != std::string::npos);
    CHECK(text.find("2,1") != std::string::npos);
}

TEST_CASE("complexity table reports the exact architecture budgets") {
    const auto rows = complexity_report();
    REQUIRE(rows.size() == 3);
    long fcdnn_params = 0, comnet_params = 0, switchnet_params = 0;
    long fcdnn_flops = 0, comnet_flops = 0, switchnet_flops = 0;
    for (const auto& row : rows) {
        if (row.receiver == "fcdnn") { fcdnn_params = row.params; fcdnn_flops = row.flops; }
        if (row.receiver == "comnet") { comnet_params = row.params; comnet_flops = row.flops; }
        if (row.receiver == "switchnet") { switchnet_params = row.params; switchnet_flops = row.flops; }
    }
    CHECK(fcdnn_params == 2286448);
    CHECK(fcdnn_flops == 4558720);
    CHECK(comnet_params == 155840);
    CHECK(comnet_flops == 309248);
    CHECK(switchnet_params == 172352);
    CHECK(switchnet_flops == 342016);
    // the switching variant adds exactly one more 128x128 refinement stage
    CHECK(switchnet_params - comnet_params == 128 * 128 + 128);

    TempDir tmp;
    const auto path = tmp.path / "complexity.csv";
    write_complexity_csv(path.string(), rows);
    const std::string text = read_all(path);
    CHECK(text.find("receiver,params,flops") != std::string::npos);
    CHECK(text.find("fcdnn,2286448,4558720") != std::string::npos);
}

TEST_CASE("alpha switch harness marks the change point and settles") {
    const OfdmConfig cfg;
    Rng rng(90);
    SwitchNetParams p;
    const auto lmmse = build_lmmse(TheoreticalChannelSpec{0.5, 0.0}, cfg, 25.0);
    p.ce.W1 = lmmse.weight_real;
    p.ce.B1 = Eigen::VectorXd::Zero(128);
    p.ce.W2 = nn::init_layer({128, 128, nn::Activation::none}, rng).W;
    p.ce.B2 = Eigen::VectorXd::Zero(128);
    for (auto& net : p.sd) net = nn::init_network(comnet_sd_subnet_specs(SdMode::relu), rng);
    p.sd_mode = SdMode::relu;

    OnlineConfig oc;
    oc.symbols_per_epoch = 10;
    oc.batch_symbols = 10;
    oc.epochs_per_group = 2;
    const SwitchRun run = run_alpha_switch(p, cfg, ChannelEnsemble::exp_default(),
                                           ChannelEnsemble::sui5_default(), oc,
                                           2, 6, 0.0, 91, "probe");
    CHECK(run.label == "probe");
    CHECK(run.switch_epoch == 4); // 2 warmup groups x 2 epochs
    REQUIRE(run.alpha.size() == 12);
    // trailing mean over the post-switch window
    double mean = 0.0;
    for (std::size_t i = 4; i < 12; ++i) mean += run.alpha[i];
    mean /= 8.0;
    CHECK(run.settled_alpha == doctest::Approx(mean).epsilon(1e-12));

    const SwitchRun again = run_alpha_switch(p, cfg, ChannelEnsemble::exp_default(),
                                             ChannelEnsemble::sui5_default(), oc,
                                             2, 6, 0.0, 91, "probe");
    CHECK(run.alpha == again.alpha);
}

} // TEST_SUITE
