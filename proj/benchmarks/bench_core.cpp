// Microbenchmarks for the hot paths: OFDM round trip, channel synthesis,
// smoother construction and the per-frame cost of each receiver.

#include <benchmark/benchmark.h>

#include "airx/experiment.hpp"

using namespace airx;

namespace {

struct Fixture {
    OfdmConfig cfg;
    LmmseInit lmmse = build_lmmse(TheoreticalChannelSpec{}, cfg, 25.0);
    LabeledRecord frame =
        synthesize_frame(cfg, ChannelEnsemble::exp_default(), NoiseSpec{25.0}, 42);
    FcdnnParams fcdnn;
    ComnetParams comnet;
    SwitchNetParams switchnet;

    Fixture() {
        Rng rng(7);
        fcdnn = init_fcdnn(rng);
        comnet = init_comnet(lmmse, SdMode::relu, rng);
        switchnet.ce.W1 = lmmse.weight_real;
        switchnet.ce.B1 = Eigen::VectorXd::Zero(128);
        switchnet.ce.W2 = Eigen::MatrixXd::Zero(128, 128);
        switchnet.ce.B2 = Eigen::VectorXd::Zero(128);
        switchnet.ce.alpha = 0.5;
        switchnet.sd = comnet.sd;
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void bm_ofdm_roundtrip(benchmark::State& state) {
    const auto& f = fixture();
    Rng rng(1);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(2 * f.cfg.active_count));
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.integer(2));
    for (auto _ : state) {
        const auto symbols = map_bits(bits);
        const auto time = ofdm_modulate(f.cfg, symbols);
        const auto back = ofdm_demodulate(f.cfg, time);
        benchmark::DoNotOptimize(back);
    }
}

void bm_synthesize_frame(benchmark::State& state) {
    const auto& f = fixture();
    const auto ens = ChannelEnsemble::exp_default();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        const auto rec = synthesize_frame(f.cfg, ens, NoiseSpec{25.0}, seed++);
        benchmark::DoNotOptimize(rec);
    }
}

void bm_build_lmmse(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        const auto lm = build_lmmse(TheoreticalChannelSpec{}, f.cfg, 25.0);
        benchmark::DoNotOptimize(lm);
    }
}

void bm_lmmse_baseline(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        const auto bits =
            lmmse_mmse_baseline(f.frame.rx_pilot, f.frame.rx_data, f.cfg, f.lmmse, NoiseSpec{25.0});
        benchmark::DoNotOptimize(bits);
    }
}

void bm_ls_zf(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        const auto bits = ls_zf_receive(f.frame.rx_pilot, f.frame.rx_data, f.cfg);
        benchmark::DoNotOptimize(bits);
    }
}

void bm_fcdnn_forward(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        const auto bits = fcdnn_receive(f.fcdnn, f.frame.rx_pilot, f.frame.rx_data);
        benchmark::DoNotOptimize(bits);
    }
}

void bm_comnet_forward(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        const auto bits = comnet_receive(f.comnet, f.frame.rx_pilot, f.frame.rx_data, f.cfg);
        benchmark::DoNotOptimize(bits);
    }
}

void bm_switchnet_forward(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        const auto bits = switchnet_receive(f.switchnet, f.frame.rx_pilot, f.frame.rx_data, f.cfg);
        benchmark::DoNotOptimize(bits);
    }
}

void bm_adam_step(benchmark::State& state) {
    Rng rng(11);
    nn::Network net = nn::init_network(comnet_ce_specs(), rng);
    nn::AdamState adam = nn::make_adam(net, 1e-3);
    std::vector<nn::LayerGrads> grads;
    for (const auto& layer : net)
        grads.push_back({Eigen::MatrixXd::Constant(layer.W.rows(), layer.W.cols(), 1e-3),
                         Eigen::VectorXd::Constant(layer.b.size(), 1e-3)});
    for (auto _ : state) {
        nn::adam_step(adam, net, grads);
        benchmark::DoNotOptimize(net);
    }
}

} // namespace

BENCHMARK(bm_ofdm_roundtrip);
BENCHMARK(bm_synthesize_frame);
BENCHMARK(bm_build_lmmse);
BENCHMARK(bm_lmmse_baseline);
BENCHMARK(bm_ls_zf);
BENCHMARK(bm_fcdnn_forward);
BENCHMARK(bm_comnet_forward);
BENCHMARK(bm_switchnet_forward);
BENCHMARK(bm_adam_step);

BENCHMARK_MAIN();
