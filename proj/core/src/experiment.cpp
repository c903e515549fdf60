#include "airx/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <thread>

#include "airx/errors.hpp"

namespace airx {

std::string receiver_name(ReceiverKind kind) {
    switch (kind) {
        case ReceiverKind::ls_zf: return "ls_zf";
        case ReceiverKind::lmmse: return "lmmse";
        case ReceiverKind::zf_perfect: return "zf_perfect";
        case ReceiverKind::fcdnn: return "fcdnn";
        case ReceiverKind::comnet: return "comnet";
        case ReceiverKind::comnet_linear_sd: return "comnet_linear_sd";
        case ReceiverKind::switchnet: return "switchnet";
    }
    throw std::invalid_argument("unknown receiver kind");
}

ReceiverKind receiver_from_name(const std::string& name) {
    if (name == "ls_zf") return ReceiverKind::ls_zf;
    if (name == "lmmse") return ReceiverKind::lmmse;
    if (name == "zf_perfect") return ReceiverKind::zf_perfect;
    if (name == "fcdnn") return ReceiverKind::fcdnn;
    if (name == "comnet") return ReceiverKind::comnet;
    if (name == "comnet_linear_sd") return ReceiverKind::comnet_linear_sd;
    if (name == "switchnet") return ReceiverKind::switchnet;
    throw std::invalid_argument("unknown receiver name: " + name);
}

namespace {

struct PointTally {
    long errors = 0;
    long bits = 0;
};

PointTally run_frames(const OfdmConfig& cfg, const ChannelEnsemble& ensemble,
                      const NoiseSpec& noise, const ReceiverFn& receive, std::uint64_t point_seed,
                      long first, long last) {
    PointTally tally;
    for (long f = first; f < last; ++f) {
        const LabeledRecord rec =
            synthesize_frame(cfg, ensemble, noise, mix_seed(point_seed, static_cast<std::uint64_t>(f)));
        const auto bits = receive(rec, noise.snr_db);
        if (bits.size() != rec.bits.size())
            throw std::invalid_argument("receiver output size mismatch");
        for (std::size_t i = 0; i < bits.size(); ++i)
            if (bits[i] != rec.bits[i]) ++tally.errors;
        tally.bits += static_cast<long>(bits.size());
    }
    return tally;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

} // namespace

BerReport run_ber_sweep(const OfdmConfig& cfg, const ChannelEnsemble& ensemble,
                        const SweepConfig& sweep, const ReceiverFn& receive,
                        const std::string& receiver_label, std::uint64_t seed,
                        const std::string& config_hash) {
    cfg.validate();
    if (sweep.snr_db.empty()) throw std::invalid_argument("sweep has no SNR points");
    if (sweep.min_bits < 1) throw std::invalid_argument("min_bits must be >= 1");
    if (sweep.max_frames < 1) throw std::invalid_argument("max_frames must be >= 1");
    if (sweep.threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (!receive) throw std::invalid_argument("no receiver given");

    const long bpf = cfg.bits_per_frame();
    const long frames_needed = std::min((sweep.min_bits + bpf - 1) / bpf, sweep.max_frames);

    BerReport report;
    report.receiver = receiver_label;
    report.seed = seed;
    report.config_hash = config_hash;
    report.points.reserve(sweep.snr_db.size());

    for (std::size_t pi = 0; pi < sweep.snr_db.size(); ++pi) {
        const NoiseSpec noise =
            sweep.noiseless ? NoiseSpec::noiseless() : NoiseSpec{sweep.snr_db[pi]};
        const std::uint64_t point_seed = mix_seed(seed, static_cast<std::uint64_t>(pi));
        const auto t0 = std::chrono::steady_clock::now();
        PointTally total;
        if (sweep.threads == 1) {
            total = run_frames(cfg, ensemble, noise, receive, point_seed, 0, frames_needed);
        } else {
            const int nt = sweep.threads;
            std::vector<PointTally> parts(static_cast<std::size_t>(nt));
            std::vector<std::thread> workers;
            workers.reserve(static_cast<std::size_t>(nt));
            for (int t = 0; t < nt; ++t) {
                const long first = frames_needed * t / nt;
                const long last = frames_needed * (t + 1) / nt;
                workers.emplace_back([&, t, first, last] {
                    parts[static_cast<std::size_t>(t)] =
                        run_frames(cfg, ensemble, noise, receive, point_seed, first, last);
                });
            }
            for (auto& w : workers) w.join();
            for (const auto& part : parts) {
                total.errors += part.errors;
                total.bits += part.bits;
            }
        }
        const auto t1 = std::chrono::steady_clock::now();
        BerPoint point;
        point.snr_db = sweep.snr_db[pi];
        point.bits = total.bits;
        point.errors = total.errors;
        point.ber = total.bits > 0 ? static_cast<double>(total.errors) / static_cast<double>(total.bits)
                                   : 0.0;
        point.frames = frames_needed;
        point.seconds = std::chrono::duration<double>(t1 - t0).count();
        report.points.push_back(point);
    }
    return report;
}

void write_ber_csv(const std::string& path, const BerReport& report) {
    auto out = open_out(path);
    out << "# receiver=" << report.receiver << "\n";
    out << "# seed=" << report.seed << "\n";
    if (!report.config_hash.empty()) out << "# config=" << report.config_hash << "\n";
    out << "snr_db,bits,errors,ber,frames,seconds\n";
    for (const auto& p : report.points) {
        out << p.snr_db << ',' << p.bits << ',' << p.errors << ','
            << std::scientific << std::setprecision(6) << p.ber << std::defaultfloat << ','
            << p.frames << ',' << std::fixed << std::setprecision(3) << p.seconds
            << std::defaultfloat << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_trace_csv(const std::string& path, const std::string& value_name,
                     const std::vector<double>& values, int first_epoch) {
    auto out = open_out(path);
    out << "epoch," << value_name << "\n";
    out << std::setprecision(12);
    for (std::size_t i = 0; i < values.size(); ++i)
        out << (first_epoch + static_cast<int>(i)) << ',' << values[i] << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ComplexityRow> complexity_report() {
    const auto fc = fcdnn_subnet_specs();
    const auto ce = comnet_ce_specs();
    const auto sd = comnet_sd_subnet_specs(SdMode::relu);
    const auto sw = switchnet_ce_specs();
    std::vector<ComplexityRow> rows;
    rows.push_back({"fcdnn", kNumSubnets * nn::param_count(fc), kNumSubnets * nn::flop_count(fc)});
    rows.push_back({"comnet", nn::param_count(ce) + kNumSubnets * nn::param_count(sd),
                    nn::flop_count(ce) + kNumSubnets * nn::flop_count(sd)});
    rows.push_back({"switchnet", nn::param_count(sw) + kNumSubnets * nn::param_count(sd),
                    nn::flop_count(sw) + kNumSubnets * nn::flop_count(sd)});
    return rows;
}

void write_complexity_csv(const std::string& path, const std::vector<ComplexityRow>& rows) {
    auto out = open_out(path);
    out << "receiver,params,flops\n";
    for (const auto& r : rows) out << r.receiver << ',' << r.params << ',' << r.flops << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

SwitchRun run_alpha_switch(SwitchNetParams params, const OfdmConfig& cfg,
                           const ChannelEnsemble& before, const ChannelEnsemble& after,
                           const OnlineConfig& oc, int warmup_groups, int total_groups,
                           double alpha_init, std::uint64_t seed, const std::string& label) {
    cfg.validate();
    if (warmup_groups < 0) throw std::invalid_argument("warmup_groups must be >= 0");
    if (total_groups <= warmup_groups)
        throw std::invalid_argument("total_groups must exceed warmup_groups");

    const NoiseSpec noise{oc.snr_db};
    std::vector<LabeledRecord> records;
    records.reserve(static_cast<std::size_t>(total_groups) *
                    static_cast<std::size_t>(oc.symbols_per_epoch));
    for (int g = 0; g < total_groups; ++g) {
        const ChannelEnsemble& ensemble = g < warmup_groups ? before : after;
        const std::uint64_t group_seed = mix_seed(seed, static_cast<std::uint64_t>(g));
        for (int i = 0; i < oc.symbols_per_epoch; ++i)
            records.push_back(synthesize_frame(cfg, ensemble, noise,
                                               mix_seed(group_seed, static_cast<std::uint64_t>(i))));
    }

    params.ce.alpha = alpha_init;
    SwitchRun run;
    run.label = label;
    run.switch_epoch = warmup_groups * oc.epochs_per_group;
    const AlphaTrace trace =
        online_train_alpha(params, stream_from_records(std::move(records)), oc, cfg, seed);
    run.alpha = trace.alpha;

    const int settle_window = 10;
    const int post = static_cast<int>(run.alpha.size()) - run.switch_epoch;
    const int window = std::min(settle_window, std::max(1, post));
    double sum = 0.0;
    for (int i = static_cast<int>(run.alpha.size()) - window; i < static_cast<int>(run.alpha.size()); ++i)
        sum += run.alpha[static_cast<std::size_t>(i)];
    run.settled_alpha = sum / window;
    return run;
}

} // namespace airx
