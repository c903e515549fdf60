#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "airx/config.hpp"
#include "airx/errors.hpp"

namespace fs = std::filesystem;
using namespace airx;

namespace {

void print_error(const char* type, const std::string& what) {
    const nlohmann::json j{{"type", type}, {"error", what}};
    std::cerr << j.dump() << "\n";
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return fs::path(cfg.out_dir) / name;
}

std::string checkpoint_path(const ExperimentConfig& cfg, const std::string& name) {
    const auto it = cfg.checkpoints.find(name);
    if (it != cfg.checkpoints.end()) return it->second;
    return out_path(cfg, name + ".airx").string();
}

ChannelTag tag_of(const ChannelEnsemble& ensemble) {
    switch (ensemble.kind) {
        case ChannelEnsemble::Kind::exp: return ChannelTag::exp;
        case ChannelEnsemble::Kind::sui5: return ChannelTag::sui5;
        case ChannelEnsemble::Kind::two_ray: return ChannelTag::two_ray;
    }
    return ChannelTag::exp;
}

const ChannelEnsemble& second_channel(const ExperimentConfig& cfg, const char* who) {
    if (!cfg.channel_b.has_value())
        throw ConfigError(std::string(who) + " needs a channel_b section");
    return *cfg.channel_b;
}

/// Receiver closure for the sweep. Learned receivers load their checkpoint
/// once and share it across frames.
ReceiverFn build_receiver(const ExperimentConfig& cfg, ReceiverKind kind, const LmmseInit& lmmse) {
    const OfdmConfig ofdm = cfg.ofdm;
    switch (kind) {
        case ReceiverKind::ls_zf:
            return [ofdm](const LabeledRecord& r, double) {
                return ls_zf_receive(r.rx_pilot, r.rx_data, ofdm);
            };
        case ReceiverKind::lmmse:
            return [ofdm, lmmse](const LabeledRecord& r, double snr_db) {
                return lmmse_mmse_baseline(r.rx_pilot, r.rx_data, ofdm, lmmse, NoiseSpec{snr_db});
            };
        case ReceiverKind::zf_perfect:
            return [ofdm](const LabeledRecord& r, double) {
                return demap_symbols(zf_detect(r.rx_data, record_channel_label(r, ofdm)));
            };
        case ReceiverKind::fcdnn: {
            auto p = std::make_shared<FcdnnParams>(load_fcdnn(checkpoint_path(cfg, "fcdnn")));
            return [p](const LabeledRecord& r, double) {
                return fcdnn_receive(*p, r.rx_pilot, r.rx_data);
            };
        }
        case ReceiverKind::comnet:
        case ReceiverKind::comnet_linear_sd: {
            auto p = std::make_shared<ComnetParams>(
                load_comnet(checkpoint_path(cfg, receiver_name(kind))));
            return [p, ofdm](const LabeledRecord& r, double) {
                return comnet_receive(*p, r.rx_pilot, r.rx_data, ofdm);
            };
        }
        case ReceiverKind::switchnet: {
            auto p = std::make_shared<SwitchNetParams>(
                load_switchnet(checkpoint_path(cfg, "switchnet")));
            return [p, ofdm](const LabeledRecord& r, double) {
                return switchnet_receive(*p, r.rx_pilot, r.rx_data, ofdm);
            };
        }
    }
    throw std::invalid_argument("unknown receiver kind");
}

std::vector<ReceiverKind> receivers_to_run(const ExperimentConfig& cfg) {
    if (!cfg.receivers.empty()) return cfg.receivers;
    return {cfg.receiver};
}

void print_report(const BerReport& report) {
    for (const auto& p : report.points)
        std::cout << report.receiver << "  snr=" << p.snr_db << " dB  ber=" << p.ber << "  ("
                  << p.errors << "/" << p.bits << " bits, " << p.seconds << " s)\n";
}

int cmd_gen_dataset(const ExperimentConfig& cfg) {
    const LabeledDataset ds =
        generate_dataset(cfg.ofdm, cfg.channel, NoiseSpec{cfg.dataset_snr_db},
                         static_cast<std::size_t>(cfg.dataset_count), mix_seed(cfg.seed, 0x6474ULL),
                         tag_of(cfg.channel));
    fs::path path(cfg.dataset_path);
    if (path.is_relative()) path = out_path(cfg, cfg.dataset_path);
    save_dataset(path.string(), ds);
    std::cout << "wrote " << ds.frames.size() << " frames to " << path.string() << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& receiver_arg) {
    const ReceiverKind kind =
        receiver_arg.empty() ? cfg.receiver : receiver_from_name(receiver_arg);
    const std::string name = receiver_name(kind);
    const LmmseInit lmmse = build_lmmse(cfg.lmmse_spec, cfg.ofdm, cfg.lmmse_design_snr_db);
    const NoiseSpec noise{cfg.training.snr_db};
    const FrameSource src{cfg.ofdm, cfg.channel, noise, mix_seed(cfg.training.seed, 0x736863ULL)};

    switch (kind) {
        case ReceiverKind::fcdnn: {
            TrainTrace trace;
            const FcdnnParams p = train_fcdnn(cfg.ofdm, cfg.training, src, &trace);
            save_fcdnn(checkpoint_path(cfg, name), p);
            write_trace_csv(out_path(cfg, name + "_loss.csv").string(), "loss", trace.loss);
            std::cout << name << ": " << trace.loss.size() << " epochs, final loss "
                      << trace.loss.back() << "\n";
            return 0;
        }
        case ReceiverKind::comnet:
        case ReceiverKind::comnet_linear_sd: {
            const SdMode mode =
                kind == ReceiverKind::comnet_linear_sd ? SdMode::linear : cfg.sd_mode;
            TrainTrace ce_trace;
            TrainTrace sd_trace;
            const ComnetParams p =
                train_comnet(cfg.ofdm, cfg.training, src, lmmse, mode, &ce_trace, &sd_trace);
            save_comnet(checkpoint_path(cfg, name), p);
            write_trace_csv(out_path(cfg, name + "_ce_loss.csv").string(), "loss", ce_trace.loss);
            write_trace_csv(out_path(cfg, name + "_sd_loss.csv").string(), "loss", sd_trace.loss);
            std::cout << name << ": refinement loss " << ce_trace.loss.back()
                      << ", detection loss " << sd_trace.loss.back() << "\n";
            return 0;
        }
        case ReceiverKind::switchnet: {
            const FrameSource long_src{cfg.ofdm, second_channel(cfg, "switchnet training"), noise,
                                       mix_seed(cfg.training.seed, 0x6c6e67ULL)};
            TrainTrace tr1;
            TrainTrace tr2;
            TrainTrace tr3;
            const SwitchNetParams p = train_switchnet_offline(
                cfg.ofdm, cfg.training, src, long_src, lmmse, cfg.sd_mode, &tr1, &tr2, &tr3);
            save_switchnet(checkpoint_path(cfg, name), p);
            write_trace_csv(out_path(cfg, name + "_ce1_loss.csv").string(), "loss", tr1.loss);
            write_trace_csv(out_path(cfg, name + "_ce2_loss.csv").string(), "loss", tr2.loss);
            write_trace_csv(out_path(cfg, name + "_sd_loss.csv").string(), "loss", tr3.loss);
            std::cout << name << ": stage losses " << tr1.loss.back() << ", " << tr2.loss.back()
                      << ", " << tr3.loss.back() << "\n";
            return 0;
        }
        default:
            throw ConfigError("receiver " + name + " is not trainable");
    }
}

int cmd_eval(const ExperimentConfig& cfg) {
    const LmmseInit lmmse = build_lmmse(cfg.lmmse_spec, cfg.ofdm, cfg.lmmse_design_snr_db);
    for (const ReceiverKind kind : receivers_to_run(cfg)) {
        const std::string name = receiver_name(kind);
        const BerReport report =
            run_ber_sweep(cfg.ofdm, cfg.channel, cfg.sweep, build_receiver(cfg, kind, lmmse), name,
                          cfg.seed, cfg.config_hash);
        write_ber_csv(out_path(cfg, "ber_" + name + ".csv").string(), report);
        print_report(report);
    }
    return 0;
}

int cmd_mismatch(const ExperimentConfig& cfg) {
    const ChannelEnsemble& mismatched = second_channel(cfg, "mismatch");
    const LmmseInit lmmse = build_lmmse(cfg.lmmse_spec, cfg.ofdm, cfg.lmmse_design_snr_db);
    MismatchResult result;
    for (const ReceiverKind kind : receivers_to_run(cfg)) {
        const std::string name = receiver_name(kind);
        const ReceiverFn fn = build_receiver(cfg, kind, lmmse);
        result.matched[name] = run_ber_sweep(cfg.ofdm, cfg.channel, cfg.sweep, fn,
                                             name + " (matched)", cfg.seed, cfg.config_hash);
        result.mismatched[name] = run_ber_sweep(cfg.ofdm, mismatched, cfg.sweep, fn,
                                                name + " (mismatched)", cfg.seed, cfg.config_hash);
        write_ber_csv(out_path(cfg, "ber_" + name + "_matched.csv").string(),
                      result.matched[name]);
        write_ber_csv(out_path(cfg, "ber_" + name + "_mismatched.csv").string(),
                      result.mismatched[name]);
        print_report(result.matched[name]);
        print_report(result.mismatched[name]);
    }
    return 0;
}

std::vector<LabeledRecord> collect_frames(const ExperimentConfig& cfg,
                                          const ChannelEnsemble& ensemble, int count,
                                          std::uint64_t salt) {
    const NoiseSpec noise{cfg.online.snr_db};
    std::vector<LabeledRecord> frames;
    frames.reserve(static_cast<std::size_t>(count));
    const std::uint64_t base = mix_seed(cfg.seed, salt);
    for (int i = 0; i < count; ++i)
        frames.push_back(
            synthesize_frame(cfg.ofdm, ensemble, noise, mix_seed(base, static_cast<std::uint64_t>(i))));
    return frames;
}

int cmd_online(const ExperimentConfig& cfg) {
    const ChannelEnsemble& live =
        cfg.channel_b.has_value() ? *cfg.channel_b : cfg.channel;
    auto stream = stream_from_records(
        collect_frames(cfg, live, cfg.online.collected_symbols, 0x6f6e31ULL));
    if (cfg.online_mode == "alpha") {
        SwitchNetParams p = load_switchnet(checkpoint_path(cfg, "switchnet"));
        const AlphaTrace trace = online_train_alpha(p, stream, cfg.online, cfg.ofdm, cfg.seed);
        save_switchnet(out_path(cfg, "switchnet_online.airx").string(), p);
        write_trace_csv(out_path(cfg, "alpha_trace.csv").string(), "alpha", trace.alpha);
        std::cout << "alpha after " << trace.alpha.size() << " epochs: " << p.ce.alpha << "\n";
        return 0;
    }
    const auto test_frames = collect_frames(cfg, live, 200, 0x6f6e32ULL);
    TransferTrace trace;
    if (cfg.receiver == ReceiverKind::fcdnn) {
        FcdnnParams p = load_fcdnn(checkpoint_path(cfg, "fcdnn"));
        trace = online_transfer_fcdnn(p, stream, cfg.online, cfg.ofdm, test_frames, cfg.seed);
        save_fcdnn(out_path(cfg, "fcdnn_online.airx").string(), p);
    } else {
        const std::string name = receiver_name(cfg.receiver);
        ComnetParams p = load_comnet(checkpoint_path(cfg, name));
        trace = online_transfer_comnet(p, stream, cfg.online, cfg.ofdm, test_frames, cfg.seed);
        save_comnet(out_path(cfg, name + "_online.airx").string(), p);
    }
    std::vector<double> ber{trace.ber_before};
    ber.insert(ber.end(), trace.ber.begin(), trace.ber.end());
    write_trace_csv(out_path(cfg, "transfer_ber.csv").string(), "ber", ber, 0);
    std::cout << "transfer: ber " << trace.ber_before << " -> "
              << (trace.ber.empty() ? trace.ber_before : trace.ber.back()) << "\n";
    return 0;
}

void report_switch(const ExperimentConfig& cfg, const SwitchRun& run,
                   const std::string& file_stem) {
    write_trace_csv(out_path(cfg, file_stem + ".csv").string(), "alpha", run.alpha);
    std::cout << run.label << ": switch at epoch " << run.switch_epoch << ", settled alpha "
              << run.settled_alpha << "\n";
}

int cmd_switch_exp(const ExperimentConfig& cfg) {
    const SwitchNetParams params = load_switchnet(checkpoint_path(cfg, "switchnet"));
    const ChannelEnsemble& before = cfg.channel;
    const ChannelEnsemble& after = second_channel(cfg, "switch-exp");
    const int total_groups =
        std::max(cfg.warmup_groups + 1, cfg.online.collected_symbols / cfg.online.symbols_per_epoch);

    const SwitchRun up = run_alpha_switch(params, cfg.ofdm, before, after, cfg.online,
                                          cfg.warmup_groups, total_groups, 0.0,
                                          mix_seed(cfg.seed, 1), "up");
    report_switch(cfg, up, "alpha_up");
    const SwitchRun down = run_alpha_switch(params, cfg.ofdm, after, before, cfg.online,
                                            cfg.warmup_groups, total_groups, 1.0,
                                            mix_seed(cfg.seed, 2), "down");
    report_switch(cfg, down, "alpha_down");

    for (const auto& delays : cfg.switch_profiles) {
        const ChannelEnsemble profile = ChannelEnsemble::sui5_profile(delays);
        const std::string stem = "alpha_up_" + std::to_string(delays[0]) + "_" +
                                 std::to_string(delays[1]) + "_" + std::to_string(delays[2]);
        const SwitchRun run = run_alpha_switch(params, cfg.ofdm, before, profile, cfg.online,
                                               cfg.warmup_groups, total_groups, 0.0,
                                               mix_seed(cfg.seed, 3), stem);
        report_switch(cfg, run, stem);
    }
    return 0;
}

int cmd_complexity(const ExperimentConfig& cfg) {
    const auto rows = complexity_report();
    write_complexity_csv(out_path(cfg, "complexity.csv").string(), rows);
    for (const auto& r : rows)
        std::cout << r.receiver << "  params=" << r.params << "  flops=" << r.flops << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"OFDM physical layer simulator and receiver training harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    app.add_option("--config,-c", config_path, "JSON experiment config")->envname("AIRX_CONFIG");
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--out", out_dir, "override the output directory");

    auto* gen = app.add_subcommand("gen-dataset", "generate a labeled frame dataset");
    long count_override = 0;
    gen->add_option("--count", count_override, "number of frames");

    auto* train = app.add_subcommand("train", "train a receiver offline");
    std::string receiver_arg;
    train->add_option("--receiver", receiver_arg, "receiver to train");

    auto* eval = app.add_subcommand("eval", "BER sweep of the configured receivers");
    auto* mismatch = app.add_subcommand("mismatch", "BER sweep on matched and mismatched channels");
    auto* online = app.add_subcommand("online", "online adaptation on a live stream");
    auto* switch_exp = app.add_subcommand("switch-exp", "alpha tracking across a channel change");
    auto* complexity = app.add_subcommand("complexity", "parameter and FLOP counts");

    long min_bits_override = 0;
    int threads_override = 0;
    eval->add_option("--min-bits", min_bits_override, "bits per SNR point");
    eval->add_option("--threads", threads_override, "worker threads");
    mismatch->add_option("--min-bits", min_bits_override, "bits per SNR point");
    mismatch->add_option("--threads", threads_override, "worker threads");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        ExperimentConfig cfg =
            config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (seed.has_value()) cfg.seed = *seed;
        if (out_dir.has_value()) cfg.out_dir = *out_dir;
        if (count_override > 0) cfg.dataset_count = count_override;
        if (min_bits_override > 0) cfg.sweep.min_bits = min_bits_override;
        if (threads_override > 0) cfg.sweep.threads = threads_override;

        if (gen->parsed()) return cmd_gen_dataset(cfg);
        if (train->parsed()) return cmd_train(cfg, receiver_arg);
        if (eval->parsed()) return cmd_eval(cfg);
        if (mismatch->parsed()) return cmd_mismatch(cfg);
        if (online->parsed()) return cmd_online(cfg);
        if (switch_exp->parsed()) return cmd_switch_exp(cfg);
        if (complexity->parsed()) return cmd_complexity(cfg);
        return 1;
    } catch (const ConfigError& e) {
        print_error("config", e.what());
        return 2;
    } catch (const FormatError& e) {
        print_error("format", e.what());
        return 3;
    } catch (const TrainingError& e) {
        print_error("training", e.what());
        return 4;
    } catch (const std::exception& e) {
        print_error("error", e.what());
        return 1;
    }
}
