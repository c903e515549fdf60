#include "airx/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "airx/errors.hpp"

namespace airx {

namespace {

constexpr double kZfGuard = 1e-12; // on |h|^2, matching the receivers

void validate_training(const TrainingConfig& tc) {
    if (tc.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (tc.frames_per_epoch < 1) throw std::invalid_argument("frames_per_epoch must be >= 1");
    if (tc.batch_frames < 1 || tc.batch_frames > tc.frames_per_epoch)
        throw std::invalid_argument("batch_frames must be in [1, frames_per_epoch]");
    if (!(tc.lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (!(tc.lr_decay > 0.0) || tc.lr_decay > 1.0)
        throw std::invalid_argument("lr_decay must be in (0, 1]");
}

void validate_online(const OnlineConfig& oc) {
    if (oc.symbols_per_epoch < 1) throw std::invalid_argument("symbols_per_epoch must be >= 1");
    if (oc.batch_symbols < 1 || oc.batch_symbols > oc.symbols_per_epoch)
        throw std::invalid_argument("batch_symbols must be in [1, symbols_per_epoch]");
    if (oc.epochs_per_group < 1) throw std::invalid_argument("epochs_per_group must be >= 1");
    if (!(oc.alpha_lr > 0.0) || !(oc.transfer_lr > 0.0))
        throw std::invalid_argument("learning rates must be positive");
}

double lr_at_epoch(const TrainingConfig& tc, int epoch) {
    if (tc.lr_decay >= 1.0) return tc.lr;
    const int quarter = std::min(3, (4 * epoch) / std::max(1, tc.epochs));
    return tc.lr * std::pow(tc.lr_decay, quarter);
}

std::vector<LabeledRecord> make_batch(const FrameSource& src, std::uint64_t epoch, int start,
                                      int count) {
    std::vector<LabeledRecord> recs;
    recs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        recs.push_back(src.make(epoch, static_cast<std::uint64_t>(start + i)));
    return recs;
}

/// Stacked real network inputs [Re y_p; Im y_p; Re y_d; Im y_d], one column
/// per frame.
nn::Mat batch_dense_inputs(const std::vector<LabeledRecord>& recs) {
    const int k = static_cast<int>(recs.front().rx_pilot.size());
    nn::Mat x(4 * k, static_cast<long>(recs.size()));
    for (std::size_t c = 0; c < recs.size(); ++c) {
        const auto& r = recs[c];
        for (int i = 0; i < k; ++i) {
            x(i, static_cast<long>(c)) = r.rx_pilot[static_cast<std::size_t>(i)].real();
            x(k + i, static_cast<long>(c)) = r.rx_pilot[static_cast<std::size_t>(i)].imag();
            x(2 * k + i, static_cast<long>(c)) = r.rx_data[static_cast<std::size_t>(i)].real();
            x(3 * k + i, static_cast<long>(c)) = r.rx_data[static_cast<std::size_t>(i)].imag();
        }
    }
    return x;
}

nn::Mat batch_bits(const std::vector<LabeledRecord>& recs) {
    const int n = static_cast<int>(recs.front().bits.size());
    nn::Mat t(n, static_cast<long>(recs.size()));
    for (std::size_t c = 0; c < recs.size(); ++c)
        for (int i = 0; i < n; ++i)
            t(i, static_cast<long>(c)) = static_cast<double>(recs[c].bits[static_cast<std::size_t>(i)]);
    return t;
}

nn::Mat stack_real_columns(const std::vector<std::vector<cdouble>>& cols) {
    const int k = static_cast<int>(cols.front().size());
    nn::Mat x(2 * k, static_cast<long>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (int i = 0; i < k; ++i) {
            x(i, static_cast<long>(c)) = cols[c][static_cast<std::size_t>(i)].real();
            x(k + i, static_cast<long>(c)) = cols[c][static_cast<std::size_t>(i)].imag();
        }
    return x;
}

nn::Mat batch_ls_real(const std::vector<LabeledRecord>& recs, const std::vector<cdouble>& pilots) {
    std::vector<std::vector<cdouble>> cols;
    cols.reserve(recs.size());
    for (const auto& r : recs) cols.push_back(ls_estimate(r.rx_pilot, pilots));
    return stack_real_columns(cols);
}

nn::Mat batch_label_real(const std::vector<LabeledRecord>& recs, const OfdmConfig& cfg) {
    std::vector<std::vector<cdouble>> cols;
    cols.reserve(recs.size());
    for (const auto& r : recs) cols.push_back(record_channel_label(r, cfg));
    return stack_real_columns(cols);
}

/// Batched ZF equalization of the data symbols by the stacked real channel
/// estimates. Guarded bins come out as zeros, matching zf_detect.
nn::Mat zf_forward_batch(const nn::Mat& h_real, const std::vector<LabeledRecord>& recs) {
    const int k = static_cast<int>(h_real.rows()) / 2;
    nn::Mat out(h_real.rows(), h_real.cols());
    for (long c = 0; c < h_real.cols(); ++c) {
        const auto& y_d = recs[static_cast<std::size_t>(c)].rx_data;
        for (int i = 0; i < k; ++i) {
            const cdouble h(h_real(i, c), h_real(k + i, c));
            if (std::norm(h) < kZfGuard) {
                out(i, c) = 0.0;
                out(k + i, c) = 0.0;
            } else {
                const cdouble x = y_d[static_cast<std::size_t>(i)] / h;
                out(i, c) = x.real();
                out(k + i, c) = x.imag();
            }
        }
    }
    return out;
}

/// Cotangent of the ZF division on the channel estimate: for x = y / h the
/// map dh -> dx is complex multiplication by -y / h^2, whose adjoint on
/// stacked real vectors is multiplication by its conjugate. Guarded bins
/// pass no gradient.
nn::Mat zf_backward_batch(const nn::Mat& h_real, const nn::Mat& d_sd_in,
                          const std::vector<LabeledRecord>& recs) {
    const int k = static_cast<int>(h_real.rows()) / 2;
    nn::Mat dh = nn::Mat::Zero(h_real.rows(), h_real.cols());
    for (long c = 0; c < h_real.cols(); ++c) {
        const auto& y_d = recs[static_cast<std::size_t>(c)].rx_data;
        for (int i = 0; i < k; ++i) {
            const cdouble h(h_real(i, c), h_real(k + i, c));
            if (std::norm(h) < kZfGuard) continue;
            const cdouble w(d_sd_in(i, c), d_sd_in(k + i, c));
            const cdouble g = std::conj(-y_d[static_cast<std::size_t>(i)] / (h * h)) * w;
            dh(i, c) = g.real();
            dh(k + i, c) = g.imag();
        }
    }
    return dh;
}

/// Forward + backward over the 8 detection subnets against the payload
/// bits, with the gradient of the mean squared error over all 128 outputs.
/// Accumulates dL/d(input) when dx is given and hands back per-subnet
/// parameter gradients when grads_out is given. Returns the summed squared
/// error of the batch.
double subnet_pass(const std::array<nn::Network, kNumSubnets>& sd, const nn::Mat& x,
                   const nn::Mat& bits, nn::Mat* dx,
                   std::array<std::vector<nn::LayerGrads>, kNumSubnets>* grads_out) {
    const double scale = 2.0 / static_cast<double>(bits.rows() * bits.cols());
    double sq = 0.0;
    if (dx != nullptr) *dx = nn::Mat::Zero(x.rows(), x.cols());
    for (int j = 0; j < kNumSubnets; ++j) {
        nn::ForwardCache cache;
        const nn::Mat out = nn::forward(sd[static_cast<std::size_t>(j)], x, cache);
        const nn::Mat target = bits.middleRows(j * kBitsPerSubnet, kBitsPerSubnet);
        sq += (out - target).squaredNorm();
        const nn::Mat dy = scale * (out - target);
        std::vector<nn::LayerGrads> grads;
        const nn::Mat dxj = nn::backward(sd[static_cast<std::size_t>(j)], cache, dy, grads);
        if (dx != nullptr) *dx += dxj;
        if (grads_out != nullptr) (*grads_out)[static_cast<std::size_t>(j)] = std::move(grads);
    }
    return sq;
}

double subnet_train_step(std::array<nn::Network, kNumSubnets>& sd,
                         std::array<nn::AdamState, kNumSubnets>& adam, double lr, const nn::Mat& x,
                         const nn::Mat& bits, nn::Mat* dx) {
    std::array<std::vector<nn::LayerGrads>, kNumSubnets> grads;
    const double sq = subnet_pass(sd, x, bits, dx, &grads);
    for (int j = 0; j < kNumSubnets; ++j) {
        adam[static_cast<std::size_t>(j)].lr = lr;
        nn::adam_step(adam[static_cast<std::size_t>(j)], sd[static_cast<std::size_t>(j)],
                      grads[static_cast<std::size_t>(j)]);
    }
    return sq;
}

void check_epoch_loss(double loss, const char* who, int epoch) {
    if (!std::isfinite(loss))
        throw TrainingError(std::string(who) + " training diverged at epoch " +
                            std::to_string(epoch));
}

void shuffle_indices(std::vector<int>& order, Rng& rng) {
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.integer(i)]);
}

} // namespace

LabeledRecord synthesize_frame(const OfdmConfig& cfg, const ChannelEnsemble& ensemble,
                               const NoiseSpec& noise, std::uint64_t frame_seed) {
    Rng bits_rng(mix_seed(frame_seed, 1));
    Rng chan_rng(mix_seed(frame_seed, 2));
    Rng noise_rng(mix_seed(frame_seed, 3));
    LabeledRecord rec;
    rec.bits = random_bits(cfg.bits_per_frame(), bits_rng);
    const Frame frame = make_frame(cfg, rec.bits);
    const ChannelRealization ch = ensemble.sample(cfg.cp_len, chan_rng);
    rec.rx_pilot = ofdm_demodulate(cfg, apply_channel(frame.pilot_time, ch, noise, noise_rng));
    rec.rx_data = ofdm_demodulate(cfg, apply_channel(frame.data_time, ch, noise, noise_rng));
    rec.taps = ch.taps;
    return rec;
}

LabeledRecord FrameSource::make(std::uint64_t epoch, std::uint64_t index) const {
    return synthesize_frame(cfg, ensemble, noise, mix_seed(mix_seed(seed, epoch), index));
}

LabeledDataset generate_dataset(const OfdmConfig& cfg, const ChannelEnsemble& ensemble,
                                const NoiseSpec& noise, std::size_t count, std::uint64_t seed,
                                ChannelTag tag) {
    cfg.validate();
    LabeledDataset ds;
    ds.active_count = cfg.active_count;
    ds.bits_per_frame = cfg.bits_per_frame();
    ds.tag = tag;
    ds.frames.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        ds.frames.push_back(synthesize_frame(cfg, ensemble, noise, mix_seed(seed, i)));
    return ds;
}

std::vector<cdouble> record_channel_label(const LabeledRecord& rec, const OfdmConfig& cfg) {
    ChannelRealization ch;
    ch.taps = rec.taps;
    return active_frequency_response(ch, cfg);
}

FcdnnParams train_fcdnn(const OfdmConfig& cfg, const TrainingConfig& tc, const FrameSource& src,
                        TrainTrace* trace) {
    cfg.validate();
    validate_training(tc);
    Rng init_rng(mix_seed(tc.seed, 0x66636e6eULL));
    FcdnnParams p = init_fcdnn(init_rng);
    std::array<nn::AdamState, kNumSubnets> adam;
    for (int j = 0; j < kNumSubnets; ++j)
        adam[static_cast<std::size_t>(j)] = nn::make_adam(p.subnets[static_cast<std::size_t>(j)], tc.lr);
    for (int e = 0; e < tc.epochs; ++e) {
        const double lr = lr_at_epoch(tc, e);
        double sq = 0.0;
        long n = 0;
        for (int start = 0; start < tc.frames_per_epoch; start += tc.batch_frames) {
            const int bsz = std::min(tc.batch_frames, tc.frames_per_epoch - start);
            const auto recs = make_batch(src, static_cast<std::uint64_t>(e), start, bsz);
            const nn::Mat x = batch_dense_inputs(recs);
            const nn::Mat t = batch_bits(recs);
            sq += subnet_train_step(p.subnets, adam, lr, x, t, nullptr);
            n += t.size();
        }
        const double loss = sq / static_cast<double>(n);
        check_epoch_loss(loss, "dense receiver", e);
        if (trace != nullptr) trace->loss.push_back(loss);
    }
    return p;
}

namespace {

/// One epoch of supervised training of a channel-refinement network
/// against the true responses. Returns the epoch loss.
double refine_epoch(nn::Network& net, nn::AdamState& adam, double lr, const OfdmConfig& cfg,
                    const TrainingConfig& tc, const FrameSource& src, std::uint64_t epoch_addr,
                    const std::vector<cdouble>& pilots) {
    double sq = 0.0;
    long n = 0;
    for (int start = 0; start < tc.frames_per_epoch; start += tc.batch_frames) {
        const int bsz = std::min(tc.batch_frames, tc.frames_per_epoch - start);
        const auto recs = make_batch(src, epoch_addr, start, bsz);
        const nn::Mat x = batch_ls_real(recs, pilots);
        const nn::Mat t = batch_label_real(recs, cfg);
        nn::ForwardCache cache;
        const nn::Mat out = nn::forward(net, x, cache);
        sq += (out - t).squaredNorm();
        n += t.size();
        const nn::Mat dy = nn::mse_loss_grad(out, t);
        std::vector<nn::LayerGrads> grads;
        nn::backward(net, cache, dy, grads);
        adam.lr = lr;
        nn::adam_step(adam, net, grads);
    }
    return sq / static_cast<double>(n);
}

} // namespace

ComnetParams train_comnet(const OfdmConfig& cfg, const TrainingConfig& tc, const FrameSource& src,
                          const LmmseInit& lmmse, SdMode sd_mode, TrainTrace* ce_trace,
                          TrainTrace* sd_trace) {
    cfg.validate();
    validate_training(tc);
    if (lmmse.weight_real.rows() != 2 * cfg.active_count)
        throw std::invalid_argument("estimator size does not match the subcarrier count");
    Rng init_rng(mix_seed(tc.seed, 0x636f6d6eULL));
    ComnetParams p = init_comnet(lmmse, sd_mode, init_rng);
    const auto pilots = pilot_symbols(cfg);

    nn::AdamState ce_adam = nn::make_adam(p.ce, tc.lr);
    for (int e = 0; e < tc.epochs; ++e) {
        const double loss = refine_epoch(p.ce, ce_adam, lr_at_epoch(tc, e), cfg, tc, src,
                                         static_cast<std::uint64_t>(e), pilots);
        check_epoch_loss(loss, "channel refinement", e);
        if (ce_trace != nullptr) ce_trace->loss.push_back(loss);
    }

    p.ce[0].trainable = false;
    std::array<nn::AdamState, kNumSubnets> sd_adam;
    for (int j = 0; j < kNumSubnets; ++j)
        sd_adam[static_cast<std::size_t>(j)] = nn::make_adam(p.sd[static_cast<std::size_t>(j)], tc.lr);
    for (int e = 0; e < tc.epochs; ++e) {
        const double lr = lr_at_epoch(tc, e);
        double sq = 0.0;
        long n = 0;
        for (int start = 0; start < tc.frames_per_epoch; start += tc.batch_frames) {
            const int bsz = std::min(tc.batch_frames, tc.frames_per_epoch - start);
            const auto recs =
                make_batch(src, static_cast<std::uint64_t>(tc.epochs + e), start, bsz);
            const nn::Mat h = nn::forward(p.ce, batch_ls_real(recs, pilots));
            const nn::Mat sd_in = zf_forward_batch(h, recs);
            const nn::Mat t = batch_bits(recs);
            sq += subnet_train_step(p.sd, sd_adam, lr, sd_in, t, nullptr);
            n += t.size();
        }
        const double loss = sq / static_cast<double>(n);
        check_epoch_loss(loss, "detection", e);
        if (sd_trace != nullptr) sd_trace->loss.push_back(loss);
    }
    p.ce[0].trainable = true;
    return p;
}

SwitchNetParams train_switchnet_offline(const OfdmConfig& cfg, const TrainingConfig& tc,
                                        const FrameSource& short_src, const FrameSource& long_src,
                                        const LmmseInit& lmmse, SdMode sd_mode,
                                        TrainTrace* ce1_trace, TrainTrace* ce2_trace,
                                        TrainTrace* sd_trace) {
    cfg.validate();
    validate_training(tc);
    if (lmmse.weight_real.rows() != 2 * cfg.active_count)
        throw std::invalid_argument("estimator size does not match the subcarrier count");
    Rng init_rng(mix_seed(tc.seed, 0x73776e74ULL));
    const auto pilots = pilot_symbols(cfg);
    const int dim = 2 * cfg.active_count;

    nn::Network first;
    {
        nn::DenseLayer l;
        l.W = lmmse.weight_real;
        l.b = nn::Vec::Zero(dim);
        l.act = nn::Activation::none;
        first.push_back(std::move(l));
    }
    nn::AdamState adam1 = nn::make_adam(first, tc.lr);
    for (int e = 0; e < tc.epochs; ++e) {
        const double loss = refine_epoch(first, adam1, lr_at_epoch(tc, e), cfg, tc, short_src,
                                         static_cast<std::uint64_t>(e), pilots);
        check_epoch_loss(loss, "first refinement stage", e);
        if (ce1_trace != nullptr) ce1_trace->loss.push_back(loss);
    }

    first[0].trainable = false;
    nn::Network second = nn::init_network({{dim, dim, nn::Activation::none}}, init_rng);
    nn::AdamState adam2 = nn::make_adam(second, tc.lr);
    for (int e = 0; e < tc.epochs; ++e) {
        const double lr = lr_at_epoch(tc, e);
        double sq = 0.0;
        long n = 0;
        for (int start = 0; start < tc.frames_per_epoch; start += tc.batch_frames) {
            const int bsz = std::min(tc.batch_frames, tc.frames_per_epoch - start);
            const auto recs =
                make_batch(long_src, static_cast<std::uint64_t>(tc.epochs + e), start, bsz);
            const nn::Mat u = nn::forward(first, batch_ls_real(recs, pilots));
            const nn::Mat t = batch_label_real(recs, cfg);
            nn::ForwardCache cache;
            const nn::Mat v = nn::forward(second, u, cache);
            const nn::Mat pred = u + v;
            sq += (pred - t).squaredNorm();
            n += t.size();
            // The skip connection passes the loss gradient to the residual
            // stage unchanged.
            const nn::Mat dy = nn::mse_loss_grad(pred, t);
            std::vector<nn::LayerGrads> grads;
            nn::backward(second, cache, dy, grads);
            adam2.lr = lr;
            nn::adam_step(adam2, second, grads);
        }
        const double loss = sq / static_cast<double>(n);
        check_epoch_loss(loss, "second refinement stage", e);
        if (ce2_trace != nullptr) ce2_trace->loss.push_back(loss);
    }

    SwitchNetParams p;
    p.ce.W1 = first[0].W;
    p.ce.B1 = first[0].b;
    p.ce.W2 = second[0].W;
    p.ce.B2 = second[0].b;
    p.ce.alpha = 0.0;
    p.sd_mode = sd_mode;
    for (auto& net : p.sd) net = nn::init_network(comnet_sd_subnet_specs(sd_mode), init_rng);

    std::array<nn::AdamState, kNumSubnets> sd_adam;
    for (int j = 0; j < kNumSubnets; ++j)
        sd_adam[static_cast<std::size_t>(j)] = nn::make_adam(p.sd[static_cast<std::size_t>(j)], tc.lr);
    const std::uint64_t base = 2 * static_cast<std::uint64_t>(tc.epochs);
    for (int e = 0; e < tc.epochs; ++e) {
        const double lr = lr_at_epoch(tc, e);
        double sq = 0.0;
        long n = 0;
        for (int start = 0; start < tc.frames_per_epoch; start += tc.batch_frames) {
            const int bsz = std::min(tc.batch_frames, tc.frames_per_epoch - start);
            std::vector<LabeledRecord> recs;
            recs.reserve(static_cast<std::size_t>(bsz));
            std::vector<double> alphas(static_cast<std::size_t>(bsz));
            for (int i = 0; i < bsz; ++i) {
                const int idx = start + i;
                const bool long_frame = idx % 2 != 0;
                const FrameSource& src = long_frame ? long_src : short_src;
                recs.push_back(src.make(base + static_cast<std::uint64_t>(e),
                                        static_cast<std::uint64_t>(idx)));
                alphas[static_cast<std::size_t>(i)] = long_frame ? 1.0 : 0.0;
            }
            const nn::Mat x = batch_ls_real(recs, pilots);
            const nn::Mat u = (p.ce.W1 * x).colwise() + p.ce.B1;
            nn::Mat h = u;
            const nn::Mat v = (p.ce.W2 * u).colwise() + p.ce.B2;
            for (int i = 0; i < bsz; ++i)
                if (alphas[static_cast<std::size_t>(i)] != 0.0) h.col(i) += v.col(i);
            const nn::Mat sd_in = zf_forward_batch(h, recs);
            const nn::Mat t = batch_bits(recs);
            sq += subnet_train_step(p.sd, sd_adam, lr, sd_in, t, nullptr);
            n += t.size();
        }
        const double loss = sq / static_cast<double>(n);
        check_epoch_loss(loss, "shared detection", e);
        if (sd_trace != nullptr) sd_trace->loss.push_back(loss);
    }
    return p;
}

SymbolStream stream_from_records(std::vector<LabeledRecord> records) {
    auto state = std::make_shared<std::pair<std::vector<LabeledRecord>, std::size_t>>(
        std::move(records), 0);
    return [state]() -> std::optional<LabeledRecord> {
        if (state->second >= state->first.size()) return std::nullopt;
        return state->first[state->second++];
    };
}

namespace {

/// Collect the next full group from the stream; a short tail ends the run.
bool next_group(const SymbolStream& stream, int size, std::vector<LabeledRecord>& group) {
    group.clear();
    while (static_cast<int>(group.size()) < size) {
        auto rec = stream();
        if (!rec.has_value()) return false;
        group.push_back(std::move(*rec));
    }
    return true;
}

std::vector<LabeledRecord> pick(const std::vector<LabeledRecord>& group,
                                const std::vector<int>& order, int start, int count) {
    std::vector<LabeledRecord> batch;
    batch.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        batch.push_back(group[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])]);
    return batch;
}

double alpha_gradient(const SwitchNetParams& p, const std::vector<LabeledRecord>& recs,
                      const std::vector<cdouble>& pilots) {
    const nn::Mat x = batch_ls_real(recs, pilots);
    const nn::Mat u = (p.ce.W1 * x).colwise() + p.ce.B1;
    const nn::Mat v = (p.ce.W2 * u).colwise() + p.ce.B2;
    const nn::Mat h = u + p.ce.alpha * v;
    const nn::Mat sd_in = zf_forward_batch(h, recs);
    const nn::Mat t = batch_bits(recs);
    nn::Mat d_sd_in;
    subnet_pass(p.sd, sd_in, t, &d_sd_in, nullptr);
    const nn::Mat dh = zf_backward_batch(h, d_sd_in, recs);
    return dh.cwiseProduct(v).sum();
}

} // namespace

AlphaTrace online_train_alpha(SwitchNetParams& params, const SymbolStream& stream,
                              const OnlineConfig& oc, const OfdmConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    validate_online(oc);
    const auto pilots = pilot_symbols(cfg);
    Rng shuffle_rng(mix_seed(seed, 0x616c7068ULL));
    nn::ScalarAdam adam;
    adam.lr = oc.alpha_lr;
    AlphaTrace trace;
    std::vector<LabeledRecord> group;
    std::vector<int> order(static_cast<std::size_t>(oc.symbols_per_epoch));
    while (next_group(stream, oc.symbols_per_epoch, group)) {
        for (int pass = 0; pass < oc.epochs_per_group; ++pass) {
            std::iota(order.begin(), order.end(), 0);
            shuffle_indices(order, shuffle_rng);
            for (int start = 0; start < oc.symbols_per_epoch; start += oc.batch_symbols) {
                const int bsz = std::min(oc.batch_symbols, oc.symbols_per_epoch - start);
                const auto batch = pick(group, order, start, bsz);
                const double grad = alpha_gradient(params, batch, pilots);
                if (!std::isfinite(grad))
                    throw TrainingError("alpha adaptation produced a non-finite gradient");
                nn::adam_step(adam, params.ce.alpha, grad);
            }
            trace.alpha.push_back(params.ce.alpha);
        }
    }
    return trace;
}

TransferTrace online_transfer_comnet(ComnetParams& params, const SymbolStream& stream,
                                     const OnlineConfig& oc, const OfdmConfig& cfg,
                                     const std::vector<LabeledRecord>& test_frames,
                                     std::uint64_t seed) {
    cfg.validate();
    validate_online(oc);
    const auto pilots = pilot_symbols(cfg);
    const auto receive = [&](const LabeledRecord& r) {
        return comnet_receive(params, r.rx_pilot, r.rx_data, cfg);
    };
    TransferTrace trace;
    if (!test_frames.empty()) trace.ber_before = record_set_ber(test_frames, receive);
    Rng shuffle_rng(mix_seed(seed, 0x7472616eULL));
    nn::AdamState ce_adam = nn::make_adam(params.ce, oc.transfer_lr);
    std::array<nn::AdamState, kNumSubnets> sd_adam;
    for (int j = 0; j < kNumSubnets; ++j)
        sd_adam[static_cast<std::size_t>(j)] =
            nn::make_adam(params.sd[static_cast<std::size_t>(j)], oc.transfer_lr);
    std::vector<LabeledRecord> group;
    std::vector<int> order(static_cast<std::size_t>(oc.symbols_per_epoch));
    while (next_group(stream, oc.symbols_per_epoch, group)) {
        for (int pass = 0; pass < oc.epochs_per_group; ++pass) {
            std::iota(order.begin(), order.end(), 0);
            shuffle_indices(order, shuffle_rng);
            for (int start = 0; start < oc.symbols_per_epoch; start += oc.batch_symbols) {
                const int bsz = std::min(oc.batch_symbols, oc.symbols_per_epoch - start);
                const auto batch = pick(group, order, start, bsz);
                const nn::Mat x = batch_ls_real(batch, pilots);
                nn::ForwardCache ce_cache;
                const nn::Mat h = nn::forward(params.ce, x, ce_cache);
                const nn::Mat sd_in = zf_forward_batch(h, batch);
                const nn::Mat t = batch_bits(batch);
                nn::Mat d_sd_in;
                const double sq = subnet_train_step(params.sd, sd_adam, oc.transfer_lr, sd_in, t,
                                                    &d_sd_in);
                if (!std::isfinite(sq))
                    throw TrainingError("transfer training diverged");
                const nn::Mat dh = zf_backward_batch(h, d_sd_in, batch);
                std::vector<nn::LayerGrads> ce_grads;
                nn::backward(params.ce, ce_cache, dh, ce_grads);
                ce_adam.lr = oc.transfer_lr;
                nn::adam_step(ce_adam, params.ce, ce_grads);
            }
            if (!test_frames.empty()) trace.ber.push_back(record_set_ber(test_frames, receive));
        }
    }
    return trace;
}

TransferTrace online_transfer_fcdnn(FcdnnParams& params, const SymbolStream& stream,
                                    const OnlineConfig& oc, const OfdmConfig& cfg,
                                    const std::vector<LabeledRecord>& test_frames,
                                    std::uint64_t seed) {
    cfg.validate();
    validate_online(oc);
    const auto receive = [&](const LabeledRecord& r) {
        return fcdnn_receive(params, r.rx_pilot, r.rx_data);
    };
    TransferTrace trace;
    if (!test_frames.empty()) trace.ber_before = record_set_ber(test_frames, receive);
    Rng shuffle_rng(mix_seed(seed, 0x7466636eULL));
    std::array<nn::AdamState, kNumSubnets> adam;
    for (int j = 0; j < kNumSubnets; ++j)
        adam[static_cast<std::size_t>(j)] =
            nn::make_adam(params.subnets[static_cast<std::size_t>(j)], oc.transfer_lr);
    std::vector<LabeledRecord> group;
    std::vector<int> order(static_cast<std::size_t>(oc.symbols_per_epoch));
    while (next_group(stream, oc.symbols_per_epoch, group)) {
        for (int pass = 0; pass < oc.epochs_per_group; ++pass) {
            std::iota(order.begin(), order.end(), 0);
            shuffle_indices(order, shuffle_rng);
            for (int start = 0; start < oc.symbols_per_epoch; start += oc.batch_symbols) {
                const int bsz = std::min(oc.batch_symbols, oc.symbols_per_epoch - start);
                const auto batch = pick(group, order, start, bsz);
                const nn::Mat x = batch_dense_inputs(batch);
                const nn::Mat t = batch_bits(batch);
                const double sq =
                    subnet_train_step(params.subnets, adam, oc.transfer_lr, x, t, nullptr);
                if (!std::isfinite(sq))
                    throw TrainingError("transfer training diverged");
            }
            if (!test_frames.empty()) trace.ber.push_back(record_set_ber(test_frames, receive));
        }
    }
    return trace;
}

double channel_estimate_mse(const OfdmConfig& cfg, const std::vector<LabeledRecord>& frames,
                            const std::function<std::vector<cdouble>(const std::vector<cdouble>&)>&
                                estimator) {
    cfg.validate();
    if (frames.empty()) throw std::invalid_argument("no frames given");
    const auto pilots = pilot_symbols(cfg);
    double sq = 0.0;
    long n = 0;
    for (const auto& rec : frames) {
        const auto h_hat = estimator(ls_estimate(rec.rx_pilot, pilots));
        const auto h_true = record_channel_label(rec, cfg);
        if (h_hat.size() != h_true.size())
            throw std::invalid_argument("estimator output size mismatch");
        for (std::size_t k = 0; k < h_true.size(); ++k) sq += std::norm(h_hat[k] - h_true[k]);
        n += static_cast<long>(h_true.size());
    }
    return sq / static_cast<double>(n);
}

double record_set_ber(const std::vector<LabeledRecord>& frames,
                      const std::function<std::vector<std::uint8_t>(const LabeledRecord&)>& receive) {
    if (frames.empty()) throw std::invalid_argument("no frames given");
    long errors = 0;
    long total = 0;
    for (const auto& rec : frames) {
        const auto bits = receive(rec);
        if (bits.size() != rec.bits.size())
            throw std::invalid_argument("receiver output size mismatch");
        for (std::size_t i = 0; i < bits.size(); ++i)
            if (bits[i] != rec.bits[i]) ++errors;
        total += static_cast<long>(bits.size());
    }
    return static_cast<double>(errors) / static_cast<double>(total);
}

} // namespace airx
