#include "airx/receivers.hpp"

#include <cmath>
#include <stdexcept>

#include "airx/errors.hpp"

namespace airx {

namespace {

constexpr double kZfGuard = 1e-12; // on |h|^2

Eigen::VectorXd stack_real(const std::vector<cdouble>& v) {
    const int n = static_cast<int>(v.size());
    Eigen::VectorXd out(2 * n);
    for (int i = 0; i < n; ++i) {
        out(i) = v[i].real();
        out(i + n) = v[i].imag();
    }
    return out;
}

std::vector<cdouble> unstack_real(const Eigen::VectorXd& v) {
    if (v.size() % 2 != 0) throw std::invalid_argument("stacked vector must have even length");
    const int n = static_cast<int>(v.size()) / 2;
    std::vector<cdouble> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = {v(i), v(i + n)};
    return out;
}

void check_finite(const std::vector<double>& soft, const char* who) {
    for (double s : soft)
        if (!std::isfinite(s)) throw TrainingError(std::string(who) + ": non-finite soft output");
}

} // namespace

std::vector<double> to_real_vector(const std::vector<cdouble>& v) {
    std::vector<double> out(2 * v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i].real();
        out[i + v.size()] = v[i].imag();
    }
    return out;
}

std::vector<cdouble> to_complex_vector(const std::vector<double>& v) {
    if (v.size() % 2 != 0) throw std::invalid_argument("stacked vector must have even length");
    const std::size_t n = v.size() / 2;
    std::vector<cdouble> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {v[i], v[i + n]};
    return out;
}

Eigen::MatrixXd complex_to_real_block(const Eigen::MatrixXcd& w) {
    const auto r = w.rows(), c = w.cols();
    Eigen::MatrixXd out(2 * r, 2 * c);
    out.topLeftCorner(r, c) = w.real();
    out.topRightCorner(r, c) = -w.imag();
    out.bottomLeftCorner(r, c) = w.imag();
    out.bottomRightCorner(r, c) = w.real();
    return out;
}

std::vector<cdouble> ls_estimate(const std::vector<cdouble>& y_p, const std::vector<cdouble>& x_p) {
    if (y_p.size() != x_p.size()) throw std::invalid_argument("pilot length mismatch");
    std::vector<cdouble> h(y_p.size());
    for (std::size_t i = 0; i < y_p.size(); ++i) h[i] = y_p[i] / x_p[i];
    return h;
}

std::vector<cdouble> zf_detect(const std::vector<cdouble>& y_d, const std::vector<cdouble>& h) {
    if (y_d.size() != h.size()) throw std::invalid_argument("length mismatch");
    std::vector<cdouble> x(y_d.size());
    for (std::size_t i = 0; i < y_d.size(); ++i) {
        const double mag2 = std::norm(h[i]);
        x[i] = mag2 < kZfGuard ? cdouble(0.0, 0.0) : y_d[i] / h[i];
    }
    return x;
}

std::vector<cdouble> mmse_detect(const std::vector<cdouble>& y_d, const std::vector<cdouble>& h,
                                 double sigma_w_sq) {
    if (y_d.size() != h.size()) throw std::invalid_argument("length mismatch");
    std::vector<cdouble> x(y_d.size());
    for (std::size_t i = 0; i < y_d.size(); ++i) {
        const double denom = std::norm(h[i]) + sigma_w_sq;
        x[i] = denom < kZfGuard ? cdouble(0.0, 0.0) : std::conj(h[i]) * y_d[i] / denom;
    }
    return x;
}

LmmseInit build_lmmse(const TheoreticalChannelSpec& spec, const OfdmConfig& cfg,
                      double design_snr_db) {
    cfg.validate();
    const auto idx = cfg.active_indices();
    const int k = static_cast<int>(idx.size());
    Eigen::MatrixXcd r(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            r(i, j) = theoretical_autocorrelation(spec, idx[i] - idx[j], cfg.fft_size);
    // beta = 1 for a unit-modulus constellation.
    const double reg = std::pow(10.0, -design_snr_db / 10.0);
    // The kernel is analytic, hence numerically rank-deficient; go through
    // the eigendecomposition and clamp instead of a direct solve.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    Eigen::VectorXd ratio(k);
    for (int i = 0; i < k; ++i) {
        const double denom = lam(i) + reg;
        ratio(i) = denom > 0.0 ? lam(i) / denom : 0.0;
    }
    LmmseInit init;
    init.weight = eig.eigenvectors() * ratio.asDiagonal() * eig.eigenvectors().adjoint();
    init.weight_real = complex_to_real_block(init.weight);
    init.design_snr_db = design_snr_db;
    return init;
}

std::vector<cdouble> lmmse_estimate(const LmmseInit& lmmse, const std::vector<cdouble>& h_ls) {
    const int k = static_cast<int>(h_ls.size());
    if (lmmse.weight.rows() != k) throw std::invalid_argument("estimator size mismatch");
    Eigen::VectorXcd v(k);
    for (int i = 0; i < k; ++i) v(i) = h_ls[static_cast<std::size_t>(i)];
    Eigen::VectorXcd out = lmmse.weight * v;
    std::vector<cdouble> h(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) h[static_cast<std::size_t>(i)] = out(i);
    return h;
}

std::vector<std::uint8_t> lmmse_mmse_baseline(const std::vector<cdouble>& y_p,
                                              const std::vector<cdouble>& y_d,
                                              const OfdmConfig& cfg, const LmmseInit& lmmse,
                                              const NoiseSpec& noise) {
    const auto h_ls = ls_estimate(y_p, pilot_symbols(cfg));
    const auto h = lmmse_estimate(lmmse, h_ls);
    return demap_symbols(mmse_detect(y_d, h, noise.sigma_w_sq()));
}

std::vector<std::uint8_t> ls_zf_receive(const std::vector<cdouble>& y_p,
                                        const std::vector<cdouble>& y_d, const OfdmConfig& cfg) {
    const auto h_ls = ls_estimate(y_p, pilot_symbols(cfg));
    return demap_symbols(zf_detect(y_d, h_ls));
}

std::vector<std::uint8_t> hard_decisions(const std::vector<double>& soft) {
    std::vector<std::uint8_t> bits(soft.size());
    for (std::size_t i = 0; i < soft.size(); ++i) bits[i] = soft[i] >= 0.5 ? 1 : 0;
    return bits;
}

std::vector<nn::DenseLayerSpec> fcdnn_subnet_specs() {
    using nn::Activation;
    return {{256, 500, Activation::relu},
            {500, 250, Activation::relu},
            {250, 120, Activation::relu},
            {120, 16, Activation::sigmoid}};
}

FcdnnParams init_fcdnn(Rng& rng) {
    FcdnnParams p;
    for (auto& net : p.subnets) net = nn::init_network(fcdnn_subnet_specs(), rng);
    return p;
}

std::vector<double> fcdnn_soft(const FcdnnParams& p, const std::vector<cdouble>& y_p,
                               const std::vector<cdouble>& y_d) {
    auto in = to_real_vector(y_p);
    const auto d = to_real_vector(y_d);
    in.insert(in.end(), d.begin(), d.end());
    const Eigen::Map<const Eigen::VectorXd> x(in.data(), static_cast<long>(in.size()));
    std::vector<double> soft;
    soft.reserve(kNumSubnets * kBitsPerSubnet);
    for (const auto& net : p.subnets) {
        const nn::Mat out = nn::forward(net, x);
        for (int i = 0; i < out.rows(); ++i) soft.push_back(out(i, 0));
    }
    check_finite(soft, "fcdnn");
    return soft;
}

std::vector<std::uint8_t> fcdnn_receive(const FcdnnParams& p, const std::vector<cdouble>& y_p,
                                        const std::vector<cdouble>& y_d) {
    return hard_decisions(fcdnn_soft(p, y_p, y_d));
}

std::vector<nn::DenseLayerSpec> comnet_ce_specs() {
    return {{128, 128, nn::Activation::none}};
}

std::vector<nn::DenseLayerSpec> comnet_sd_subnet_specs(SdMode mode) {
    using nn::Activation;
    return {{128, 120, mode == SdMode::relu ? Activation::relu : Activation::none},
            {120, 16, Activation::sigmoid}};
}

ComnetParams init_comnet(const LmmseInit& lmmse, SdMode mode, Rng& rng) {
    ComnetParams p;
    nn::DenseLayer ce;
    ce.W = lmmse.weight_real;
    ce.b = nn::Vec::Zero(lmmse.weight_real.rows());
    ce.act = nn::Activation::none;
    p.ce = {std::move(ce)};
    for (auto& net : p.sd) net = nn::init_network(comnet_sd_subnet_specs(mode), rng);
    p.sd_mode = mode;
    return p;
}

std::vector<double> sd_soft(const std::array<nn::Network, kNumSubnets>& sd,
                            const std::vector<double>& zf_real) {
    const Eigen::Map<const Eigen::VectorXd> x(zf_real.data(), static_cast<long>(zf_real.size()));
    std::vector<double> soft;
    soft.reserve(kNumSubnets * kBitsPerSubnet);
    for (const auto& net : sd) {
        const nn::Mat out = nn::forward(net, x);
        for (int i = 0; i < out.rows(); ++i) soft.push_back(out(i, 0));
    }
    check_finite(soft, "sd");
    return soft;
}

NeuralReceiveResult comnet_forward(const ComnetParams& p, const std::vector<cdouble>& y_p,
                                   const std::vector<cdouble>& y_d, const OfdmConfig& cfg) {
    NeuralReceiveResult r;
    const auto h_ls = ls_estimate(y_p, pilot_symbols(cfg));
    const Eigen::VectorXd h_real = nn::forward(p.ce, stack_real(h_ls));
    r.h_hat = unstack_real(h_real);
    r.zf = zf_detect(y_d, r.h_hat);
    if (p.qam_short_path) {
        r.bits = demap_symbols(r.zf);
        r.soft.assign(r.bits.begin(), r.bits.end());
        return r;
    }
    r.soft = sd_soft(p.sd, to_real_vector(r.zf));
    r.bits = hard_decisions(r.soft);
    return r;
}

std::vector<std::uint8_t> comnet_receive(const ComnetParams& p, const std::vector<cdouble>& y_p,
                                         const std::vector<cdouble>& y_d, const OfdmConfig& cfg) {
    return comnet_forward(p, y_p, y_d, cfg).bits;
}

std::vector<nn::DenseLayerSpec> switchnet_ce_specs() {
    return {{128, 128, nn::Activation::none}, {128, 128, nn::Activation::none}};
}

Eigen::VectorXd switchnet_ce_forward(const SwitchNetCeParams& ce, const Eigen::VectorXd& h_ls_real) {
    const Eigen::VectorXd u = ce.W1 * h_ls_real + ce.B1;
    return u + ce.alpha * (ce.W2 * u + ce.B2);
}

NeuralReceiveResult switchnet_forward(const SwitchNetParams& p, const std::vector<cdouble>& y_p,
                                      const std::vector<cdouble>& y_d, const OfdmConfig& cfg) {
    NeuralReceiveResult r;
    const auto h_ls = ls_estimate(y_p, pilot_symbols(cfg));
    const Eigen::VectorXd h_real = switchnet_ce_forward(p.ce, stack_real(h_ls));
    r.h_hat = unstack_real(h_real);
    r.zf = zf_detect(y_d, r.h_hat);
    r.soft = sd_soft(p.sd, to_real_vector(r.zf));
    r.bits = hard_decisions(r.soft);
    return r;
}

std::vector<std::uint8_t> switchnet_receive(const SwitchNetParams& p, const std::vector<cdouble>& y_p,
                                            const std::vector<cdouble>& y_d, const OfdmConfig& cfg) {
    return switchnet_forward(p, y_p, y_d, cfg).bits;
}

namespace {

void expect_shape(const nn::DenseLayer& layer, int in_dim, int out_dim, const std::string& what) {
    if (layer.in_dim() != in_dim || layer.out_dim() != out_dim)
        throw FormatError(what + ": unexpected layer shape " + std::to_string(layer.in_dim()) +
                          "x" + std::to_string(layer.out_dim()));
}

SdMode sd_mode_from_layer(const nn::DenseLayer& hidden) {
    return hidden.act == nn::Activation::relu ? SdMode::relu : SdMode::linear;
}

} // namespace

void save_fcdnn(const std::string& path, const FcdnnParams& p) {
    nn::Network flat;
    for (const auto& net : p.subnets) flat.insert(flat.end(), net.begin(), net.end());
    nn::save_layers(path, flat);
}

FcdnnParams load_fcdnn(const std::string& path) {
    nn::Network flat = nn::load_layers(path);
    const auto specs = fcdnn_subnet_specs();
    if (flat.size() != kNumSubnets * specs.size())
        throw FormatError(path + ": wrong layer count for the dense receiver");
    FcdnnParams p;
    std::size_t pos = 0;
    for (auto& net : p.subnets) {
        net.assign(flat.begin() + static_cast<long>(pos),
                   flat.begin() + static_cast<long>(pos + specs.size()));
        for (std::size_t i = 0; i < specs.size(); ++i)
            expect_shape(net[i], specs[i].in_dim, specs[i].out_dim, path);
        pos += specs.size();
    }
    return p;
}

void save_comnet(const std::string& path, const ComnetParams& p) {
    nn::Network flat = p.ce;
    for (const auto& net : p.sd) flat.insert(flat.end(), net.begin(), net.end());
    nn::save_layers(path, flat);
}

ComnetParams load_comnet(const std::string& path) {
    nn::Network flat = nn::load_layers(path);
    if (flat.size() != 1 + kNumSubnets * 2)
        throw FormatError(path + ": wrong layer count for the model-based receiver");
    ComnetParams p;
    expect_shape(flat[0], 128, 128, path);
    p.ce = {flat[0]};
    p.sd_mode = sd_mode_from_layer(flat[1]);
    std::size_t pos = 1;
    for (auto& net : p.sd) {
        net.assign(flat.begin() + static_cast<long>(pos), flat.begin() + static_cast<long>(pos + 2));
        expect_shape(net[0], 128, 120, path);
        expect_shape(net[1], 120, 16, path);
        pos += 2;
    }
    return p;
}

void save_switchnet(const std::string& path, const SwitchNetParams& p) {
    nn::Network flat;
    nn::DenseLayer ce1;
    ce1.W = p.ce.W1;
    ce1.b = p.ce.B1;
    flat.push_back(std::move(ce1));
    nn::DenseLayer ce2;
    ce2.W = p.ce.W2;
    ce2.b = p.ce.B2;
    flat.push_back(std::move(ce2));
    nn::DenseLayer alpha; // 1x1 carrier for the switch parameter
    alpha.W = nn::Mat::Constant(1, 1, p.ce.alpha);
    alpha.b = nn::Vec::Zero(1);
    flat.push_back(std::move(alpha));
    for (const auto& net : p.sd) flat.insert(flat.end(), net.begin(), net.end());
    nn::save_layers(path, flat);
}

SwitchNetParams load_switchnet(const std::string& path) {
    nn::Network flat = nn::load_layers(path);
    if (flat.size() != 3 + kNumSubnets * 2)
        throw FormatError(path + ": wrong layer count for the switching receiver");
    expect_shape(flat[0], 128, 128, path);
    expect_shape(flat[1], 128, 128, path);
    expect_shape(flat[2], 1, 1, path);
    SwitchNetParams p;
    p.ce.W1 = flat[0].W;
    p.ce.B1 = flat[0].b;
    p.ce.W2 = flat[1].W;
    p.ce.B2 = flat[1].b;
    p.ce.alpha = flat[2].W(0, 0);
    p.sd_mode = sd_mode_from_layer(flat[3]);
    std::size_t pos = 3;
    for (auto& net : p.sd) {
        net.assign(flat.begin() + static_cast<long>(pos), flat.begin() + static_cast<long>(pos + 2));
        expect_shape(net[0], 128, 120, path);
        expect_shape(net[1], 120, 16, path);
        pos += 2;
    }
    return p;
}

} // namespace airx
