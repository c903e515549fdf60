#include "airx/nnkit.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "airx/errors.hpp"

namespace airx::nn {

DenseLayer init_layer(const DenseLayerSpec& spec, Rng& rng) {
    if (spec.in_dim <= 0 || spec.out_dim <= 0)
        throw std::invalid_argument("layer dimensions must be positive");
    DenseLayer layer;
    layer.W.resize(spec.out_dim, spec.in_dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.in_dim));
    for (int r = 0; r < spec.out_dim; ++r)
        for (int c = 0; c < spec.in_dim; ++c) layer.W(r, c) = rng.uniform(-bound, bound);
    layer.b = Vec::Zero(spec.out_dim);
    layer.act = spec.act;
    return layer;
}

Network init_network(const std::vector<DenseLayerSpec>& specs, Rng& rng) {
    Network net;
    net.reserve(specs.size());
    for (const auto& s : specs) net.push_back(init_layer(s, rng));
    return net;
}

std::vector<DenseLayerSpec> layer_specs(const Network& net) {
    std::vector<DenseLayerSpec> specs;
    specs.reserve(net.size());
    for (const auto& l : net) specs.push_back({l.in_dim(), l.out_dim(), l.act});
    return specs;
}

Mat apply_activation(Activation act, const Mat& z) {
    switch (act) {
    case Activation::none:
        return z;
    case Activation::relu:
        return z.cwiseMax(0.0);
    case Activation::sigmoid:
        return ((-z.array()).exp() + 1.0).inverse().matrix();
    }
    throw std::invalid_argument("unknown activation");
}

Mat forward(const Network& net, const Mat& input) {
    Mat x = input;
    for (const auto& layer : net) {
        if (x.rows() != layer.W.cols()) throw std::invalid_argument("input width mismatch");
        Mat z = layer.W * x;
        z.colwise() += layer.b;
        x = apply_activation(layer.act, z);
    }
    return x;
}

Mat forward(const Network& net, const Mat& input, ForwardCache& cache) {
    cache.inputs.clear();
    cache.pre_act.clear();
    cache.inputs.reserve(net.size() + 1);
    cache.pre_act.reserve(net.size());
    cache.inputs.push_back(input);
    for (const auto& layer : net) {
        const Mat& x = cache.inputs.back();
        if (x.rows() != layer.W.cols()) throw std::invalid_argument("input width mismatch");
        Mat z = layer.W * x;
        z.colwise() += layer.b;
        cache.pre_act.push_back(z);
        cache.inputs.push_back(apply_activation(layer.act, z));
    }
    return cache.inputs.back();
}

double mse_loss(const Mat& pred, const Mat& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("loss shape mismatch");
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Mat mse_loss_grad(const Mat& pred, const Mat& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("loss shape mismatch");
    return 2.0 / static_cast<double>(pred.size()) * (pred - target);
}

Mat backward(const Network& net, const ForwardCache& cache, const Mat& output_grad,
             std::vector<LayerGrads>& grads) {
    if (cache.inputs.size() != net.size() + 1 || cache.pre_act.size() != net.size())
        throw std::invalid_argument("cache does not match the network");
    grads.assign(net.size(), LayerGrads{});
    Mat dy = output_grad;
    for (int i = static_cast<int>(net.size()) - 1; i >= 0; --i) {
        const DenseLayer& layer = net[static_cast<std::size_t>(i)];
        Mat dz;
        switch (layer.act) {
        case Activation::none:
            dz = dy;
            break;
        case Activation::relu:
            dz = (cache.pre_act[i].array() > 0.0).cast<double>() * dy.array();
            break;
        case Activation::sigmoid: {
            const auto& s = cache.inputs[i + 1].array();
            dz = (s * (1.0 - s)) * dy.array();
            break;
        }
        }
        auto& g = grads[static_cast<std::size_t>(i)];
        if (layer.trainable) {
            g.dW.noalias() = dz * cache.inputs[i].transpose();
            g.db = dz.rowwise().sum();
        } else {
            g.dW = Mat::Zero(layer.W.rows(), layer.W.cols());
            g.db = Vec::Zero(layer.b.size());
        }
        dy.noalias() = layer.W.transpose() * dz;
    }
    return dy;
}

AdamState make_adam(const Network& net, double lr) {
    AdamState st;
    st.lr = lr;
    st.m.reserve(net.size());
    st.v.reserve(net.size());
    for (const auto& layer : net) {
        st.m.push_back({Mat::Zero(layer.W.rows(), layer.W.cols()), Vec::Zero(layer.b.size())});
        st.v.push_back({Mat::Zero(layer.W.rows(), layer.W.cols()), Vec::Zero(layer.b.size())});
    }
    return st;
}

void adam_step(AdamState& state, Network& net, const std::vector<LayerGrads>& grads) {
    if (grads.size() != net.size() || state.m.size() != net.size())
        throw std::invalid_argument("optimizer state does not match the network");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    const double b1 = state.beta1, b2 = state.beta2, lr = state.lr, eps = state.eps;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (!net[i].trainable) continue;
        auto& m = state.m[i];
        auto& v = state.v[i];
        const auto& g = grads[i];
        m.dW = b1 * m.dW + (1.0 - b1) * g.dW;
        v.dW = b2 * v.dW + (1.0 - b2) * g.dW.cwiseProduct(g.dW);
        net[i].W.array() -= lr * (m.dW.array() / bc1) / ((v.dW.array() / bc2).sqrt() + eps);
        m.db = b1 * m.db + (1.0 - b1) * g.db;
        v.db = b2 * v.db + (1.0 - b2) * g.db.cwiseProduct(g.db);
        net[i].b.array() -= lr * (m.db.array() / bc1) / ((v.db.array() / bc2).sqrt() + eps);
    }
}

void adam_step(ScalarAdam& state, double& param, double grad) {
    state.t += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad;
    const double mhat = state.m / (1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
    const double vhat = state.v / (1.0 - std::pow(state.beta2, static_cast<double>(state.t)));
    param -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
}

long param_count(const std::vector<DenseLayerSpec>& specs) {
    long n = 0;
    for (const auto& s : specs) n += static_cast<long>(s.in_dim) * s.out_dim + s.out_dim;
    return n;
}

long param_count(const Network& net) { return param_count(layer_specs(net)); }

long flop_count(const std::vector<DenseLayerSpec>& specs) {
    long n = 0;
    for (const auto& s : specs) n += 2L * s.in_dim * s.out_dim;
    return n;
}

namespace {

constexpr char kMagic[4] = {'A', 'I', 'R', 'X'};
constexpr std::uint32_t kParamsVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u8(std::string& buf, std::uint8_t v) { buf.push_back(static_cast<char>(v)); }

void put_f64(std::string& buf, double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
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
        if (pos_ + n > data_.size())
            throw FormatError(origin_ + ": truncated file", pos_);
    }
    std::string data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw FormatError("short write to " + path);
}

} // namespace

void save_layers(const std::string& path, const Network& layers) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kParamsVersion);
    put_u32(buf, static_cast<std::uint32_t>(layers.size()));
    for (const auto& layer : layers) {
        put_u32(buf, static_cast<std::uint32_t>(layer.in_dim()));
        put_u32(buf, static_cast<std::uint32_t>(layer.out_dim()));
        put_u8(buf, static_cast<std::uint8_t>(layer.act));
        for (int r = 0; r < layer.out_dim(); ++r)
            for (int c = 0; c < layer.in_dim(); ++c) put_f64(buf, layer.W(r, c));
        for (int r = 0; r < layer.out_dim(); ++r) put_f64(buf, layer.b(r));
    }
    write_file(path, buf);
}

Network load_layers(const std::string& path) {
    ByteReader rd(read_file(path), path);
    rd.expect_magic();
    const std::uint32_t version = rd.u32();
    if (version != kParamsVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    const std::uint32_t count = rd.u32();
    Network layers;
    layers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t in_dim = rd.u32();
        const std::uint32_t out_dim = rd.u32();
        const std::uint8_t act = rd.u8();
        if (in_dim == 0 || out_dim == 0 || in_dim > (1u << 20) || out_dim > (1u << 20))
            throw FormatError(path + ": implausible layer shape", rd.offset());
        if (act > 2) throw FormatError(path + ": unknown activation code", rd.offset());
        DenseLayer layer;
        layer.W.resize(out_dim, in_dim);
        layer.b.resize(out_dim);
        layer.act = static_cast<Activation>(act);
        for (std::uint32_t r = 0; r < out_dim; ++r)
            for (std::uint32_t c = 0; c < in_dim; ++c) layer.W(r, c) = rd.f64();
        for (std::uint32_t r = 0; r < out_dim; ++r) layer.b(r) = rd.f64();
        layers.push_back(std::move(layer));
    }
    if (!rd.exhausted()) throw FormatError(path + ": trailing bytes", rd.offset());
    return layers;
}

void export_layers_csv(const std::string& path, const Network& layers) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out << "layer,role,row,col,value\n";
    char num[40];
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        for (int r = 0; r < layer.out_dim(); ++r)
            for (int c = 0; c < layer.in_dim(); ++c) {
                std::snprintf(num, sizeof num, "%.17g", layer.W(r, c));
                out << i << ",weight," << r << ',' << c << ',' << num << '\n';
            }
        for (int r = 0; r < layer.out_dim(); ++r) {
            std::snprintf(num, sizeof num, "%.17g", layer.b(r));
            out << i << ",bias," << r << ",0," << num << '\n';
        }
    }
    if (!out) throw FormatError("short write to " + path);
}

} // namespace airx::nn
