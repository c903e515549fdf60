#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "airx/rng.hpp"

namespace airx::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Activation : std::uint8_t { none = 0, relu = 1, sigmoid = 2 };

/// Shape-only description of a dense layer, used for counting and
/// for constructing fresh networks.
struct DenseLayerSpec {
    int in_dim = 0;
    int out_dim = 0;
    Activation act = Activation::none;
};

/// Fully connected layer y = act(W x + b). W is out_dim x in_dim.
/// Frozen layers (trainable == false) pass gradients through but are
/// never updated by the optimizer.
struct DenseLayer {
    Mat W;
    Vec b;
    Activation act = Activation::none;
    bool trainable = true;

    int in_dim() const { return static_cast<int>(W.cols()); }
    int out_dim() const { return static_cast<int>(W.rows()); }
};

/// Layers applied in sequence. Inputs and activations are matrices with
/// one sample per column (dim x batch).
using Network = std::vector<DenseLayer>;

/// Fresh layer with weights uniform in (-1/sqrt(in_dim), +1/sqrt(in_dim))
/// and zero biases.
DenseLayer init_layer(const DenseLayerSpec& spec, Rng& rng);
Network init_network(const std::vector<DenseLayerSpec>& specs, Rng& rng);

std::vector<DenseLayerSpec> layer_specs(const Network& net);

Mat apply_activation(Activation act, const Mat& z);

/// Inference-only forward pass.
Mat forward(const Network& net, const Mat& input);

/// Intermediate values kept for the backward pass.
struct ForwardCache {
    std::vector<Mat> inputs;   // inputs[i] feeds layer i; inputs[L] is the output
    std::vector<Mat> pre_act;  // pre_act[i] = W_i * inputs[i] + b_i
};

Mat forward(const Network& net, const Mat& input, ForwardCache& cache);

/// Mean over all elements of the squared difference.
double mse_loss(const Mat& pred, const Mat& target);

/// d(mse_loss)/d(pred).
Mat mse_loss_grad(const Mat& pred, const Mat& target);

struct LayerGrads {
    Mat dW;
    Vec db;
};

/// Reverse-mode gradients for every layer given dL/d(output). Returns
/// dL/d(input) so the chain can continue upstream of the network. Frozen
/// layers get zero parameter gradients but still propagate.
Mat backward(const Network& net, const ForwardCache& cache, const Mat& output_grad,
             std::vector<LayerGrads>& grads);

/// Adam with bias correction. One state per network; frozen layers keep
/// zero moments and are skipped, so their parameters stay bit-identical.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<LayerGrads> m;
    std::vector<LayerGrads> v;
};

AdamState make_adam(const Network& net, double lr);
void adam_step(AdamState& state, Network& net, const std::vector<LayerGrads>& grads);

/// Adam for a single scalar parameter.
struct ScalarAdam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    double m = 0.0;
    double v = 0.0;
};

void adam_step(ScalarAdam& state, double& param, double grad);

/// Trainable parameter count: sum of in*out + out over the layers.
long param_count(const std::vector<DenseLayerSpec>& specs);
long param_count(const Network& net);

/// Forward multiply-accumulate cost: sum of 2 * in * out over the layers.
long flop_count(const std::vector<DenseLayerSpec>& specs);

/// Binary checkpoint of a flat layer list. Little-endian; layout:
/// "AIRX", u32 version, u32 layer count, then per layer u32 in_dim,
/// u32 out_dim, u8 activation, row-major f64 weights, f64 biases.
void save_layers(const std::string& path, const Network& layers);
Network load_layers(const std::string& path);

/// Plain-text dump: one row per parameter, "layer,role,row,col,value".
void export_layers_csv(const std::string& path, const Network& layers);

} // namespace airx::nn
