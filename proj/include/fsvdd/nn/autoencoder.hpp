#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/nn/activations.hpp"
#include "fsvdd/types.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fsvdd::nn {

/// One affine layer followed by an elementwise activation.
///
/// `b` holds the raw activation parameter: empty for parameter-free
/// activations, one entry shared by the layer, or one entry per output node.
template <Field T>
struct DenseLayer {
    Matrix<T> weights;  // out x in
    Vector<T> bias;
    Activation activation = Activation::linear;
    RealVector b;

    [[nodiscard]] Eigen::Index rows() const { return weights.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return weights.cols(); }

    /// Parameter value used by the activation of `node`.
    [[nodiscard]] double param(Eigen::Index node) const {
        if (b.size() == 0) return 0.0;
        const double raw = b.size() == 1 ? b[0] : b[node];
        return activation == Activation::ead ? effective_ead_b(raw) : raw;
    }
};

/// Dense autoencoder over real (T = double) or complex (T = Complex) inputs.
/// The complex and real models run through the same templates.
template <Field T>
struct Autoencoder {
    Eigen::Index input_dim = 0;
    std::vector<DenseLayer<T>> layers;
};

template <Field T>
void validate(const Autoencoder<T>& ae) {
    if (ae.layers.empty()) throw ConfigError("autoencoder: no layers");
    Eigen::Index width = ae.input_dim;
    for (size_t i = 0; i < ae.layers.size(); ++i) {
        const auto& l = ae.layers[i];
        const std::string where = "autoencoder layer " + std::to_string(i);
        if (l.cols() != width) throw DataError(where + ": input width mismatch");
        if (l.bias.size() != l.rows()) throw DataError(where + ": bias size mismatch");
        if (!l.weights.allFinite() || !l.bias.allFinite()) throw DataError(where + ": non-finite parameter");
        if (has_parameter(l.activation)) {
            if (l.b.size() != 1 && l.b.size() != l.rows()) throw DataError(where + ": bad activation parameter size");
        } else if (l.b.size() != 0) {
            throw DataError(where + ": activation takes no parameter");
        }
        if constexpr (is_complex_v<T>) {
            if (l.activation == Activation::real_relu) throw ConfigError(where + ": relu needs a real model, use crelu");
        } else {
            if (l.activation == Activation::crelu) throw ConfigError(where + ": crelu needs a complex model");
        }
        width = l.rows();
    }
    if (width != ae.input_dim) throw DataError("autoencoder: output width differs from input_dim");
}

struct ArchitectureConfig {
    Eigen::Index input_dim = 1501;
    std::vector<Eigen::Index> hidden = {64, 64, 32, 64, 64};
    Activation activation = Activation::real_relu;
    bool per_node_b = false;
    double b_init = 1.0;
    std::uint64_t seed = 0;
};

/// Builds an autoencoder with `hidden` activated layers and a linear output
/// layer back to input_dim.
///
/// Weights are Glorot-normal: real models draw N(0, 2/(fan_in+fan_out));
/// complex models draw real and imaginary parts from N(0, 1/(fan_in+fan_out))
/// each, giving the same total variance. Biases start at zero.
template <Field T>
Autoencoder<T> make_autoencoder(const ArchitectureConfig& cfg) {
    if (cfg.input_dim < 1) throw ConfigError("autoencoder: input_dim must be >= 1");
    std::mt19937_64 rng(cfg.seed);
    Autoencoder<T> ae;
    ae.input_dim = cfg.input_dim;
    std::vector<Eigen::Index> widths = cfg.hidden;
    widths.push_back(cfg.input_dim);
    Eigen::Index fan_in = cfg.input_dim;
    for (size_t i = 0; i < widths.size(); ++i) {
        const Eigen::Index fan_out = widths[i];
        if (fan_out < 1) throw ConfigError("autoencoder: layer width must be >= 1");
        const bool last = i + 1 == widths.size();
        DenseLayer<T> layer;
        const double var = 2.0 / static_cast<double>(fan_in + fan_out) / real_dof<T>;
        std::normal_distribution<double> normal(0.0, std::sqrt(var));
        layer.weights.resize(fan_out, fan_in);
        for (Eigen::Index c = 0; c < fan_in; ++c) {
            for (Eigen::Index r = 0; r < fan_out; ++r) {
                if constexpr (is_complex_v<T>) {
                    const double re = normal(rng);
                    layer.weights(r, c) = T(re, normal(rng));
                } else {
                    layer.weights(r, c) = normal(rng);
                }
            }
        }
        layer.bias = Vector<T>::Zero(fan_out);
        layer.activation = last ? Activation::linear : cfg.activation;
        if (has_parameter(layer.activation))
            layer.b = RealVector::Constant(cfg.per_node_b ? fan_out : 1, cfg.b_init);
        ae.layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    validate(ae);
    return ae;
}

// ---------------------------------------------------------------------------
// Forward pass

template <Field T>
Matrix<T> apply_activation(const DenseLayer<T>& layer, const Matrix<T>& pre) {
    if (layer.activation == Activation::linear) return pre;
    Matrix<T> out(pre.rows(), pre.cols());
    for (Eigen::Index r = 0; r < pre.rows(); ++r) {
        const double b = layer.param(r);
        for (Eigen::Index c = 0; c < pre.cols(); ++c) out(r, c) = activate(layer.activation, pre(r, c), b);
    }
    return out;
}

/// Forward pass over a batch stored column-wise (input_dim x batch).
template <Field T>
Matrix<T> forward(const Autoencoder<T>& ae, const Matrix<T>& batch) {
    if (batch.rows() != ae.input_dim) throw DataError("forward: input dimension mismatch");
    Matrix<T> h = batch;
    for (const auto& layer : ae.layers) {
        Matrix<T> pre = layer.weights * h;
        pre.colwise() += layer.bias;
        h = apply_activation(layer, pre);
    }
    return h;
}

template <Field T>
Vector<T> forward(const Autoencoder<T>& ae, const Vector<T>& x) {
    if (x.size() != ae.input_dim) throw DataError("forward: input dimension mismatch");
    Matrix<T> out = forward(ae, Matrix<T>(x));
    return out.col(0);
}

/// Post-activation outputs of every layer for a batch.
template <Field T>
std::vector<Matrix<T>> forward_trace(const Autoencoder<T>& ae, const Matrix<T>& batch) {
    if (batch.rows() != ae.input_dim) throw DataError("forward: input dimension mismatch");
    std::vector<Matrix<T>> outs;
    Matrix<T> h = batch;
    for (const auto& layer : ae.layers) {
        Matrix<T> pre = layer.weights * h;
        pre.colwise() += layer.bias;
        h = apply_activation(layer, pre);
        outs.push_back(h);
    }
    return outs;
}

template <Field T>
Matrix<T> stack_columns(std::span<const Vector<T>> xs) {
    if (xs.empty()) return {};
    Matrix<T> m(xs.front().size(), static_cast<Eigen::Index>(xs.size()));
    for (size_t i = 0; i < xs.size(); ++i) {
        if (xs[i].size() != m.rows()) throw DataError("stack_columns: mixed vector lengths");
        m.col(static_cast<Eigen::Index>(i)) = xs[i];
    }
    return m;
}

/// Sum over the batch of squared residual moduli.
template <Field T>
double reconstruction_loss(const Autoencoder<T>& ae, const Matrix<T>& batch) {
    if (batch.cols() == 0) throw DataError("reconstruction_loss: empty batch");
    return (batch - forward(ae, batch)).squaredNorm();
}

template <Field T>
double reconstruction_loss(const Autoencoder<T>& ae, std::span<const Vector<T>> batch) {
    if (batch.empty()) throw DataError("reconstruction_loss: empty batch");
    return reconstruction_loss(ae, stack_columns(batch));
}

// ---------------------------------------------------------------------------
// Reverse-mode gradient

/// Gradient with the same layout as the model. Complex entries hold
/// dL/dRe + i dL/dIm of the matching parameter.
template <Field T>
struct LayerGradient {
    Matrix<T> weights;
    Vector<T> bias;
    RealVector b;
};

template <Field T>
using Gradient = std::vector<LayerGradient<T>>;

template <Field T>
Gradient<T> zero_gradient(const Autoencoder<T>& ae) {
    Gradient<T> g;
    for (const auto& l : ae.layers)
        g.push_back({Matrix<T>::Zero(l.rows(), l.cols()), Vector<T>::Zero(l.rows()), RealVector::Zero(l.b.size())});
    return g;
}

/// Loss of the batch and its gradient w.r.t. every real degree of freedom.
/// ReLU-family kinks use the zero subgradient.
template <Field T>
double loss_and_gradient(const Autoencoder<T>& ae, const Matrix<T>& batch, Gradient<T>& grad) {
    if (batch.rows() != ae.input_dim) throw DataError("gradient: input dimension mismatch");
    if (batch.cols() == 0) throw DataError("gradient: empty batch");
    const size_t n_layers = ae.layers.size();
    std::vector<Matrix<T>> inputs(n_layers);
    std::vector<Matrix<T>> pre(n_layers);
    Matrix<T> h = batch;
    for (size_t i = 0; i < n_layers; ++i) {
        const auto& layer = ae.layers[i];
        inputs[i] = h;
        pre[i].noalias() = layer.weights * h;
        pre[i].colwise() += layer.bias;
        h = apply_activation(layer, pre[i]);
    }
    const Matrix<T> diff = h - batch;
    const double loss = diff.squaredNorm();

    grad = zero_gradient(ae);
    Matrix<T> g = 2.0 * diff;
    for (size_t i = n_layers; i-- > 0;) {
        const auto& layer = ae.layers[i];
        auto& lg = grad[i];
        if (layer.activation != Activation::linear) {
            const bool per_node = layer.b.size() > 1;
            for (Eigen::Index r = 0; r < g.rows(); ++r) {
                const double b = layer.param(r);
                double dparam = 0.0;
                for (Eigen::Index c = 0; c < g.cols(); ++c)
                    g(r, c) = activate_backward(layer.activation, pre[i](r, c), g(r, c), b, dparam);
                if (layer.b.size() > 0) lg.b[per_node ? r : 0] += dparam;
            }
            if (layer.activation == Activation::ead) {
                for (Eigen::Index k = 0; k < layer.b.size(); ++k)
                    if (layer.b[k] < kEadMinB) lg.b[k] = 0.0;
            }
        }
        lg.weights.noalias() = g * inputs[i].adjoint();
        lg.bias = g.rowwise().sum();
        if (i > 0) g = layer.weights.adjoint() * g;
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Flat real views over parameters, used by the optimizer and by
// finite-difference checks.

template <Field T, class Scalar>
std::span<double> real_view(Eigen::PlainObjectBase<Scalar>& m) {
    return {reinterpret_cast<double*>(m.data()), static_cast<size_t>(m.size()) * real_dof<T>};
}

/// Calls fn(span) for each parameter block of the model in a fixed order:
/// per layer weights, bias, activation parameter.
template <Field T, class Fn>
void for_each_parameter_block(Autoencoder<T>& ae, Fn&& fn) {
    for (auto& l : ae.layers) {
        fn(real_view<T>(l.weights));
        fn(real_view<T>(l.bias));
        if (l.b.size() > 0) fn(real_view<double>(l.b));
    }
}

template <Field T, class Fn>
void for_each_gradient_block(const Autoencoder<T>& ae, Gradient<T>& grad, Fn&& fn) {
    for (size_t i = 0; i < grad.size(); ++i) {
        fn(real_view<T>(grad[i].weights));
        fn(real_view<T>(grad[i].bias));
        if (ae.layers[i].b.size() > 0) fn(real_view<double>(grad[i].b));
    }
}

template <Field T>
size_t parameter_count(const Autoencoder<T>& ae) {
    size_t n = 0;
    for (const auto& l : ae.layers)
        n += static_cast<size_t>(l.weights.size() + l.bias.size()) * real_dof<T> + static_cast<size_t>(l.b.size());
    return n;
}

}  // namespace fsvdd::nn
