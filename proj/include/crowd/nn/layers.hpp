#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "crowd/error.hpp"
#include "crowd/nn/param_store.hpp"
#include "crowd/nn/tape.hpp"
#include "crowd/random.hpp"

namespace crowd::nn {

/// Matrix with entries uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);

/// Gated recurrent cell, h' = (1 - z) * h + z * h~ with
///   z  = sigma(W_z x + U_z h + b_z)
///   r  = sigma(W_r x + U_r h + b_r)
///   h~ = tanh(W_h x + U_h (r * h) + b_h)
struct GruCellSpec {
    Eigen::Index input_dim = 0;
    Eigen::Index hidden_dim = 0;
    ParamStore::Id w_z{}, u_z{}, b_z{};
    ParamStore::Id w_r{}, u_r{}, b_r{};
    ParamStore::Id w_h{}, u_h{}, b_h{};

    static GruCellSpec create(ParamStore& store, const std::string& prefix, Eigen::Index input_dim,
                              Eigen::Index hidden_dim, Rng& rng);
    /// Rebind to parameters already present in `store` under `prefix`.
    static GruCellSpec bind(const ParamStore& store, const std::string& prefix);
};

enum class Activation { Tanh, Softplus, Identity };

struct DenseLayer {
    ParamStore::Id weight{};
    ParamStore::Id bias{};
    Activation activation = Activation::Identity;
    Eigen::Index in_dim = 0;
    Eigen::Index out_dim = 0;
};

struct MlpSpec {
    std::vector<DenseLayer> layers;

    Eigen::Index in_dim() const { return layers.front().in_dim; }
    Eigen::Index out_dim() const { return layers.back().out_dim; }

    /// sizes = {in, hidden..., out}; one activation per layer.
    static MlpSpec create(ParamStore& store, const std::string& prefix, const std::vector<Eigen::Index>& sizes,
                          const std::vector<Activation>& activations, Rng& rng);
    static MlpSpec bind(const ParamStore& store, const std::string& prefix, const std::vector<Activation>& activations);
};

template <typename Derived>
Matrix activate(const Eigen::MatrixBase<Derived>& x, Activation act) {
    switch (act) {
        case Activation::Tanh: return x.array().tanh().matrix();
        case Activation::Softplus: return x.unaryExpr([](double v) { return softplus(v); });
        case Activation::Identity: break;
    }
    return x;
}

Var activate(Var x, Activation act);

/// Plain forward step (no tape).
template <typename DerivedX, typename DerivedH>
Vector gru_step(const ParamStore& store, const GruCellSpec& cell, const Eigen::MatrixBase<DerivedX>& x,
                const Eigen::MatrixBase<DerivedH>& h) {
    if (x.rows() != cell.input_dim || h.rows() != cell.hidden_dim || x.cols() != 1 || h.cols() != 1) {
        throw Error(Errc::DimensionMismatch, "neural-core", "gru_step: input or hidden size mismatch");
    }
    const auto sig = [](double v) { return sigmoid(v); };
    const Vector z = (store.value(cell.w_z) * x + store.value(cell.u_z) * h + store.value(cell.b_z)).unaryExpr(sig);
    const Vector r = (store.value(cell.w_r) * x + store.value(cell.u_r) * h + store.value(cell.b_r)).unaryExpr(sig);
    const Vector rh = r.cwiseProduct(h);
    const Vector cand =
        (store.value(cell.w_h) * x + store.value(cell.u_h) * rh + store.value(cell.b_h)).array().tanh().matrix();
    return (Vector::Ones(h.rows()) - z).cwiseProduct(h) + z.cwiseProduct(cand);
}

/// Taped step; parameters are pulled from the tape's bound store.
Var gru_step(const GruCellSpec& cell, Var x, Var h);

/// Plain forward; columns of x are independent samples.
template <typename Derived>
Matrix mlp_forward(const ParamStore& store, const MlpSpec& mlp, const Eigen::MatrixBase<Derived>& x) {
    if (x.rows() != mlp.in_dim()) throw Error(Errc::DimensionMismatch, "neural-core", "mlp_forward: input size mismatch");
    Matrix a = x;
    for (const auto& layer : mlp.layers) {
        Matrix pre = store.value(layer.weight) * a;
        pre.colwise() += store.value(layer.bias).col(0);
        a = activate(pre, layer.activation);
    }
    return a;
}

Var mlp_forward(const MlpSpec& mlp, Var x);

}  // namespace crowd::nn
