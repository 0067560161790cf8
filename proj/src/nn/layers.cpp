#include "crowd/nn/layers.hpp"

#include <cmath>

namespace crowd::nn {

Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = uniform(rng, -a, a);
    }
    return m;
}

GruCellSpec GruCellSpec::create(ParamStore& store, const std::string& prefix, Eigen::Index input_dim,
                                Eigen::Index hidden_dim, Rng& rng) {
    GruCellSpec c;
    c.input_dim = input_dim;
    c.hidden_dim = hidden_dim;
    const auto gate = [&](const char* g, ParamStore::Id& w, ParamStore::Id& u, ParamStore::Id& b) {
        w = store.add(prefix + ".w_" + g, uniform_init(hidden_dim, input_dim, input_dim, rng));
        u = store.add(prefix + ".u_" + g, uniform_init(hidden_dim, hidden_dim, hidden_dim, rng));
        b = store.add(prefix + ".b_" + g, uniform_init(hidden_dim, 1, hidden_dim, rng));
    };
    gate("z", c.w_z, c.u_z, c.b_z);
    gate("r", c.w_r, c.u_r, c.b_r);
    gate("h", c.w_h, c.u_h, c.b_h);
    return c;
}

GruCellSpec GruCellSpec::bind(const ParamStore& store, const std::string& prefix) {
    GruCellSpec c;
    c.w_z = store.find(prefix + ".w_z");
    c.u_z = store.find(prefix + ".u_z");
    c.b_z = store.find(prefix + ".b_z");
    c.w_r = store.find(prefix + ".w_r");
    c.u_r = store.find(prefix + ".u_r");
    c.b_r = store.find(prefix + ".b_r");
    c.w_h = store.find(prefix + ".w_h");
    c.u_h = store.find(prefix + ".u_h");
    c.b_h = store.find(prefix + ".b_h");
    c.input_dim = store.value(c.w_z).cols();
    c.hidden_dim = store.value(c.w_z).rows();
    return c;
}

MlpSpec MlpSpec::create(ParamStore& store, const std::string& prefix, const std::vector<Eigen::Index>& sizes,
                        const std::vector<Activation>& activations, Rng& rng) {
    if (sizes.size() < 2 || activations.size() != sizes.size() - 1) {
        throw Error(Errc::InvalidArgument, "neural-core", "MLP needs one activation per layer");
    }
    MlpSpec mlp;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        DenseLayer l;
        l.in_dim = sizes[i];
        l.out_dim = sizes[i + 1];
        l.activation = activations[i];
        const auto tag = prefix + "." + std::to_string(i);
        l.weight = store.add(tag + ".weight", uniform_init(l.out_dim, l.in_dim, l.in_dim, rng));
        l.bias = store.add(tag + ".bias", uniform_init(l.out_dim, 1, l.in_dim, rng));
        mlp.layers.push_back(l);
    }
    return mlp;
}

MlpSpec MlpSpec::bind(const ParamStore& store, const std::string& prefix, const std::vector<Activation>& activations) {
    MlpSpec mlp;
    for (std::size_t i = 0; i < activations.size(); ++i) {
        DenseLayer l;
        const auto tag = prefix + "." + std::to_string(i);
        l.weight = store.find(tag + ".weight");
        l.bias = store.find(tag + ".bias");
        l.activation = activations[i];
        l.in_dim = store.value(l.weight).cols();
        l.out_dim = store.value(l.weight).rows();
        if (!mlp.layers.empty() && mlp.layers.back().out_dim != l.in_dim) {
            throw Error(Errc::DimensionMismatch, "neural-core", "MLP layer dims incompatible at " + tag);
        }
        mlp.layers.push_back(l);
    }
    return mlp;
}

Var activate(Var x, Activation act) {
    switch (act) {
        case Activation::Tanh: return tanh(x);
        case Activation::Softplus: return softplus(x);
        case Activation::Identity: break;
    }
    return x;
}

Var gru_step(const GruCellSpec& cell, Var x, Var h) {
    if (x.value().rows() != cell.input_dim || h.value().rows() != cell.hidden_dim) {
        throw Error(Errc::DimensionMismatch, "neural-core", "gru_step: input or hidden size mismatch");
    }
    Tape& t = *x.tape;
    const auto gate = [&](ParamStore::Id w, ParamStore::Id u, ParamStore::Id b, Var hidden) {
        return add_bias(matmul(t.param(w), x) + matmul(t.param(u), hidden), t.param(b));
    };
    const Var z = sigmoid(gate(cell.w_z, cell.u_z, cell.b_z, h));
    const Var r = sigmoid(gate(cell.w_r, cell.u_r, cell.b_r, h));
    const Var cand = tanh(gate(cell.w_h, cell.u_h, cell.b_h, cwise_mul(r, h)));
    // (1 - z) * h + z * cand  ==  h + z * (cand - h)
    return h + cwise_mul(z, cand - h);
}

Var mlp_forward(const MlpSpec& mlp, Var x) {
    Tape& t = *x.tape;
    Var a = x;
    for (const auto& layer : mlp.layers) {
        a = activate(add_bias(matmul(t.param(layer.weight), a), t.param(layer.bias)), layer.activation);
    }
    return a;
}

}  // namespace crowd::nn
