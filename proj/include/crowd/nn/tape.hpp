#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "crowd/nn/param_store.hpp"

namespace crowd::nn {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    std::int32_t id = -1;

    const Matrix& value() const;
    double scalar() const;
};

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so the reverse sweep is a single backward pass over the vector.
/// Rebuilt per training window.
class Tape {
public:
    /// Sized for a window of up to ~2048 events through a GRU + MLP head.
    static constexpr std::size_t kDefaultCapacity = 2048 * 48;

    explicit Tape(ParamStore* store = nullptr, std::size_t capacity = kDefaultCapacity);

    Var constant(Matrix value);
    Var constant(double value);
    /// Leaf bound to a stored parameter; one node per parameter per tape.
    Var param(ParamStore::Id id);

    const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    /// Gradient of the last backward() target w.r.t. this node.
    const Matrix& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Reverse sweep from a 1x1 loss; parameter gradients are accumulated
    /// (added) into the bound ParamStore. Throws NonFiniteLoss.
    void backward(Var loss);

    enum class Op : std::uint8_t {
        Leaf,
        MatMul,
        Add,
        AddBias,
        Sub,
        Mul,
        Affine,
        Sigmoid,
        Tanh,
        Softplus,
        Log,
        Exp,
        Square,
        Sum,
        Row,
    };

    Var push(Op op, Matrix value, std::int32_t a = -1, std::int32_t b = -1, double c = 0.0,
             Eigen::Index index = 0);

private:
    static constexpr auto kNoParam = std::numeric_limits<ParamStore::Id>::max();

    struct Node {
        Op op = Op::Leaf;
        std::int32_t a = -1;
        std::int32_t b = -1;
        double c = 0.0;
        Eigen::Index index = 0;
        ParamStore::Id param = kNoParam;
        Matrix value;
        Matrix grad;
    };

    ParamStore* store_;
    std::vector<Node> nodes_;
    std::vector<std::int32_t> param_nodes_;
};

// Differentiable free functions. Operands must come from the same tape.
Var matmul(Var a, Var b);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
/// Elementwise product.
Var cwise_mul(Var a, Var b);
/// a (n x m) plus column vector b (n x 1) broadcast over columns.
Var add_bias(Var a, Var b);
/// scale * a + shift, elementwise.
Var affine(Var a, double scale, double shift = 0.0);
Var operator*(Var a, double s);
Var operator*(double s, Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var log(Var a);
Var exp(Var a);
Var square(Var a);
/// Sum of all entries, as a 1x1 node.
Var sum(Var a);
Var row(Var a, Eigen::Index i);

// Scalar kernels shared by the taped ops and the plain forward paths.
double softplus(double x);
double sigmoid(double x);

}  // namespace crowd::nn
