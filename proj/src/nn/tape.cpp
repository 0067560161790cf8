#include "crowd/nn/tape.hpp"

#include <cmath>

#include "crowd/error.hpp"

namespace crowd::nn {

namespace {
constexpr std::string_view kModule = "neural-core";

Tape& tape_of(Var a, Var b) {
    if (a.tape == nullptr || a.tape != b.tape) throw Error(Errc::InvalidArgument, kModule, "operands from different tapes");
    return *a.tape;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(Errc::DimensionMismatch, kModule, std::string(what) + ": shape mismatch");
    }
}
}  // namespace

double softplus(double x) {
    const double y = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    // exp underflows below about -745; keep the result strictly positive.
    return std::max(y, std::numeric_limits<double>::min());
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

const Matrix& Var::value() const { return tape->value(*this); }

double Var::scalar() const {
    const auto& v = value();
    if (v.size() != 1) throw Error(Errc::DimensionMismatch, kModule, "scalar() on non-scalar node");
    return v(0, 0);
}

Tape::Tape(ParamStore* store, std::size_t capacity) : store_(store) {
    nodes_.reserve(capacity);
    if (store_) param_nodes_.assign(store_->size(), -1);
}

Var Tape::push(Op op, Matrix value, std::int32_t a, std::int32_t b, double c, Eigen::Index index) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.c = c;
    n.index = index;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Matrix value) { return push(Op::Leaf, std::move(value)); }

Var Tape::constant(double value) { return push(Op::Leaf, Matrix::Constant(1, 1, value)); }

Var Tape::param(ParamStore::Id id) {
    if (!store_ || id >= store_->size()) throw Error(Errc::InvalidArgument, kModule, "parameter not in bound store");
    auto& cached = param_nodes_[id];
    if (cached >= 0) return {this, cached};
    auto v = push(Op::Leaf, store_->value(id));
    nodes_.back().param = id;
    cached = v.id;
    return v;
}

void Tape::backward(Var loss) {
    if (loss.tape != this) throw Error(Errc::InvalidArgument, kModule, "loss from another tape");
    const auto& lv = value(loss);
    if (lv.size() != 1) throw Error(Errc::DimensionMismatch, kModule, "loss must be 1x1");
    if (!std::isfinite(lv(0, 0))) throw Error(Errc::NonFiniteLoss, kModule, "loss is not finite");

    const auto last = static_cast<std::size_t>(loss.id);
    for (std::size_t i = 0; i <= last; ++i) nodes_[i].grad.setZero(nodes_[i].value.rows(), nodes_[i].value.cols());
    nodes_[last].grad(0, 0) = 1.0;

    for (std::size_t k = last + 1; k-- > 0;) {
        Node& n = nodes_[k];
        if (n.op == Op::Leaf) continue;
        const Matrix& g = n.grad;
        Node* a = n.a >= 0 ? &nodes_[static_cast<std::size_t>(n.a)] : nullptr;
        Node* b = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)] : nullptr;
        switch (n.op) {
            case Op::Leaf: break;
            case Op::MatMul:
                a->grad.noalias() += g * b->value.transpose();
                b->grad.noalias() += a->value.transpose() * g;
                break;
            case Op::Add:
                a->grad += g;
                b->grad += g;
                break;
            case Op::AddBias:
                a->grad += g;
                b->grad += g.rowwise().sum();
                break;
            case Op::Sub:
                a->grad += g;
                b->grad -= g;
                break;
            case Op::Mul:
                a->grad.array() += g.array() * b->value.array();
                b->grad.array() += g.array() * a->value.array();
                break;
            case Op::Affine: a->grad += n.c * g; break;
            case Op::Sigmoid: a->grad.array() += g.array() * n.value.array() * (1.0 - n.value.array()); break;
            case Op::Tanh: a->grad.array() += g.array() * (1.0 - n.value.array().square()); break;
            case Op::Softplus: a->grad.array() += g.array() * a->value.unaryExpr([](double x) { return sigmoid(x); }).array(); break;
            case Op::Log: a->grad.array() += g.array() / a->value.array(); break;
            case Op::Exp: a->grad.array() += g.array() * n.value.array(); break;
            case Op::Square: a->grad.array() += 2.0 * g.array() * a->value.array(); break;
            case Op::Sum: a->grad.array() += g(0, 0); break;
            case Op::Row: a->grad.row(n.index) += g; break;
        }
    }

    if (store_) {
        for (std::size_t id = 0; id < param_nodes_.size(); ++id) {
            const auto node = param_nodes_[id];
            if (node >= 0 && static_cast<std::size_t>(node) <= last) {
                store_->grad(id) += nodes_[static_cast<std::size_t>(node)].grad;
            }
        }
    }
}

Var matmul(Var a, Var b) {
    auto& t = tape_of(a, b);
    if (a.value().cols() != b.value().rows()) throw Error(Errc::DimensionMismatch, kModule, "matmul: inner dims differ");
    return t.push(Tape::Op::MatMul, a.value() * b.value(), a.id, b.id);
}

Var operator+(Var a, Var b) {
    auto& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "add");
    return t.push(Tape::Op::Add, a.value() + b.value(), a.id, b.id);
}

Var operator-(Var a, Var b) {
    auto& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "sub");
    return t.push(Tape::Op::Sub, a.value() - b.value(), a.id, b.id);
}

Var cwise_mul(Var a, Var b) {
    auto& t = tape_of(a, b);
    require_same_shape(a.value(), b.value(), "cwise_mul");
    return t.push(Tape::Op::Mul, a.value().cwiseProduct(b.value()), a.id, b.id);
}

Var add_bias(Var a, Var b) {
    auto& t = tape_of(a, b);
    if (b.value().cols() != 1 || b.value().rows() != a.value().rows()) {
        throw Error(Errc::DimensionMismatch, kModule, "add_bias: bias must be a column matching rows");
    }
    Matrix out = a.value().colwise() + b.value().col(0);
    return t.push(Tape::Op::AddBias, std::move(out), a.id, b.id);
}

Var affine(Var a, double scale, double shift) {
    Matrix out = (scale * a.value().array() + shift).matrix();
    return a.tape->push(Tape::Op::Affine, std::move(out), a.id, -1, scale);
}

Var operator*(Var a, double s) { return affine(a, s); }
Var operator*(double s, Var a) { return affine(a, s); }

Var sigmoid(Var a) { return a.tape->push(Tape::Op::Sigmoid, a.value().unaryExpr([](double x) { return sigmoid(x); }), a.id); }

Var tanh(Var a) { return a.tape->push(Tape::Op::Tanh, a.value().array().tanh().matrix(), a.id); }

Var softplus(Var a) {
    return a.tape->push(Tape::Op::Softplus, a.value().unaryExpr([](double x) { return softplus(x); }), a.id);
}

Var log(Var a) { return a.tape->push(Tape::Op::Log, a.value().array().log().matrix(), a.id); }

Var exp(Var a) { return a.tape->push(Tape::Op::Exp, a.value().array().exp().matrix(), a.id); }

Var square(Var a) { return a.tape->push(Tape::Op::Square, a.value().array().square().matrix(), a.id); }

Var sum(Var a) { return a.tape->push(Tape::Op::Sum, Matrix::Constant(1, 1, a.value().sum()), a.id); }

Var row(Var a, Eigen::Index i) {
    if (i < 0 || i >= a.value().rows()) throw Error(Errc::DimensionMismatch, kModule, "row index out of range");
    return a.tape->push(Tape::Op::Row, a.value().row(i), a.id, -1, 0.0, i);
}

}  // namespace crowd::nn
