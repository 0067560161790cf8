#include "crowd/nn/param_store.hpp"

#include <cmath>

#include "crowd/error.hpp"

namespace crowd::nn {

namespace {
constexpr std::string_view kModule = "neural-core";
}

struct AdamAccess {
    static void update(ParamStore& store, const AdamOptions& o) {
        ++store.step_;
        const double t = static_cast<double>(store.step_);
        const double c1 = 1.0 - std::pow(o.beta1, t);
        const double c2 = 1.0 - std::pow(o.beta2, t);
        for (auto& e : store.entries_) {
            e.m = o.beta1 * e.m + (1.0 - o.beta1) * e.grad;
            e.v = o.beta2 * e.v + (1.0 - o.beta2) * e.grad.cwiseAbs2();
            e.value.array() -= o.lr * (e.m.array() / c1) / ((e.v.array() / c2).sqrt() + o.eps);
            e.grad.setZero();
        }
    }
};

ParamStore::Id ParamStore::add(std::string name, Matrix init) {
    for (const auto& e : entries_) {
        if (e.name == name) throw Error(Errc::InvalidArgument, kModule, "duplicate parameter " + name);
    }
    Entry e;
    e.name = std::move(name);
    e.grad = Matrix::Zero(init.rows(), init.cols());
    e.m = e.grad;
    e.v = e.grad;
    e.value = std::move(init);
    entries_.push_back(std::move(e));
    return entries_.size() - 1;
}

ParamStore::Id ParamStore::find(std::string_view name) const {
    for (Id i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    throw Error(Errc::InvalidArgument, kModule, "unknown parameter " + std::string(name));
}

Eigen::Index ParamStore::parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) e.grad.setZero();
}

bool ParamStore::all_finite() const {
    for (const auto& e : entries_) {
        if (!e.value.allFinite()) return false;
    }
    return true;
}

void ParamStore::copy_values_from(const ParamStore& other) {
    if (other.size() != size()) throw Error(Errc::DimensionMismatch, kModule, "parameter count differs");
    for (Id i = 0; i < size(); ++i) {
        if (other.name(i) != name(i) || other.value(i).rows() != value(i).rows() ||
            other.value(i).cols() != value(i).cols()) {
            throw Error(Errc::DimensionMismatch, kModule, "parameter layout differs at " + name(i));
        }
        entries_[i].value = other.value(i);
    }
}

void adam_update(ParamStore& store, const AdamOptions& options) { AdamAccess::update(store, options); }

nlohmann::json to_json(const ParamStore& store) {
    nlohmann::json doc;
    doc["format"] = "crowd-params/1";
    doc["step"] = store.step();
    doc["params"] = nlohmann::json::array();
    for (ParamStore::Id i = 0; i < store.size(); ++i) {
        const auto& v = store.value(i);
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(v.size()));
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            for (Eigen::Index c = 0; c < v.cols(); ++c) values.push_back(v(r, c));
        }
        doc["params"].push_back({{"name", store.name(i)}, {"shape", {v.rows(), v.cols()}}, {"values", values}});
    }
    return doc;
}

namespace {

Matrix matrix_from_json(const nlohmann::json& p) {
    const auto rows = p.at("shape").at(0).get<Eigen::Index>();
    const auto cols = p.at("shape").at(1).get<Eigen::Index>();
    const auto& values = p.at("values");
    if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
        throw Error(Errc::ModelLoadFailure, kModule, "value count does not match shape for " + p.at("name").get<std::string>());
    }
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[k++].get<double>();
    }
    return m;
}

}  // namespace

ParamStore params_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "crowd-params/1") throw Error(Errc::ModelLoadFailure, kModule, "unknown format");
        ParamStore store;
        for (const auto& p : doc.at("params")) store.add(p.at("name").get<std::string>(), matrix_from_json(p));
        return store;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ModelLoadFailure, kModule, e.what());
    }
}

void load_values(ParamStore& store, const nlohmann::json& doc) {
    const auto loaded = params_from_json(doc);
    try {
        store.copy_values_from(loaded);
    } catch (const Error& e) {
        throw Error(Errc::ModelLoadFailure, kModule, e.what());
    }
}

}  // namespace crowd::nn
