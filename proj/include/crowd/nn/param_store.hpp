#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace crowd::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Named parameter matrices with gradient slots and optimizer moments.
class ParamStore {
public:
    using Id = std::size_t;

    Id add(std::string name, Matrix init);
    /// Throws InvalidArgument when the name is unknown.
    Id find(std::string_view name) const;

    std::size_t size() const { return entries_.size(); }
    const std::string& name(Id id) const { return entries_[id].name; }
    const Matrix& value(Id id) const { return entries_[id].value; }
    Matrix& value(Id id) { return entries_[id].value; }
    const Matrix& grad(Id id) const { return entries_[id].grad; }
    Matrix& grad(Id id) { return entries_[id].grad; }

    std::uint64_t step() const { return step_; }
    Eigen::Index parameter_count() const;

    void zero_grad();
    bool all_finite() const;

    /// Copy values from another store with identical names and shapes.
    void copy_values_from(const ParamStore& other);

private:
    struct Entry {
        std::string name;
        Matrix value;
        Matrix grad;
        Matrix m;  // Adam first moment
        Matrix v;  // Adam second moment
    };

    std::vector<Entry> entries_;
    std::uint64_t step_ = 0;

    friend struct AdamAccess;
};

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam step over every parameter; increments the step
/// counter and clears gradients.
void adam_update(ParamStore& store, const AdamOptions& options);

/// Checkpoint document: {"format", "step", "params": [{"name", "shape", "values"}]},
/// values row-major. Doubles are written in shortest round-trip form.
nlohmann::json to_json(const ParamStore& store);
ParamStore params_from_json(const nlohmann::json& doc);
/// Overwrite values of an existing store; names and shapes must match.
void load_values(ParamStore& store, const nlohmann::json& doc);

}  // namespace crowd::nn
