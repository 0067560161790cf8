#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "crowd/nn/layers.hpp"
#include "crowd/nn/param_store.hpp"
#include "crowd/nn/tape.hpp"
#include "crowd/temporal/sequence.hpp"
#include "crowd/temporal/weibull.hpp"
#include "json.hpp"

namespace crowd::temporal {

struct NtppArchitecture {
    Eigen::Index hidden_dim = 32;
    Eigen::Index head_units = 32;
};

/// Recurrent temporal point process for one spawn area. A GRU encodes the
/// history of inter-event gaps; an MLP head maps the hidden state to the
/// Weibull parameters of the next gap:
///   shape = softplus(head_0(h)),  scale = time_scale * softplus(head_1(h)).
/// Each gap is fed back as (log(1 + gap), gap / window).
class NtppModel {
public:
    static constexpr Eigen::Index kInputDim = 2;

    /// Fresh model. The head's output bias starts at softplus^-1(1), so an
    /// untrained model is close to an exponential with mean time_scale.
    static NtppModel create(int spawn_id, double window, double overlap, double time_scale, std::uint64_t seed,
                            const NtppArchitecture& arch = {});

    int spawn_id() const { return spawn_id_; }
    double window() const { return window_; }
    double overlap() const { return overlap_; }
    double time_scale() const { return time_scale_; }
    const NtppArchitecture& architecture() const { return arch_; }

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const nn::GruCellSpec& encoder() const { return gru_; }
    const nn::MlpSpec& head() const { return head_; }
    nn::ParamStore::Id initial_state() const { return h0_; }

    nn::Vector features(double gap) const;
    Weibull distribution(const nn::Vector& hidden) const;
    nn::Vector advance(const nn::Vector& hidden, double gap) const;
    nn::Vector learned_initial_state() const { return params_.value(h0_).col(0); }

    /// Taped counterparts used for training.
    nn::Var features(nn::Tape& tape, double gap) const;
    /// Returns the (shape, scale) nodes.
    std::pair<nn::Var, nn::Var> distribution(nn::Var hidden) const;

private:
    int spawn_id_ = 0;
    double window_ = 0.0;
    double overlap_ = 0.0;
    double time_scale_ = 1.0;
    NtppArchitecture arch_;
    nn::ParamStore params_;
    nn::GruCellSpec gru_;
    nn::MlpSpec head_;
    nn::ParamStore::Id h0_{};

    friend NtppModel ntpp_from_json(const nlohmann::json& doc);
};

/// -[sum_i log f(gap_i | h_i) + log S(tail_gap | h_last)], starting from the
/// learned initial state. Throws NonFiniteLoss if a gap is not positive.
double nll_window(const NtppModel& model, const TrainingWindow& window);
nn::Var nll_window(nn::Tape& tape, const NtppModel& model, const TrainingWindow& window);

struct NtppTrainOptions {
    double window = 1000.0;
    double overlap = 50.0;
    int epochs = 500;
    double lr = 1e-4;
    std::uint64_t seed = 0;
    /// Stop after this many epochs without an improvement of min_delta.
    int patience = 50;
    double min_delta = 1e-5;
    /// Windows accumulated per optimizer step.
    std::size_t batch_windows = 1;
    NtppArchitecture arch;
};

struct NtppTrainReport {
    std::vector<double> epoch_loss;
    int best_epoch = -1;
    double best_loss = 0.0;
    bool early_stopped = false;
};

/// Adam on the mean window NLL. Returns the parameters of the best epoch.
/// Throws NoTrainingData when no window holds an event.
NtppModel train_ntpp(const SpawnSequence& seq, const NtppTrainOptions& options, NtppTrainReport* report = nullptr);

/// Autoregressive sampling over [0, length). With n_rollouts > 1 the interval
/// is split into equal segments, each an independent rollout, re-based and
/// concatenated. Every rollout starts from a standard-normal hidden state.
SpawnSequence sample_rollout(const NtppModel& model, double length, int n_rollouts, std::uint64_t seed);

/// Homogeneous Poisson baseline.
struct PoissonModel {
    int spawn_id = 0;
    double rate = 0.0;
};

/// Maximum likelihood: events / horizon.
PoissonModel fit_poisson(const SpawnSequence& seq);
SpawnSequence sample_poisson(const PoissonModel& model, double length, std::uint64_t seed);
double nll_window(const PoissonModel& model, const TrainingWindow& window);

using TemporalModel = std::variant<NtppModel, PoissonModel>;

int spawn_id_of(const TemporalModel& model);
SpawnSequence sample_times(const TemporalModel& model, double length, int n_rollouts, std::uint64_t seed);

nlohmann::json to_json(const NtppModel& model);
NtppModel ntpp_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const PoissonModel& model);
PoissonModel poisson_from_json(const nlohmann::json& doc);

}  // namespace crowd::temporal
