#include "crowd/temporal/ntpp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowd/error.hpp"
#include "crowd/random.hpp"

namespace crowd::temporal {

namespace {

constexpr std::string_view kModule = "temporal-model";
/// Per-segment cap on sampled events; guards against degenerate tiny scales.
constexpr std::size_t kMaxEventsPerRollout = 1'000'000;

const std::vector<nn::Activation> kHeadActivations = {nn::Activation::Tanh, nn::Activation::Identity};

void require_positive_gaps(const TrainingWindow& window) {
    for (double g : window.gaps) {
        if (!(g > 0.0)) throw Error(Errc::NonFiniteLoss, kModule, "non-positive inter-event time in window");
    }
}

}  // namespace

NtppModel NtppModel::create(int spawn_id, double window, double overlap, double time_scale, std::uint64_t seed,
                            const NtppArchitecture& arch) {
    if (!(time_scale > 0.0) || !(window > 0.0)) throw Error(Errc::InvalidArgument, kModule, "window and time scale must be positive");
    NtppModel m;
    m.spawn_id_ = spawn_id;
    m.window_ = window;
    m.overlap_ = overlap;
    m.time_scale_ = time_scale;
    m.arch_ = arch;
    Rng rng(seed);
    m.gru_ = nn::GruCellSpec::create(m.params_, "encoder", kInputDim, arch.hidden_dim, rng);
    m.head_ = nn::MlpSpec::create(m.params_, "head", {arch.hidden_dim, arch.head_units, 2}, kHeadActivations, rng);
    m.params_.value(m.head_.layers.back().bias).setConstant(std::log(std::exp(1.0) - 1.0));
    m.h0_ = m.params_.add("initial_state", nn::Matrix::Zero(arch.hidden_dim, 1));
    return m;
}

nn::Vector NtppModel::features(double gap) const {
    nn::Vector f(kInputDim);
    f << std::log1p(gap), gap / window_;
    return f;
}

Weibull NtppModel::distribution(const nn::Vector& hidden) const {
    const nn::Matrix raw = nn::mlp_forward(params_, head_, hidden);
    return {nn::softplus(raw(0, 0)), time_scale_ * nn::softplus(raw(1, 0))};
}

nn::Vector NtppModel::advance(const nn::Vector& hidden, double gap) const {
    return nn::gru_step(params_, gru_, features(gap), hidden);
}

nn::Var NtppModel::features(nn::Tape& tape, double gap) const { return tape.constant(features(gap)); }

std::pair<nn::Var, nn::Var> NtppModel::distribution(nn::Var hidden) const {
    const nn::Var raw = nn::mlp_forward(head_, hidden);
    return {nn::softplus(nn::row(raw, 0)), nn::softplus(nn::row(raw, 1)) * time_scale_};
}

double nll_window(const NtppModel& model, const TrainingWindow& window) {
    require_positive_gaps(window);
    nn::Vector h = model.learned_initial_state();
    double log_lik = 0.0;
    for (double gap : window.gaps) {
        log_lik += log_pdf(model.distribution(h), gap);
        h = model.advance(h, gap);
    }
    log_lik += log_survival(model.distribution(h), window.tail_gap);
    const double loss = -log_lik;
    if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, kModule, "window NLL is not finite");
    return loss;
}

nn::Var nll_window(nn::Tape& tape, const NtppModel& model, const TrainingWindow& window) {
    require_positive_gaps(window);
    nn::Var h = tape.param(model.initial_state());
    nn::Var log_lik = tape.constant(0.0);
    for (double gap : window.gaps) {
        const auto [shape, scale] = model.distribution(h);
        const double log_gap = std::log(gap);
        // log f = log k - log t + k z - exp(k z),  z = log t - log lambda
        const nn::Var kz = nn::cwise_mul(shape, tape.constant(log_gap) - nn::log(scale));
        log_lik = log_lik + nn::affine(nn::log(shape), 1.0, -log_gap) + kz - nn::exp(kz);
        h = nn::gru_step(model.encoder(), model.features(tape, gap), h);
    }
    if (window.tail_gap > 0.0) {
        const auto [shape, scale] = model.distribution(h);
        const nn::Var kz = nn::cwise_mul(shape, tape.constant(std::log(window.tail_gap)) - nn::log(scale));
        log_lik = log_lik - nn::exp(kz);
    }
    return nn::affine(log_lik, -1.0);
}

NtppModel train_ntpp(const SpawnSequence& seq, const NtppTrainOptions& options, NtppTrainReport* report) {
    if (options.epochs < 1) throw Error(Errc::InvalidArgument, kModule, "epochs must be >= 1");
    const auto windows = make_windows(seq, options.window, options.overlap);
    const bool has_events = std::any_of(windows.begin(), windows.end(), [](const auto& w) { return !w.times.empty(); });
    if (!has_events) throw Error(Errc::NoTrainingData, kModule, "no training window contains an event");

    const double time_scale = seq.horizon / static_cast<double>(seq.times.size());
    auto model = NtppModel::create(seq.spawn_id, options.window, options.overlap, time_scale,
                                   derive_seed(options.seed, Stream::Init), options.arch);
    auto& params = model.params();
    nn::ParamStore best = params;

    const auto mean_loss = [&] {
        double total = 0.0;
        for (const auto& w : windows) total += nll_window(model, w);
        return total / static_cast<double>(windows.size());
    };

    NtppTrainReport local;
    local.best_loss = mean_loss();
    local.best_epoch = 0;
    Rng shuffle_rng(derive_seed(options.seed, Stream::Training));
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const nn::AdamOptions adam{options.lr};
    const std::size_t batch = std::max<std::size_t>(1, options.batch_windows);
    int stale = 0;

    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform01(shuffle_rng) * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const auto stop = std::min(order.size(), start + batch);
            for (std::size_t k = start; k < stop; ++k) {
                nn::Tape tape(&params);
                tape.backward(nll_window(tape, model, windows[order[k]]));
            }
            nn::adam_update(params, adam);
        }
        if (!params.all_finite()) throw Error(Errc::NonFiniteLoss, kModule, "parameters diverged");

        const double loss = mean_loss();
        local.epoch_loss.push_back(loss);
        if (loss < local.best_loss - options.min_delta) {
            local.best_loss = loss;
            local.best_epoch = epoch;
            best = params;
            stale = 0;
        } else if (++stale >= options.patience) {
            local.early_stopped = true;
            break;
        }
    }
    params.copy_values_from(best);
    if (report) *report = std::move(local);
    return model;
}

SpawnSequence sample_rollout(const NtppModel& model, double length, int n_rollouts, std::uint64_t seed) {
    if (!(length > 0.0) || n_rollouts < 1) throw Error(Errc::InvalidArgument, kModule, "length and n_rollouts must be positive");
    Rng rng(seed);
    SpawnSequence seq;
    seq.spawn_id = model.spawn_id();
    seq.horizon = length;
    const double segment = length / static_cast<double>(n_rollouts);
    const auto hidden_dim = model.architecture().hidden_dim;

    for (int r = 0; r < n_rollouts; ++r) {
        const double base = segment * static_cast<double>(r);
        nn::Vector h = standard_normal_vector(rng, hidden_dim);
        double t = 0.0;
        for (std::size_t n = 0; n < kMaxEventsPerRollout; ++n) {
            const double gap = inverse_survival(model.distribution(h), uniform_open0(rng));
            if (!std::isfinite(gap)) break;
            t += gap;
            if (t >= segment) break;
            double time = base + t;
            if (!seq.times.empty() && time <= seq.times.back()) time = std::nextafter(seq.times.back(), length);
            if (time >= length) break;
            seq.times.push_back(time);
            h = model.advance(h, gap);
        }
    }
    return seq;
}

PoissonModel fit_poisson(const SpawnSequence& seq) {
    if (!(seq.horizon > 0.0)) throw Error(Errc::InvalidArgument, kModule, "horizon must be positive");
    return {seq.spawn_id, static_cast<double>(seq.times.size()) / seq.horizon};
}

SpawnSequence sample_poisson(const PoissonModel& model, double length, std::uint64_t seed) {
    if (!(length > 0.0)) throw Error(Errc::InvalidArgument, kModule, "length must be positive");
    SpawnSequence seq;
    seq.spawn_id = model.spawn_id;
    seq.horizon = length;
    if (model.rate <= 0.0) return seq;
    Rng rng(seed);
    double t = exponential(rng, model.rate);
    while (t < length) {
        seq.times.push_back(t);
        t += exponential(rng, model.rate);
    }
    return seq;
}

double nll_window(const PoissonModel& model, const TrainingWindow& window) {
    require_positive_gaps(window);
    const double exposure = std::accumulate(window.gaps.begin(), window.gaps.end(), window.tail_gap);
    const double n = static_cast<double>(window.gaps.size());
    if (model.rate <= 0.0) return n > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    return -(n * std::log(model.rate) - model.rate * exposure);
}

int spawn_id_of(const TemporalModel& model) {
    return std::visit(
        [](const auto& m) {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, NtppModel>) {
                return m.spawn_id();
            } else {
                return m.spawn_id;
            }
        },
        model);
}

SpawnSequence sample_times(const TemporalModel& model, double length, int n_rollouts, std::uint64_t seed) {
    if (const auto* ntpp = std::get_if<NtppModel>(&model)) return sample_rollout(*ntpp, length, n_rollouts, seed);
    return sample_poisson(std::get<PoissonModel>(model), length, seed);
}

nlohmann::json to_json(const NtppModel& model) {
    return {{"format", "crowd-ntpp/1"},
            {"spawn_id", model.spawn_id()},
            {"window", model.window()},
            {"overlap", model.overlap()},
            {"time_scale", model.time_scale()},
            {"hidden_dim", model.architecture().hidden_dim},
            {"head_units", model.architecture().head_units},
            {"params", nn::to_json(model.params())}};
}

NtppModel ntpp_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "crowd-ntpp/1") throw Error(Errc::ModelLoadFailure, kModule, "unknown nTPP format");
        NtppArchitecture arch{doc.at("hidden_dim").get<Eigen::Index>(), doc.at("head_units").get<Eigen::Index>()};
        auto m = NtppModel::create(doc.at("spawn_id").get<int>(), doc.at("window").get<double>(),
                                   doc.at("overlap").get<double>(), doc.at("time_scale").get<double>(), 0, arch);
        nn::load_values(m.params_, doc.at("params"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ModelLoadFailure, kModule, e.what());
    }
}

nlohmann::json to_json(const PoissonModel& model) {
    return {{"format", "crowd-poisson/1"}, {"spawn_id", model.spawn_id}, {"rate", model.rate}};
}

PoissonModel poisson_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "crowd-poisson/1") throw Error(Errc::ModelLoadFailure, kModule, "unknown Poisson format");
        return {doc.at("spawn_id").get<int>(), doc.at("rate").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ModelLoadFailure, kModule, e.what());
    }
}

}  // namespace crowd::temporal
