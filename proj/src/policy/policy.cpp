#include "crowd/policy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "crowd/error.hpp"
#include "crowd/nn/tape.hpp"
#include "crowd/random.hpp"

namespace crowd::policy {

namespace {

constexpr std::string_view kModule = "policy";

std::vector<nn::Activation> cloned_activations(std::size_t hidden_layers) {
    std::vector<nn::Activation> acts(hidden_layers, nn::Activation::Tanh);
    acts.push_back(nn::Activation::Identity);
    return acts;
}

Eigen::Vector2d ray_direction(int i, int count) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    return {std::cos(angle), std::sin(angle)};
}

Eigen::VectorXd standardized(const ClonedNetwork& net, const Observation& obs) {
    return (obs.features() - net.input_mean).cwiseQuotient(net.input_scale);
}

}  // namespace

Eigen::VectorXd Observation::features() const {
    Eigen::VectorXd f(feature_dim());
    f << goal_offset, velocity, raycasts;
    return f;
}

Observation observe(const Point& position, const Eigen::Vector2d& velocity, const Point& goal,
                    const RaycastConfig& rays, const data::OccupancyMap* map) {
    Observation obs;
    obs.goal_offset = goal - position;
    obs.velocity = velocity;
    obs.raycasts = Eigen::VectorXd::Constant(rays.count, rays.max_range);
    if (map) {
        for (int i = 0; i < rays.count; ++i) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(rays.count);
            obs.raycasts[i] = map->raycast(position, angle, rays.max_range);
        }
    }
    return obs;
}

Action clip(const Action& a, double v_max) {
    const double n = a.norm();
    if (!std::isfinite(n)) return Action::Zero();
    return n > v_max ? Action(a * (v_max / n)) : a;
}

Action scripted_step(const Observation& obs, double v_max) {
    Action a = Action::Zero();
    const double dist = obs.goal_offset.norm();
    if (dist > 0.0) a = obs.goal_offset / dist * std::min(v_max, dist);
    const auto count = static_cast<int>(obs.raycasts.size());
    for (int i = 0; i < count; ++i) {
        const double r = obs.raycasts[i];
        if (r < kRepulsionRange) a -= (kRepulsionRange - r) / kRepulsionRange * v_max * ray_direction(i, count);
    }
    return clip(a, v_max);
}

PolicySpec scripted_policy(double v_max, const RaycastConfig& rays) {
    if (!(v_max > 0.0)) throw Error(Errc::InvalidArgument, kModule, "v_max must be positive");
    PolicySpec spec;
    spec.kind = PolicyKind::Scripted;
    spec.v_max = v_max;
    spec.rays = rays;
    return spec;
}

PolicySpec make_cloned_policy(Eigen::Index feature_dim, double v_max, std::uint64_t seed,
                              const std::vector<Eigen::Index>& hidden, const RaycastConfig& rays) {
    if (!(v_max > 0.0)) throw Error(Errc::InvalidArgument, kModule, "v_max must be positive");
    PolicySpec spec;
    spec.kind = PolicyKind::Cloned;
    spec.v_max = v_max;
    spec.rays = rays;
    ClonedNetwork net;
    std::vector<Eigen::Index> sizes{feature_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(2);
    Rng rng(seed);
    net.mlp = nn::MlpSpec::create(net.params, "policy", sizes, cloned_activations(hidden.size()), rng);
    net.input_mean = Eigen::VectorXd::Zero(feature_dim);
    net.input_scale = Eigen::VectorXd::Ones(feature_dim);
    spec.network = std::move(net);
    return spec;
}

Action policy_step(const PolicySpec& spec, const Observation& obs) {
    if (spec.kind == PolicyKind::Scripted) return scripted_step(obs, spec.v_max);
    const auto& net = *spec.network;
    const nn::Matrix out = nn::mlp_forward(net.params, net.mlp, standardized(net, obs));
    return clip(Action(out(0, 0), out(1, 0)) * spec.v_max, spec.v_max);
}

std::vector<Demonstration> build_demonstrations(const data::TrajectoryDataset& dataset, const RaycastConfig& rays,
                                                const data::OccupancyMap* map) {
    std::vector<Demonstration> demos;
    for (const auto& tr : dataset.trajectories) {
        const Point& goal = tr.end();
        Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
        for (std::size_t i = 0; i + 1 < tr.positions.size(); ++i) {
            Demonstration d;
            d.obs = observe(tr.positions[i], velocity, goal, rays, map);
            d.action = tr.positions[i + 1] - tr.positions[i];
            velocity = d.action;
            demos.push_back(std::move(d));
        }
    }
    return demos;
}

double demonstration_mse(const PolicySpec& spec, const std::vector<Demonstration>& demos) {
    if (demos.empty()) return 0.0;
    double total = 0.0;
    for (const auto& d : demos) total += (policy_step(spec, d.obs) - d.action).squaredNorm();
    return total / (2.0 * static_cast<double>(demos.size()));
}

PolicySpec train_bc(const std::vector<Demonstration>& demos, const BcOptions& options, BcReport* report) {
    if (demos.empty()) throw Error(Errc::NoDemonstrations, kModule, "no demonstration pairs");
    const auto dim = demos.front().obs.feature_dim();
    for (const auto& d : demos) {
        if (d.obs.feature_dim() != dim) throw Error(Errc::DimensionMismatch, kModule, "observation sizes differ");
    }

    std::vector<std::size_t> order(demos.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng(derive_seed(options.seed, Stream::Split));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[std::min(i - 1, static_cast<std::size_t>(uniform01(split_rng) * static_cast<double>(i)))]);
    }
    auto n_val = static_cast<std::size_t>(std::round(options.validation_fraction * static_cast<double>(demos.size())));
    if (demos.size() > 1) n_val = std::clamp<std::size_t>(n_val, 1, demos.size() - 1);
    else n_val = 0;
    std::vector<Demonstration> validation;
    for (std::size_t i = 0; i < n_val; ++i) validation.push_back(demos[order[i]]);
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    if (validation.empty()) validation.push_back(demos.front());

    auto spec = make_cloned_policy(dim, options.v_max, derive_seed(options.seed, Stream::Init), options.hidden, options.rays);
    auto& net = *spec.network;

    const auto n_train = static_cast<Eigen::Index>(train_idx.size());
    nn::Matrix x(dim, n_train);
    nn::Matrix y(2, n_train);
    for (Eigen::Index j = 0; j < n_train; ++j) {
        const auto& d = demos[train_idx[static_cast<std::size_t>(j)]];
        x.col(j) = d.obs.features();
        y.col(j) = d.action / options.v_max;
    }
    net.input_mean = x.rowwise().mean();
    net.input_scale = ((x.colwise() - net.input_mean).array().square().rowwise().mean().sqrt()).matrix();
    net.input_scale = net.input_scale.unaryExpr([](double s) { return s > 1e-9 ? s : 1.0; });
    x = (x.colwise() - net.input_mean).array().colwise() / net.input_scale.array();

    BcReport local;
    local.best_validation_mse = demonstration_mse(spec, validation);
    local.best_epoch = 0;
    nn::ParamStore best = net.params;
    Rng shuffle_rng(derive_seed(options.seed, Stream::Training));
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n_train));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    const nn::AdamOptions adam{options.lr};

    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::swap(perm[i - 1], perm[std::min(i - 1, static_cast<std::size_t>(uniform01(shuffle_rng) * static_cast<double>(i)))]);
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < perm.size(); start += batch) {
            const auto stop = std::min(perm.size(), start + batch);
            const auto b = static_cast<Eigen::Index>(stop - start);
            nn::Matrix xb(dim, b);
            nn::Matrix yb(2, b);
            for (Eigen::Index k = 0; k < b; ++k) {
                xb.col(k) = x.col(perm[start + static_cast<std::size_t>(k)]);
                yb.col(k) = y.col(perm[start + static_cast<std::size_t>(k)]);
            }
            nn::Tape tape(&net.params, 16);
            const nn::Var pred = nn::mlp_forward(net.mlp, tape.constant(std::move(xb)));
            const nn::Var loss = nn::sum(nn::square(pred - tape.constant(std::move(yb)))) * (1.0 / (2.0 * static_cast<double>(b)));
            tape.backward(loss);
            nn::adam_update(net.params, adam);
            epoch_loss += loss.scalar() * static_cast<double>(b);
        }
        local.train_loss.push_back(epoch_loss / static_cast<double>(std::max<Eigen::Index>(1, n_train)));
        const double val = demonstration_mse(spec, validation);
        local.validation_mse.push_back(val);
        if (val < local.best_validation_mse) {
            local.best_validation_mse = val;
            local.best_epoch = epoch;
            best = net.params;
        }
    }
    net.params.copy_values_from(best);
    if (report) *report = std::move(local);
    return spec;
}

nlohmann::json to_json(const PolicySpec& spec) {
    nlohmann::json doc{{"format", "crowd-policy/1"},
                       {"kind", spec.kind == PolicyKind::Scripted ? "scripted" : "cloned"},
                       {"v_max", spec.v_max},
                       {"raycasts", {{"count", spec.rays.count}, {"max_range", spec.rays.max_range}}}};
    if (spec.network) {
        const auto& net = *spec.network;
        std::vector<Eigen::Index> hidden;
        for (std::size_t i = 0; i + 1 < net.mlp.layers.size(); ++i) hidden.push_back(net.mlp.layers[i].out_dim);
        doc["hidden"] = hidden;
        doc["input_mean"] = std::vector<double>(net.input_mean.data(), net.input_mean.data() + net.input_mean.size());
        doc["input_scale"] = std::vector<double>(net.input_scale.data(), net.input_scale.data() + net.input_scale.size());
        doc["params"] = nn::to_json(net.params);
    }
    return doc;
}

PolicySpec policy_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "crowd-policy/1") throw Error(Errc::ModelLoadFailure, kModule, "unknown policy format");
        const RaycastConfig rays{doc.at("raycasts").at("count").get<int>(), doc.at("raycasts").at("max_range").get<double>()};
        const double v_max = doc.at("v_max").get<double>();
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "scripted") return scripted_policy(v_max, rays);
        if (kind != "cloned") throw Error(Errc::ModelLoadFailure, kModule, "unknown policy kind " + kind);
        const auto mean = doc.at("input_mean").get<std::vector<double>>();
        const auto scale = doc.at("input_scale").get<std::vector<double>>();
        auto spec = make_cloned_policy(static_cast<Eigen::Index>(mean.size()), v_max, 0,
                                       doc.at("hidden").get<std::vector<Eigen::Index>>(), rays);
        auto& net = *spec.network;
        net.input_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        net.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
        nn::load_values(net.params, doc.at("params"));
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ModelLoadFailure, kModule, e.what());
    }
}

}  // namespace crowd::policy
