#include "axdram/snn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <random>
#include <string>

#include "axdram/errors.hpp"
#include "axdram/seeding.hpp"
#include "parallel.hpp"

namespace axdram {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ParameterError(std::string("snn: ") + what);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void SnnParams::validate() const {
    require(n_in > 0 && n_exc > 0, "n_in and n_exc must be positive");
    require(positive(dt_ms), "dt_ms must be > 0");
    require(positive(duration_ms) && duration_ms >= dt_ms, "duration_ms must be >= dt_ms");
    require(std::isfinite(max_rate_hz) && max_rate_hz >= 0.0, "max_rate_hz must be >= 0");
    require(max_rate_hz * dt_ms / 1000.0 <= 1.0, "max_rate_hz * dt exceeds one spike per step");
    require(std::isfinite(boost_hz) && boost_hz >= 0.0, "boost_hz must be >= 0");
    require((max_rate_hz + max_boosts * boost_hz) * dt_ms / 1000.0 <= 1.0,
            "boosted rate exceeds one spike per step");
    require(v_reset < v_th, "v_reset must be below v_th");
    require(std::isfinite(v_rest) && std::isfinite(v_reset) && std::isfinite(v_th), "voltages must be finite");
    require(positive(tau_mem_ms) && positive(tau_syn_ms) && positive(tau_theta_ms), "time constants must be > 0");
    require(positive(tau_pre_ms) && positive(tau_post_ms), "trace time constants must be > 0");
    require(std::isfinite(refractory_ms) && refractory_ms >= 0.0, "refractory_ms must be >= 0");
    require(std::isfinite(inhibition_mv) && inhibition_mv >= 0.0, "inhibition_mv must be >= 0");
    require(std::isfinite(theta_plus_mv) && theta_plus_mv >= 0.0, "theta_plus_mv must be >= 0");
    require(std::isfinite(w_max) && w_max > 0.0F, "w_max must be > 0");
    require(std::isfinite(init_w_max) && init_w_max >= 0.0F && init_w_max <= w_max,
            "init_w_max must lie in [0, w_max]");
    require(std::isfinite(norm_per_input) && norm_per_input >= 0.0, "norm_per_input must be >= 0");
    require(std::isfinite(eta_pre) && eta_pre >= 0.0 && std::isfinite(eta_post) && eta_post >= 0.0,
            "learning rates must be >= 0");
    require(std::isfinite(x_target), "x_target must be finite");
}

std::size_t SnnParams::timesteps() const {
    return static_cast<std::size_t>(std::llround(duration_ms / dt_ms));
}

std::uint32_t SnnParams::refractory_steps() const {
    return static_cast<std::uint32_t>(std::llround(refractory_ms / dt_ms));
}

SnnModel::SnnModel(const SnnParams& p)
    : params(p), weights(p.n_in * p.n_exc, 0.0F), theta(p.n_exc, 0.0) {
    params.validate();
}

SnnModel SnnModel::initialize(const SnnParams& p, std::uint64_t seed) {
    SnnModel model(p);
    std::mt19937_64 rng(derive_seed(seed, "snn-init"));
    for (float& w : model.weights) w = static_cast<float>(to_unit(rng()) * p.init_w_max);
    return model;
}

void SnnModel::normalize() {
    const float hi = params.w_max;
    auto clip = [hi](float& w) {
        if (std::isnan(w)) w = 0.0F;
        w = std::clamp(w, 0.0F, hi);
    };
    for (float& w : weights) clip(w);
    if (params.norm_per_input <= 0.0) return;
    const double target = params.norm_per_input * static_cast<double>(params.n_in);
    const std::size_t n = params.n_exc;
    std::vector<double> sums(n, 0.0);
    for (std::size_t i = 0; i < params.n_in; ++i)
        for (std::size_t j = 0; j < n; ++j) sums[j] += weights[i * n + j];
    std::vector<double> factor(n, 1.0);
    for (std::size_t j = 0; j < n; ++j)
        if (sums[j] > 0.0) factor[j] = target / sums[j];
    for (std::size_t i = 0; i < params.n_in; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            float& w = weights[i * n + j];
            w = static_cast<float>(w * factor[j]);
            clip(w);
        }
    }
}

NeuronState NeuronState::at_rest(const SnnModel& model) {
    const std::size_t n = model.n_exc();
    NeuronState s;
    s.v.assign(n, model.params.v_rest);
    s.g.assign(n, 0.0);
    s.theta = model.theta;
    s.theta.resize(n, 0.0);
    s.refractory.assign(n, 0);
    return s;
}

// ---------------------------------------------------------------------------

bool SpikeTrain::at(std::size_t t, std::uint32_t channel) const {
    const auto& row = active.at(t);
    return std::binary_search(row.begin(), row.end(), channel);
}

std::size_t SpikeTrain::count() const noexcept {
    std::size_t n = 0;
    for (const auto& row : active) n += row.size();
    return n;
}

std::size_t SpikeTrain::count(std::uint32_t channel) const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < active.size(); ++t) n += at(t, channel) ? 1 : 0;
    return n;
}

SpikeTrain rate_encode(std::span<const double> intensities, double duration_ms, double max_rate_hz,
                       double dt_ms, std::uint64_t seed) {
    require(positive(dt_ms) && std::isfinite(duration_ms) && duration_ms >= 0.0, "bad encoding window");
    require(std::isfinite(max_rate_hz) && max_rate_hz >= 0.0, "max_rate_hz must be >= 0");
    std::vector<double> p(intensities.size());
    for (std::size_t c = 0; c < intensities.size(); ++c) {
        const double x = intensities[c];
        if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("rate_encode: intensity outside [0, 1]");
        p[c] = x * max_rate_hz * dt_ms / 1000.0;
        require(p[c] <= 1.0, "rate exceeds one spike per step");
    }
    SpikeTrain train;
    train.channels = intensities.size();
    train.dt_ms = dt_ms;
    train.active.resize(static_cast<std::size_t>(std::llround(duration_ms / dt_ms)));
    std::vector<std::uint32_t> live;
    for (std::size_t c = 0; c < p.size(); ++c)
        if (p[c] > 0.0) live.push_back(static_cast<std::uint32_t>(c));
    if (live.empty()) return train;
    std::mt19937_64 rng(seed);
    for (auto& row : train.active) {
        for (std::uint32_t c : live)
            if (to_unit(rng()) < p[c]) row.push_back(c);
    }
    return train;
}

SpikeTrain rate_encode(std::span<const std::uint8_t> pixels, double duration_ms, double max_rate_hz,
                       double dt_ms, std::uint64_t seed) {
    std::vector<double> x(pixels.size());
    std::transform(pixels.begin(), pixels.end(), x.begin(), [](std::uint8_t v) { return v / 255.0; });
    return rate_encode(x, duration_ms, max_rate_hz, dt_ms, seed);
}

// ---------------------------------------------------------------------------

std::vector<std::uint32_t> lif_step(NeuronState& state, std::span<const std::uint32_t> input_spikes,
                                    std::span<const float> weights, const SnnParams& params,
                                    bool adapt_threshold) {
    const std::size_t n = state.v.size();
    require(state.g.size() == n && state.theta.size() == n && state.refractory.size() == n,
            "neuron state vectors differ in length");
    require(n > 0 && weights.size() % n == 0, "weight matrix does not match the layer");
    const std::size_t n_in = weights.size() / n;

    for (std::uint32_t i : input_spikes) {
        require(i < n_in, "input spike index out of range");
        const float* row = weights.data() + std::size_t{i} * n;
        for (std::size_t j = 0; j < n; ++j) state.g[j] += row[j];
    }

    // Exact solution of the leak over one step, input charge added after.
    const double leak = std::exp(-params.dt_ms / params.tau_mem_ms);
    const double syn = std::exp(-params.dt_ms / params.tau_syn_ms);
    const double theta_decay = std::exp(-params.dt_ms / params.tau_theta_ms);

    std::vector<std::uint32_t> fired;
    for (std::size_t j = 0; j < n; ++j) {
        if (state.refractory[j] > 0) {
            --state.refractory[j];
            state.v[j] = params.v_reset;
        } else {
            state.v[j] = params.v_rest + (state.v[j] - params.v_rest) * leak + state.g[j] * params.dt_ms;
            if (state.v[j] >= params.v_th + state.theta[j]) fired.push_back(static_cast<std::uint32_t>(j));
        }
        state.g[j] *= syn;
        if (adapt_threshold) state.theta[j] *= theta_decay;
    }

    const std::uint32_t refractory = params.refractory_steps();
    for (std::uint32_t j : fired) {
        state.v[j] = params.v_reset;
        state.refractory[j] = refractory;
        if (adapt_threshold) state.theta[j] += params.theta_plus_mv;
    }
    if (!fired.empty() && params.inhibition_mv > 0.0) {
        const double drop = params.inhibition_mv * static_cast<double>(fired.size());
        std::size_t k = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (k < fired.size() && fired[k] == j) {
                ++k;
                continue;
            }
            state.v[j] -= drop;
        }
    }
    return fired;
}

void StdpTraces::advance(std::span<const std::uint32_t> pre_spikes,
                         std::span<const std::uint32_t> post_spikes, const SnnParams& params) {
    const double dpre = std::exp(-params.dt_ms / params.tau_pre_ms);
    const double dpost = std::exp(-params.dt_ms / params.tau_post_ms);
    for (double& x : pre) x *= dpre;
    for (double& x : post) x *= dpost;
    for (std::uint32_t i : pre_spikes) pre.at(i) = 1.0;
    for (std::uint32_t j : post_spikes) post.at(j) = 1.0;
}

void stdp_update(std::span<float> weights, const StdpTraces& traces,
                 std::span<const std::uint32_t> pre_spikes, std::span<const std::uint32_t> post_spikes,
                 const SnnParams& params) {
    const std::size_t n_in = traces.pre.size();
    const std::size_t n = traces.post.size();
    require(weights.size() == n_in * n, "traces are not aligned with the weights");
    const float hi = params.w_max;
    auto clip = [hi](float& w) {
        if (std::isnan(w)) w = 0.0F;
        w = std::clamp(w, 0.0F, hi);
    };

    if (params.eta_pre > 0.0) {
        for (std::uint32_t i : pre_spikes) {
            float* row = weights.data() + std::size_t{i} * n;
            for (std::size_t j = 0; j < n; ++j) {
                if (traces.post[j] == 0.0) continue;
                row[j] = static_cast<float>(row[j] - params.eta_pre * traces.post[j]);
                clip(row[j]);
            }
        }
    }
    if (params.eta_post > 0.0) {
        for (std::uint32_t j : post_spikes) {
            for (std::size_t i = 0; i < n_in; ++i) {
                float& w = weights[i * n + j];
                const double dx = traces.pre[i] - params.x_target;
                if (dx == 0.0) continue;
                w = static_cast<float>(w + params.eta_post * dx);
                clip(w);
            }
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::uint32_t> run(SnnModel* learner, const SnnModel& model,
                               std::span<const std::uint8_t> pixels, std::uint64_t seed) {
    const SnnParams& p = model.params;
    if (pixels.size() != p.n_in) {
        throw ParameterError("snn: image has " + std::to_string(pixels.size()) + " pixels, model expects " +
                             std::to_string(p.n_in));
    }
    if (model.weights.size() != p.n_in * p.n_exc) throw ConsistencyError("snn: weight matrix has wrong size");

    std::vector<std::uint32_t> counts(p.n_exc, 0);
    double rate = p.max_rate_hz;
    for (std::uint32_t attempt = 0;; ++attempt) {
        const SpikeTrain train =
            rate_encode(pixels, p.duration_ms, rate, p.dt_ms, derive_seed(seed, "present", attempt));
        NeuronState state = NeuronState::at_rest(model);
        std::fill(counts.begin(), counts.end(), 0U);
        std::uint64_t total = 0;
        if (learner) {
            StdpTraces traces(p.n_in, p.n_exc);
            for (const auto& input : train.active) {
                const auto fired = lif_step(state, input, learner->weights, p, true);
                for (std::uint32_t j : fired) ++counts[j];
                total += fired.size();
                traces.advance(input, fired, p);
                stdp_update(learner->weights, traces, input, fired, p);
            }
            learner->theta = state.theta;
        } else {
            for (const auto& input : train.active) {
                const auto fired = lif_step(state, input, model.weights, p, false);
                for (std::uint32_t j : fired) ++counts[j];
                total += fired.size();
            }
        }
        if (total >= p.min_spikes || attempt >= p.max_boosts) break;
        rate += p.boost_hz;
    }
    if (learner) learner->normalize();
    return counts;
}

}  // namespace

std::vector<std::uint32_t> present(SnnModel& model, std::span<const std::uint8_t> pixels,
                                   std::uint64_t seed, bool learn) {
    return run(learn ? &model : nullptr, model, pixels, seed);
}

std::vector<std::uint32_t> present(const SnnModel& model, std::span<const std::uint8_t> pixels,
                                   std::uint64_t seed) {
    return run(nullptr, model, pixels, seed);
}

void train_epoch(SnnModel& model, const Dataset& train, std::uint64_t seed) {
    model.params.validate();
    for (std::size_t s = 0; s < train.size(); ++s) {
        present(model, train.image(s), derive_seed(seed, "train-sample", s), true);
    }
}

void assign_labels(SnnModel& model, const Dataset& labeled, std::uint64_t seed, unsigned jobs) {
    if (labeled.empty()) throw ParameterError("assign_labels: empty dataset");
    const std::size_t n = model.n_exc();
    const std::size_t classes = labeled.n_classes();
    std::vector<std::vector<std::uint32_t>> counts(labeled.size());
    const SnnModel& frozen = model;
    detail::parallel_for(labeled.size(), jobs, [&](std::size_t s) {
        counts[s] = present(frozen, labeled.image(s), derive_seed(seed, "label-sample", s));
    });

    std::vector<double> response(classes * n, 0.0);
    std::vector<std::size_t> per_class(classes, 0);
    for (std::size_t s = 0; s < labeled.size(); ++s) {
        const std::size_t c = labeled.label(s);
        ++per_class[c];
        for (std::size_t j = 0; j < n; ++j) response[c * n + j] += counts[s][j];
    }
    model.n_classes = classes;
    model.assignment.assign(n, -1);
    for (std::size_t j = 0; j < n; ++j) {
        double best = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            if (per_class[c] == 0) continue;
            const double mean = response[c * n + j] / static_cast<double>(per_class[c]);
            if (mean > best) {
                best = mean;
                model.assignment[j] = static_cast<int>(c);
            }
        }
    }
}

int predict(const SnnModel& model, std::span<const std::uint32_t> counts, std::uint64_t tie_seed) {
    if (!model.labeled() || model.n_classes == 0) throw ParameterError("predict: model has no labels");
    if (counts.size() != model.n_exc()) throw ParameterError("predict: count vector has wrong length");
    std::vector<double> sum(model.n_classes, 0.0);
    std::vector<std::size_t> members(model.n_classes, 0);
    for (std::size_t j = 0; j < counts.size(); ++j) {
        const int c = model.assignment[j];
        if (c < 0) continue;
        sum[static_cast<std::size_t>(c)] += counts[j];
        ++members[static_cast<std::size_t>(c)];
    }
    std::vector<int> best;
    double best_mean = -1.0;
    for (std::size_t c = 0; c < model.n_classes; ++c) {
        if (members[c] == 0) continue;
        const double mean = sum[c] / static_cast<double>(members[c]);
        if (mean > best_mean) {
            best_mean = mean;
            best.clear();
        }
        if (mean == best_mean) best.push_back(static_cast<int>(c));
    }
    if (best.empty()) {
        for (std::size_t c = 0; c < model.n_classes; ++c) best.push_back(static_cast<int>(c));
    }
    if (best.size() == 1) return best.front();
    const auto pick = static_cast<std::size_t>(hashed_uniform(tie_seed, 0) * static_cast<double>(best.size()));
    return best[std::min(pick, best.size() - 1)];
}

double infer(const SnnModel& model, const Dataset& test, std::uint64_t seed, unsigned jobs) {
    if (test.empty()) throw ParameterError("infer: empty dataset");
    if (!model.labeled()) throw ParameterError("infer: model has no class assignment");
    std::vector<char> correct(test.size(), 0);
    detail::parallel_for(test.size(), jobs, [&](std::size_t s) {
        const auto counts = present(model, test.image(s), derive_seed(seed, "infer-sample", s));
        const int label = predict(model, counts, derive_seed(seed, "infer-tie", s));
        correct[s] = label == static_cast<int>(test.label(s)) ? 1 : 0;
    });
    const auto hits = std::count(correct.begin(), correct.end(), 1);
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json params_to_json(const SnnParams& p) {
    return json{{"n_in", p.n_in},
                {"n_exc", p.n_exc},
                {"dt_ms", p.dt_ms},
                {"duration_ms", p.duration_ms},
                {"max_rate_hz", p.max_rate_hz},
                {"v_rest", p.v_rest},
                {"v_reset", p.v_reset},
                {"v_th", p.v_th},
                {"tau_mem_ms", p.tau_mem_ms},
                {"tau_syn_ms", p.tau_syn_ms},
                {"refractory_ms", p.refractory_ms},
                {"inhibition_mv", p.inhibition_mv},
                {"theta_plus_mv", p.theta_plus_mv},
                {"tau_theta_ms", p.tau_theta_ms},
                {"w_max", p.w_max},
                {"init_w_max", p.init_w_max},
                {"norm_per_input", p.norm_per_input},
                {"tau_pre_ms", p.tau_pre_ms},
                {"tau_post_ms", p.tau_post_ms},
                {"eta_pre", p.eta_pre},
                {"eta_post", p.eta_post},
                {"x_target", p.x_target},
                {"min_spikes", p.min_spikes},
                {"max_boosts", p.max_boosts},
                {"boost_hz", p.boost_hz}};
}

template <class T>
void get_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

SnnParams params_from_json(const json& j) {
    SnnParams p;
    get_opt(j, "n_in", p.n_in);
    get_opt(j, "n_exc", p.n_exc);
    get_opt(j, "dt_ms", p.dt_ms);
    get_opt(j, "duration_ms", p.duration_ms);
    get_opt(j, "max_rate_hz", p.max_rate_hz);
    get_opt(j, "v_rest", p.v_rest);
    get_opt(j, "v_reset", p.v_reset);
    get_opt(j, "v_th", p.v_th);
    get_opt(j, "tau_mem_ms", p.tau_mem_ms);
    get_opt(j, "tau_syn_ms", p.tau_syn_ms);
    get_opt(j, "refractory_ms", p.refractory_ms);
    get_opt(j, "inhibition_mv", p.inhibition_mv);
    get_opt(j, "theta_plus_mv", p.theta_plus_mv);
    get_opt(j, "tau_theta_ms", p.tau_theta_ms);
    get_opt(j, "w_max", p.w_max);
    get_opt(j, "init_w_max", p.init_w_max);
    get_opt(j, "norm_per_input", p.norm_per_input);
    get_opt(j, "tau_pre_ms", p.tau_pre_ms);
    get_opt(j, "tau_post_ms", p.tau_post_ms);
    get_opt(j, "eta_pre", p.eta_pre);
    get_opt(j, "eta_post", p.eta_post);
    get_opt(j, "x_target", p.x_target);
    get_opt(j, "min_spikes", p.min_spikes);
    get_opt(j, "max_boosts", p.max_boosts);
    get_opt(j, "boost_hz", p.boost_hz);
    return p;
}

}  // namespace

void write_model_json(std::ostream& os, const SnnModel& model) {
    std::vector<std::uint32_t> bits(model.weights.size());
    std::transform(model.weights.begin(), model.weights.end(), bits.begin(),
                   [](float w) { return std::bit_cast<std::uint32_t>(w); });
    const json j{{"params", params_to_json(model.params)},
                 {"weight_bits", bits},
                 {"theta", model.theta},
                 {"assignment", model.assignment},
                 {"n_classes", model.n_classes}};
    os << j.dump() << '\n';
    if (!os) throw IoError("model: write failed");
}

SnnModel read_model_json(std::istream& is) {
    json j;
    try {
        is >> j;
        SnnModel model(params_from_json(j.at("params")));
        const auto bits = j.at("weight_bits").get<std::vector<std::uint32_t>>();
        if (bits.size() != model.weights.size()) throw IoError("model: weight count does not match params");
        std::transform(bits.begin(), bits.end(), model.weights.begin(),
                       [](std::uint32_t b) { return std::bit_cast<float>(b); });
        model.theta = j.at("theta").get<std::vector<double>>();
        if (model.theta.size() != model.n_exc()) throw IoError("model: theta length does not match params");
        model.assignment = j.value("assignment", std::vector<int>{});
        model.n_classes = j.value("n_classes", std::size_t{0});
        return model;
    } catch (const json::exception& e) {
        throw IoError(std::string("model: ") + e.what());
    }
}

}  // namespace axdram
