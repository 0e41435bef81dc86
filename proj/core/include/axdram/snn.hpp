#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "axdram/dataset.hpp"

namespace axdram {

/// Hyperparameters of the excitatory layer. Voltages in mV, times in ms.
struct SnnParams {
    std::size_t n_in = 784;
    std::size_t n_exc = 100;

    double dt_ms = 1.0;
    double duration_ms = 350.0;
    double max_rate_hz = 63.75;

    double v_rest = -65.0;
    double v_reset = -60.0;
    double v_th = -52.0;
    double tau_mem_ms = 100.0;
    double tau_syn_ms = 2.0;
    double refractory_ms = 5.0;
    double inhibition_mv = 100.0;
    double theta_plus_mv = 0.05;
    double tau_theta_ms = 1e7;

    float w_max = 1.0F;
    float init_w_max = 0.3F;
    double norm_per_input = 0.1; ///< column sum target = norm_per_input * n_in; 0 disables

    double tau_pre_ms = 20.0;
    double tau_post_ms = 20.0;
    double eta_pre = 1e-4;  ///< depression rate
    double eta_post = 1e-2; ///< potentiation rate
    double x_target = 0.0;  ///< presynaptic trace offset in potentiation

    std::uint32_t min_spikes = 5; ///< rerun a sample with a higher rate below this
    std::uint32_t max_boosts = 3;
    double boost_hz = 32.0;

    /// Throws ParameterError.
    void validate() const;

    std::size_t timesteps() const;
    std::uint32_t refractory_steps() const;

    bool operator==(const SnnParams&) const = default;
};

class SnnModel {
  public:
    SnnModel() = default;
    explicit SnnModel(const SnnParams& params);

    /// Weights uniform in [0, init_w_max], theta zero, no labels.
    static SnnModel initialize(const SnnParams& params, std::uint64_t seed);

    SnnParams params;
    std::vector<float> weights;  ///< n_in x n_exc, row-major (input i, neuron j at i*n_exc + j)
    std::vector<double> theta;   ///< adaptive threshold offsets, mV
    std::vector<int> assignment; ///< class of each neuron, -1 if unassigned
    std::size_t n_classes = 0;

    std::size_t n_in() const noexcept { return params.n_in; }
    std::size_t n_exc() const noexcept { return params.n_exc; }
    float& w(std::size_t i, std::size_t j) { return weights[i * params.n_exc + j]; }
    float w(std::size_t i, std::size_t j) const { return weights[i * params.n_exc + j]; }
    bool labeled() const noexcept { return !assignment.empty(); }

    /// Clip to [0, w_max] (NaN -> 0), normalize columns, clip again.
    void normalize();

    bool operator==(const SnnModel&) const = default;
};

struct NeuronState {
    std::vector<double> v;
    std::vector<double> g;
    std::vector<double> theta;
    std::vector<std::uint32_t> refractory;

    static NeuronState at_rest(const SnnModel& model);
};

/// active[t] lists the channels spiking in step t, ascending.
struct SpikeTrain {
    std::size_t channels = 0;
    double dt_ms = 1.0;
    std::vector<std::vector<std::uint32_t>> active;

    std::size_t timesteps() const noexcept { return active.size(); }
    bool at(std::size_t t, std::uint32_t channel) const;
    std::size_t count() const noexcept;
    std::size_t count(std::uint32_t channel) const;
};

/// Independent Poisson trains, rate intensity * max_rate_hz, one Bernoulli
/// draw per channel and step. Throws ParameterError on intensities outside [0, 1].
SpikeTrain rate_encode(std::span<const double> intensities, double duration_ms, double max_rate_hz,
                       double dt_ms, std::uint64_t seed);
SpikeTrain rate_encode(std::span<const std::uint8_t> pixels, double duration_ms, double max_rate_hz,
                       double dt_ms, std::uint64_t seed);

/// Advances every neuron by one step. Returns the indices that fired.
std::vector<std::uint32_t> lif_step(NeuronState& state, std::span<const std::uint32_t> input_spikes,
                                    std::span<const float> weights, const SnnParams& params,
                                    bool adapt_threshold = true);

/// Exponential eligibility traces, reset to 1 on a spike.
struct StdpTraces {
    std::vector<double> pre;
    std::vector<double> post;

    StdpTraces(std::size_t n_in, std::size_t n_exc) : pre(n_in, 0.0), post(n_exc, 0.0) {}

    /// Decay by one step, then mark this step's spikes.
    void advance(std::span<const std::uint32_t> pre_spikes, std::span<const std::uint32_t> post_spikes,
                 const SnnParams& params);
};

/// Depression for every presynaptic spike (eta_pre * post trace),
/// potentiation for every postsynaptic spike (eta_post * (pre trace - x_target)).
/// Touched weights are clipped to [0, w_max].
void stdp_update(std::span<float> weights, const StdpTraces& traces,
                 std::span<const std::uint32_t> pre_spikes, std::span<const std::uint32_t> post_spikes,
                 const SnnParams& params);

/// Spike counts per neuron for one presentation. With `learn`, applies STDP,
/// adapts theta, and renormalizes the weights afterwards.
std::vector<std::uint32_t> present(SnnModel& model, std::span<const std::uint8_t> pixels,
                                   std::uint64_t seed, bool learn);
std::vector<std::uint32_t> present(const SnnModel& model, std::span<const std::uint8_t> pixels,
                                   std::uint64_t seed);

/// One unsupervised pass over `train` in dataset order.
void train_epoch(SnnModel& model, const Dataset& train, std::uint64_t seed);

/// Highest-average-response labeling pass with plasticity off.
void assign_labels(SnnModel& model, const Dataset& labeled, std::uint64_t seed, unsigned jobs = 1);

/// Class whose assigned neurons have the highest mean count; ties broken
/// uniformly with `tie_seed`.
int predict(const SnnModel& model, std::span<const std::uint32_t> counts, std::uint64_t tie_seed);

/// Fraction of correct predictions. Throws ParameterError on an empty dataset
/// or an unlabeled model.
double infer(const SnnModel& model, const Dataset& test, std::uint64_t seed, unsigned jobs = 1);

/// JSON: params, weights (as IEEE-754 bit patterns), theta, assignment, n_classes.
void write_model_json(std::ostream& os, const SnnModel& model);
SnnModel read_model_json(std::istream& is);

}  // namespace axdram
