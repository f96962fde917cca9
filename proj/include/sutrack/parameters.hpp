#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sutrack/random.hpp"
#include "sutrack/tensor.hpp"

namespace sutrack {

/// Learning-rate group. The transformer encoder trains with a smaller rate
/// than everything else.
enum class ParamGroup : std::uint8_t { encoder, other };

struct Parameter {
    std::string name;
    Tensor value;
    ParamGroup group = ParamGroup::other;
};

/// Owns the named trainable tensors of a model. Modules keep handles that
/// alias the stored tensors, so optimizer updates are visible to them.
class ParameterSet {
public:
    /// Registers a leaf tensor (requires_grad is switched on). Names are unique.
    Tensor add(std::string name, Tensor value, ParamGroup group);
    /// Convenience: uniform init in [-bound, bound].
    Tensor add_uniform(std::string name, Shape shape, double bound, Rng& rng, ParamGroup group);
    Tensor add_constant(std::string name, Shape shape, double value, ParamGroup group);

    const std::vector<Parameter>& all() const { return params_; }
    std::vector<Parameter>& all() { return params_; }
    const Parameter* find(std::string_view name) const;
    const Parameter& at(std::string_view name) const;
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();

private:
    std::vector<Parameter> params_;
};

/// Decoupled-weight-decay Adam.
struct AdamWConfig {
    double lr_encoder = 1e-5;
    double lr_other = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

class AdamW {
public:
    AdamW(const ParameterSet& params, AdamWConfig config);

    /// Applies one update to every parameter. Throws, naming the parameter,
    /// if any parameter has no gradient; nothing is modified in that case.
    void step(ParameterSet& params);

    std::uint64_t steps() const { return step_; }
    const AdamWConfig& config() const { return config_; }
    void set_config(const AdamWConfig& c) { config_ = c; }
    std::span<const double> first_moment(std::size_t i) const { return m_[i]; }
    std::span<const double> second_moment(std::size_t i) const { return v_[i]; }

private:
    AdamWConfig config_;
    std::uint64_t step_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// Little-endian "SUTK" parameter file (format version 1).
void save_checkpoint(const std::string& path, const ParameterSet& params);

struct NamedTensor {
    std::string name;
    Tensor value;
};
std::vector<NamedTensor> read_checkpoint(const std::string& path);

/// Copies checkpoint values into `params`; names and shapes must match one-to-one.
void load_checkpoint(const std::string& path, ParameterSet& params);

}  // namespace sutrack
