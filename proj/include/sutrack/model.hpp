#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "sutrack/embedding.hpp"
#include "sutrack/encoder.hpp"
#include "sutrack/heads.hpp"
#include "sutrack/parameters.hpp"
#include "sutrack/tracker.hpp"

namespace sutrack {

/// multi: frames enter as given; rgb_only: aux images are replaced by zeros.
enum class InputModality { multi, rgb_only };
InputModality parse_input_modality(std::string_view s);
std::string_view to_string(InputModality m);

struct ModelConfig {
    std::size_t patch = 16;
    std::size_t dim = 64;
    std::size_t depth = 2;
    std::size_t heads = 4;
    double mlp_ratio = 4.0;
    std::size_t template_res = 32;
    std::size_t search_res = 64;
    std::size_t head_hidden = 64;
    std::size_t task_hidden = 32;
    TokenTypeMode token_type = TokenTypeMode::soft;
    FusionMode fusion = FusionMode::concat;
    EmbedInit init = EmbedInit::half_copy;
    TokenizerMode tokenizer = TokenizerMode::unified;
    PoolingMode pooling = PoolingMode::mean_pool;
    InputModality modality = InputModality::multi;
    std::uint64_t init_seed = 0;

    TokenizerConfig tokenizer_config() const;
    EncoderConfig encoder_config() const;
};

struct ModelOutput {
    HeadOutput head;
    Tensor task_logits;  // (5,)
    TokenSequence encoded;
};

/// Tokenizer → encoder → center head, plus the task-recognition head used
/// during training.
class SUTrackModel : public ResponseModel {
public:
    explicit SUTrackModel(const ModelConfig& config);

    ModelOutput forward(std::span<const TemplateInput> templates, const ModalFrame& search) const;
    HeadOutput respond(std::span<const TemplateInput> templates, const ModalFrame& search) const override;

    const ModelConfig& config() const { return config_; }
    ParameterSet& parameters() { return params_; }
    const ParameterSet& parameters() const { return params_; }
    const Tokenizer& tokenizer() const { return tokenizer_; }
    const Encoder& encoder() const { return encoder_; }
    const TrackHead& track_head() const { return track_head_; }
    const TaskHead& task_head() const { return task_head_; }

private:
    ModalFrame prepare(const ModalFrame& frame) const;

    ModelConfig config_;
    ParameterSet params_;
    Rng init_rng_;
    Tokenizer tokenizer_;
    Encoder encoder_;
    TrackHead track_head_;
    TaskHead task_head_;
};

}  // namespace sutrack
