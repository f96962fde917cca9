#include "sutrack/model.hpp"

#include <stdexcept>
#include <string>

#include "sutrack/ops.hpp"

namespace sutrack {

InputModality parse_input_modality(std::string_view s) {
    if (s == "multi") return InputModality::multi;
    if (s == "rgb_only") return InputModality::rgb_only;
    throw std::invalid_argument("unknown modality '" + std::string(s) + "' (expected multi or rgb_only)");
}

std::string_view to_string(InputModality m) { return m == InputModality::multi ? "multi" : "rgb_only"; }

TokenizerConfig ModelConfig::tokenizer_config() const {
    return {patch, dim, template_res, search_res, token_type, fusion, init, tokenizer};
}

EncoderConfig ModelConfig::encoder_config() const { return {depth, dim, heads, mlp_ratio, 1e-5}; }

SUTrackModel::SUTrackModel(const ModelConfig& config)
    : config_(config),
      init_rng_(config.init_seed),
      tokenizer_(config.tokenizer_config(), params_, init_rng_),
      encoder_(config.encoder_config(), params_, init_rng_),
      track_head_({config.dim, config.head_hidden}, params_, init_rng_),
      task_head_({config.dim, config.task_hidden, config.pooling}, params_, init_rng_) {
    if (config.pooling == PoolingMode::text_token && config.fusion != FusionMode::concat) {
        throw std::invalid_argument("pooling_mode text_token needs fusion_mode concat (no text token otherwise)");
    }
}

ModalFrame SUTrackModel::prepare(const ModalFrame& frame) const {
    if (config_.modality == InputModality::multi || !frame.aux) return frame;
    ModalFrame out = frame;
    out.aux = Tensor(frame.aux->shape(), 0.0);
    return out;
}

ModelOutput SUTrackModel::forward(std::span<const TemplateInput> templates, const ModalFrame& search) const {
    std::vector<TemplateInput> prepared;
    prepared.reserve(templates.size());
    for (const auto& t : templates) prepared.push_back({prepare(t.frame), t.box});
    TokenSequence seq = tokenizer_.build_sequence(prepared, prepare(search));

    if (config_.pooling == PoolingMode::extra_task_token) {
        const std::size_t n = seq.size();
        seq.tokens = concat({seq.tokens, task_head_.task_token()}, 0);
        seq.spans.push_back({SpanKind::task, n, n + 1, 0, 0});
    }
    ModelOutput out;
    out.encoded.tokens = encoder_.encode(seq.tokens);
    out.encoded.spans = seq.spans;

    Tensor search_tokens = out.encoded.span_tokens(SpanKind::search);
    if (out.encoded.find(SpanKind::search_aux)) search_tokens = add(search_tokens, out.encoded.span_tokens(SpanKind::search_aux));
    out.head = track_head_(search_tokens);

    switch (config_.pooling) {
        case PoolingMode::mean_pool:
            out.task_logits = task_head_(out.encoded.tokens);
            break;
        case PoolingMode::text_token:
            out.task_logits = task_head_.mlp(out.encoded.span_tokens(SpanKind::text));
            break;
        case PoolingMode::extra_task_token:
            out.task_logits = task_head_.mlp(out.encoded.span_tokens(SpanKind::task));
            break;
    }
    return out;
}

HeadOutput SUTrackModel::respond(std::span<const TemplateInput> templates, const ModalFrame& search) const {
    NoGradGuard guard;
    return forward(templates, search).head;
}

}  // namespace sutrack
