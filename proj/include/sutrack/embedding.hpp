#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sutrack/parameters.hpp"
#include "sutrack/random.hpp"
#include "sutrack/tensor.hpp"
#include "sutrack/types.hpp"

namespace sutrack {

enum class TokenTypeMode { none, hard, soft };
enum class FusionMode { concat, add, mul };
enum class EmbedInit { half_copy, full_copy, single_copy };
/// unified: one 6-channel embedder; separate: one 3-channel embedder per
/// modality image, token grids concatenated.
enum class TokenizerMode { unified, separate };
enum class SpanKind { static_template, dynamic_template, search, search_aux, text, task };

TokenTypeMode parse_token_type_mode(std::string_view s);
FusionMode parse_fusion_mode(std::string_view s);
EmbedInit parse_embed_init(std::string_view s);
TokenizerMode parse_tokenizer_mode(std::string_view s);
std::string_view to_string(TokenTypeMode m);
std::string_view to_string(FusionMode m);
std::string_view to_string(EmbedInit m);
std::string_view to_string(TokenizerMode m);

/// [rgb; aux] along channels, H×W×6. Without aux the RGB channels are duplicated.
Tensor concat_channels(const ModalFrame& frame);

/// Splits an H×W×C image (C a multiple of 3) into non-overlapping P×P patches
/// in row-major patch order. Each row is one patch: the channels are taken in
/// groups of three (one group per modality image), each group flattened
/// pixel-major/channel-last, groups laid end to end. Result: (HW/P²)×(C·P²).
Tensor extract_patches(const Tensor& image, std::size_t patch);

struct PatchEmbedder {
    std::size_t patch = 16;
    Tensor weight;  // D × (C·P²)
    Tensor bias;    // D

    std::size_t dim() const { return weight.dim(0); }
    std::size_t channels() const { return weight.dim(1) / (patch * patch); }
};

/// Affine map of every flattened patch: tokens = patches·Wᵀ + b.
Tensor patch_embed(const Tensor& image, const PatchEmbedder& embedder);

/// Expands D×3P² weights into D×6P². half_copy: [w/2 | w/2]; full_copy:
/// [w | w]; single_copy: [w | U(-b, b)] with b = 1/sqrt(3P²), drawn from `rng`.
Tensor init_from_rgb_weights(const Tensor& w3, EmbedInit mode, Rng& rng);

/// Sentence used in place of a missing language description.
inline constexpr std::string_view kPadSentence = "<|pad|>";

/// Deterministic stand-in for a sentence encoder: a unit-norm vector of
/// length `dim` seeded from a 64-bit FNV-1a hash of the text.
std::vector<double> text_stub_vector(std::optional<std::string_view> language, std::size_t dim);

/// Pixel (i, j) is foreground iff its center (j+½, i+½) lies in [x0,x1)×[y0,y1).
struct BoxMask {
    Box box;
    std::size_t height = 0, width = 0;

    bool inside(std::size_t row, std::size_t col) const {
        const double x = static_cast<double>(col) + 0.5;
        const double y = static_cast<double>(row) + 0.5;
        return x >= box.x0 && x < box.x1 && y >= box.y0 && y < box.y1;
    }
    Tensor mask() const;  // H×W of {0, 1}
};

/// Mean of the mask over each P×P patch, row-major patch order.
std::vector<double> soft_mask_avg(const BoxMask& mask, std::size_t patch);

struct TokenTypeTable {
    TokenTypeMode mode = TokenTypeMode::soft;
    Tensor foreground, background, search;  // each of length D; undefined when mode == none
};

/// Adds token-type embeddings to an n×D block. Template spans need one m_avg
/// per token in soft/hard mode; search spans take none.
Tensor apply_token_type(const Tensor& tokens, std::optional<std::span<const double>> m_avg,
                        const TokenTypeTable& table, SpanKind kind);

struct TokenSpan {
    SpanKind kind;
    std::size_t begin = 0, end = 0;
    std::size_t grid_h = 0, grid_w = 0;  // zero for non-image spans
    std::size_t size() const { return end - begin; }
};

struct TokenSequence {
    Tensor tokens;  // N × D
    std::vector<TokenSpan> spans;

    std::size_t size() const { return tokens.dim(0); }
    const TokenSpan* find(SpanKind kind) const;
    const TokenSpan& at(SpanKind kind) const;
    Tensor span_tokens(SpanKind kind) const;
};

struct TokenizerConfig {
    std::size_t patch = 16;
    std::size_t dim = 64;
    std::size_t template_res = 32;
    std::size_t search_res = 64;
    TokenTypeMode token_type = TokenTypeMode::soft;
    FusionMode fusion = FusionMode::concat;
    EmbedInit init = EmbedInit::half_copy;
    TokenizerMode mode = TokenizerMode::unified;
};

struct TemplateInput {
    ModalFrame frame;
    Box box;  // in template-crop pixel coordinates
};

/// Turns template/search frames and the language description into one token
/// sequence: patch embedding, learned absolute positions (one table for the
/// template grid shared by both templates, one for the search grid), token
/// types, then the text token.
class Tokenizer {
public:
    Tokenizer(const TokenizerConfig& config, ParameterSet& params, Rng& rng);

    TokenSequence build_sequence(std::span<const TemplateInput> templates, const ModalFrame& search) const;

    /// 1×D: text_stub_vector followed by the learned D×D projection.
    Tensor text_token(const std::optional<std::string>& language) const;

    const TokenizerConfig& config() const { return config_; }
    const PatchEmbedder& embedder() const { return embedders_.front(); }
    const std::vector<PatchEmbedder>& embedders() const { return embedders_; }
    const TokenTypeTable& token_types() const { return types_; }
    std::size_t template_grid() const { return config_.template_res / config_.patch; }
    std::size_t search_grid() const { return config_.search_res / config_.patch; }

private:
    Tensor embed_image(const ModalFrame& frame, const Tensor& positions, std::size_t& grids) const;

    TokenizerConfig config_;
    std::vector<PatchEmbedder> embedders_;  // one (unified) or two (separate)
    Tensor pos_template_, pos_search_;
    TokenTypeTable types_;
    Tensor text_weight_, text_bias_;
};

}  // namespace sutrack
