#include "sutrack/embedding.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sutrack/ops.hpp"

namespace sutrack {

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const char* what, const std::pair<std::string_view, E> (&table)[N]) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    std::string options;
    for (const auto& [name, value] : table) options += (options.empty() ? "" : ", ") + std::string(name);
    throw std::invalid_argument("unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of " +
                                options + ")");
}

template <class E, std::size_t N>
std::string_view enum_name(E v, const std::pair<std::string_view, E> (&table)[N]) {
    for (const auto& [name, value] : table) {
        if (value == v) return name;
    }
    return "?";
}

constexpr std::pair<std::string_view, TokenTypeMode> kTokenTypes[] = {
    {"none", TokenTypeMode::none}, {"hard", TokenTypeMode::hard}, {"soft", TokenTypeMode::soft}};
constexpr std::pair<std::string_view, FusionMode> kFusions[] = {
    {"concat", FusionMode::concat}, {"add", FusionMode::add}, {"mul", FusionMode::mul}};
constexpr std::pair<std::string_view, EmbedInit> kInits[] = {
    {"half_copy", EmbedInit::half_copy}, {"full_copy", EmbedInit::full_copy}, {"single_copy", EmbedInit::single_copy}};
constexpr std::pair<std::string_view, TokenizerMode> kTokenizerModes[] = {
    {"unified", TokenizerMode::unified}, {"separate", TokenizerMode::separate}};

constexpr double kSmallInit = 0.02;

}  // namespace

TokenTypeMode parse_token_type_mode(std::string_view s) { return parse_enum(s, "token_type_mode", kTokenTypes); }
FusionMode parse_fusion_mode(std::string_view s) { return parse_enum(s, "fusion_mode", kFusions); }
EmbedInit parse_embed_init(std::string_view s) { return parse_enum(s, "init_mode", kInits); }
TokenizerMode parse_tokenizer_mode(std::string_view s) { return parse_enum(s, "tokenizer_mode", kTokenizerModes); }
std::string_view to_string(TokenTypeMode m) { return enum_name(m, kTokenTypes); }
std::string_view to_string(FusionMode m) { return enum_name(m, kFusions); }
std::string_view to_string(EmbedInit m) { return enum_name(m, kInits); }
std::string_view to_string(TokenizerMode m) { return enum_name(m, kTokenizerModes); }

Tensor concat_channels(const ModalFrame& frame) {
    frame.validate();
    const std::size_t h = frame.height(), w = frame.width();
    const auto rgb = frame.rgb.values();
    const auto aux = frame.aux ? frame.aux->values() : rgb;
    std::vector<double> out(h * w * 6);
    for (std::size_t p = 0; p < h * w; ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            out[p * 6 + c] = rgb[p * 3 + c];
            out[p * 6 + 3 + c] = aux[p * 3 + c];
        }
    }
    return Tensor({h, w, 6}, std::move(out));
}

Tensor extract_patches(const Tensor& image, std::size_t patch) {
    if (image.rank() != 3 || image.dim(2) % 3 != 0) {
        throw std::invalid_argument("extract_patches: expected H×W×C with C a multiple of 3, got " +
                                    shape_str(image.shape()));
    }
    const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
    if (patch == 0 || h % patch != 0 || w % patch != 0) {
        throw std::invalid_argument("extract_patches: image " + std::to_string(h) + "x" + std::to_string(w) +
                                    " not divisible by patch size " + std::to_string(patch));
    }
    const std::size_t gh = h / patch, gw = w / patch;
    const std::size_t groups = c / 3;
    const std::size_t group_len = 3 * patch * patch;
    const std::size_t row_len = c * patch * patch;
    std::vector<std::size_t> index(gh * gw * row_len);
    for (std::size_t gy = 0; gy < gh; ++gy) {
        for (std::size_t gx = 0; gx < gw; ++gx) {
            std::size_t* row = index.data() + (gy * gw + gx) * row_len;
            for (std::size_t dy = 0; dy < patch; ++dy) {
                for (std::size_t dx = 0; dx < patch; ++dx) {
                    const std::size_t pixel = (gy * patch + dy) * w + (gx * patch + dx);
                    const std::size_t k = dy * patch + dx;
                    for (std::size_t g = 0; g < groups; ++g)
                        for (std::size_t ch = 0; ch < 3; ++ch)
                            row[g * group_len + k * 3 + ch] = pixel * c + g * 3 + ch;
                }
            }
        }
    }
    return gather(image, std::move(index), {gh * gw, row_len});
}

Tensor patch_embed(const Tensor& image, const PatchEmbedder& embedder) {
    if (image.rank() != 3 || image.dim(2) * embedder.patch * embedder.patch != embedder.weight.dim(1)) {
        throw std::invalid_argument("patch_embed: image " + shape_str(image.shape()) + " does not match weight " +
                                    shape_str(embedder.weight.shape()) + " at patch size " +
                                    std::to_string(embedder.patch));
    }
    return linear(extract_patches(image, embedder.patch), embedder.weight, embedder.bias);
}

Tensor init_from_rgb_weights(const Tensor& w3, EmbedInit mode, Rng& rng) {
    if (w3.rank() != 2 || w3.dim(1) % 3 != 0) {
        throw std::invalid_argument("init_from_rgb_weights: expected D×3P² weights, got " + shape_str(w3.shape()));
    }
    const std::size_t d = w3.dim(0), k = w3.dim(1);
    const auto src = w3.values();
    std::vector<double> out(d * 2 * k);
    const double bound = 1.0 / std::sqrt(static_cast<double>(k));
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
            const double v = src[r * k + j];
            switch (mode) {
                case EmbedInit::half_copy:
                    out[r * 2 * k + j] = v / 2.0;
                    out[r * 2 * k + k + j] = v / 2.0;
                    break;
                case EmbedInit::full_copy:
                    out[r * 2 * k + j] = v;
                    out[r * 2 * k + k + j] = v;
                    break;
                case EmbedInit::single_copy:
                    out[r * 2 * k + j] = v;
                    out[r * 2 * k + k + j] = rng.uniform(-bound, bound);
                    break;
                default:
                    throw std::invalid_argument("init_from_rgb_weights: unknown mode");
            }
        }
    }
    return Tensor({d, 2 * k}, std::move(out));
}

std::vector<double> text_stub_vector(std::optional<std::string_view> language, std::size_t dim) {
    const std::string_view text = language ? *language : kPadSentence;
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    Rng rng(hash);
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
}

Tensor BoxMask::mask() const {
    Tensor m({height, width});
    auto v = m.mutable_values();
    for (std::size_t i = 0; i < height; ++i)
        for (std::size_t j = 0; j < width; ++j) v[i * width + j] = inside(i, j) ? 1.0 : 0.0;
    return m;
}

std::vector<double> soft_mask_avg(const BoxMask& mask, std::size_t patch) {
    if (patch == 0 || mask.height % patch != 0 || mask.width % patch != 0) {
        throw std::invalid_argument("soft_mask_avg: mask " + std::to_string(mask.height) + "x" +
                                    std::to_string(mask.width) + " not divisible by patch size " +
                                    std::to_string(patch));
    }
    const std::size_t gh = mask.height / patch, gw = mask.width / patch;
    std::vector<double> avg(gh * gw);
    const double inv_area = 1.0 / static_cast<double>(patch * patch);
    for (std::size_t gy = 0; gy < gh; ++gy) {
        for (std::size_t gx = 0; gx < gw; ++gx) {
            std::size_t count = 0;
            for (std::size_t dy = 0; dy < patch; ++dy)
                for (std::size_t dx = 0; dx < patch; ++dx) count += mask.inside(gy * patch + dy, gx * patch + dx);
            avg[gy * gw + gx] = static_cast<double>(count) * inv_area;
        }
    }
    return avg;
}

Tensor apply_token_type(const Tensor& tokens, std::optional<std::span<const double>> m_avg,
                        const TokenTypeTable& table, SpanKind kind) {
    if (table.mode == TokenTypeMode::none) return tokens;
    if (kind == SpanKind::search || kind == SpanKind::search_aux) return add(tokens, table.search);
    if (kind != SpanKind::static_template && kind != SpanKind::dynamic_template) {
        throw std::invalid_argument("apply_token_type: token types apply to template and search spans only");
    }
    if (!m_avg) throw std::invalid_argument("apply_token_type: template span needs per-patch m_avg");
    const std::size_t n = tokens.dim(0);
    if (m_avg->size() != n) {
        throw std::invalid_argument("apply_token_type: " + std::to_string(m_avg->size()) + " m_avg values for " +
                                    std::to_string(n) + " tokens");
    }
    Tensor fg_weight({n, 1}), bg_weight({n, 1});
    auto fw = fg_weight.mutable_values();
    auto bw = bg_weight.mutable_values();
    for (std::size_t k = 0; k < n; ++k) {
        double m = (*m_avg)[k];
        if (table.mode == TokenTypeMode::hard) m = m >= 0.5 ? 1.0 : 0.0;
        fw[k] = m;
        bw[k] = 1.0 - m;
    }
    return add(add(tokens, mul(fg_weight, table.foreground)), mul(bg_weight, table.background));
}

const TokenSpan* TokenSequence::find(SpanKind kind) const {
    for (const auto& s : spans) {
        if (s.kind == kind) return &s;
    }
    return nullptr;
}

const TokenSpan& TokenSequence::at(SpanKind kind) const {
    if (const auto* s = find(kind)) return *s;
    throw std::out_of_range("token sequence has no span of the requested kind");
}

Tensor TokenSequence::span_tokens(SpanKind kind) const {
    const auto& s = at(kind);
    return slice(tokens, 0, s.begin, s.end);
}

Tokenizer::Tokenizer(const TokenizerConfig& config, ParameterSet& params, Rng& rng) : config_(config) {
    const std::size_t p = config.patch, d = config.dim;
    if (p == 0 || config.template_res % p != 0 || config.search_res % p != 0) {
        throw std::invalid_argument("template/search resolution must be divisible by the patch size");
    }
    const std::size_t k3 = 3 * p * p;
    // Stand-in for pretrained 3-channel embedding weights.
    Tensor w3({d, k3});
    const double bound = 1.0 / std::sqrt(static_cast<double>(k3));
    for (auto& v : w3.mutable_values()) v = rng.uniform(-bound, bound);

    if (config.mode == TokenizerMode::unified) {
        Tensor w6 = init_from_rgb_weights(w3, config.init, rng);
        embedders_.push_back({p, params.add("embed.patch.weight", w6, ParamGroup::other),
                              params.add_constant("embed.patch.bias", {d}, 0.0, ParamGroup::other)});
    } else {
        embedders_.push_back({p, params.add("embed.patch_rgb.weight", w3.clone(), ParamGroup::other),
                              params.add_constant("embed.patch_rgb.bias", {d}, 0.0, ParamGroup::other)});
        embedders_.push_back({p, params.add("embed.patch_aux.weight", w3.clone(), ParamGroup::other),
                              params.add_constant("embed.patch_aux.bias", {d}, 0.0, ParamGroup::other)});
    }
    const std::size_t nt = template_grid() * template_grid();
    const std::size_t ns = search_grid() * search_grid();
    pos_template_ = params.add_uniform("embed.pos_template", {nt, d}, kSmallInit, rng, ParamGroup::other);
    pos_search_ = params.add_uniform("embed.pos_search", {ns, d}, kSmallInit, rng, ParamGroup::other);
    types_.mode = config.token_type;
    if (config.token_type != TokenTypeMode::none) {
        types_.foreground = params.add_uniform("embed.type_fg", {d}, kSmallInit, rng, ParamGroup::other);
        types_.background = params.add_uniform("embed.type_bg", {d}, kSmallInit, rng, ParamGroup::other);
        types_.search = params.add_uniform("embed.type_search", {d}, kSmallInit, rng, ParamGroup::other);
    }
    const double tb = 1.0 / std::sqrt(static_cast<double>(d));
    text_weight_ = params.add_uniform("embed.text.weight", {d, d}, tb, rng, ParamGroup::other);
    text_bias_ = params.add_constant("embed.text.bias", {d}, 0.0, ParamGroup::other);
}

Tensor Tokenizer::text_token(const std::optional<std::string>& language) const {
    std::optional<std::string_view> view;
    if (language) view = *language;
    Tensor stub({1, config_.dim}, text_stub_vector(view, config_.dim));
    return linear(stub, text_weight_, text_bias_);
}

Tensor Tokenizer::embed_image(const ModalFrame& frame, const Tensor& positions, std::size_t& grids) const {
    Tensor six = concat_channels(frame);
    if (config_.mode == TokenizerMode::unified) {
        grids = 1;
        return add(patch_embed(six, embedders_[0]), positions);
    }
    grids = 2;
    Tensor rgb = slice(six, 2, 0, 3);
    Tensor aux = slice(six, 2, 3, 6);
    return concat({add(patch_embed(rgb, embedders_[0]), positions), add(patch_embed(aux, embedders_[1]), positions)},
                  0);
}

TokenSequence Tokenizer::build_sequence(std::span<const TemplateInput> templates, const ModalFrame& search) const {
    if (templates.empty() || templates.size() > 2) {
        throw std::invalid_argument("build_sequence: expected 1 or 2 templates, got " +
                                    std::to_string(templates.size()));
    }
    const std::size_t tr = config_.template_res, sr = config_.search_res;
    search.validate(config_.patch);
    if (search.height() != sr || search.width() != sr) {
        throw std::invalid_argument("search frame is " + std::to_string(search.height()) + "x" +
                                    std::to_string(search.width()) + ", model expects " + std::to_string(sr) + "x" +
                                    std::to_string(sr));
    }
    for (const auto& t : templates) {
        t.frame.validate(config_.patch);
        if (t.frame.height() != tr || t.frame.width() != tr) {
            throw std::invalid_argument("template frame is " + std::to_string(t.frame.height()) + "x" +
                                        std::to_string(t.frame.width()) + ", model expects " + std::to_string(tr) +
                                        "x" + std::to_string(tr));
        }
        if (t.frame.aux.has_value() != search.aux.has_value()) {
            throw std::invalid_argument("build_sequence: template and search frames differ in modality layout");
        }
    }

    std::vector<Tensor> parts;
    TokenSequence seq;
    std::size_t cursor = 0;
    const std::size_t tg = template_grid(), sg = search_grid();
    for (std::size_t i = 0; i < templates.size(); ++i) {
        std::size_t grids = 1;
        Tensor tokens = embed_image(templates[i].frame, pos_template_, grids);
        const auto kind = i == 0 ? SpanKind::static_template : SpanKind::dynamic_template;
        if (types_.mode != TokenTypeMode::none) {
            auto m = soft_mask_avg(BoxMask{templates[i].box, tr, tr}, config_.patch);
            const std::size_t one = m.size();
            for (std::size_t g = 1; g < grids; ++g) m.insert(m.end(), m.begin(), m.begin() + static_cast<long>(one));
            tokens = apply_token_type(tokens, std::span<const double>(m), types_, kind);
        }
        seq.spans.push_back({kind, cursor, cursor + tokens.dim(0), tg, tg});
        cursor += tokens.dim(0);
        parts.push_back(tokens);
    }
    {
        std::size_t grids = 1;
        Tensor tokens = embed_image(search, pos_search_, grids);
        tokens = apply_token_type(tokens, std::nullopt, types_, SpanKind::search);
        const std::size_t n = sg * sg;
        seq.spans.push_back({SpanKind::search, cursor, cursor + n, sg, sg});
        if (grids == 2) seq.spans.push_back({SpanKind::search_aux, cursor + n, cursor + 2 * n, sg, sg});
        cursor += tokens.dim(0);
        parts.push_back(tokens);
    }

    Tensor text = text_token(search.language);
    Tensor image_tokens = parts.size() == 1 ? parts[0] : concat(parts, 0);
    switch (config_.fusion) {
        case FusionMode::concat:
            seq.tokens = concat({image_tokens, text}, 0);
            seq.spans.push_back({SpanKind::text, cursor, cursor + 1, 0, 0});
            break;
        case FusionMode::add:
            seq.tokens = add(image_tokens, text);
            break;
        case FusionMode::mul:
            seq.tokens = mul(image_tokens, text);
            break;
    }
    return seq;
}

}  // namespace sutrack
