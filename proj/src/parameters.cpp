#include "sutrack/parameters.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace sutrack {

Tensor ParameterSet::add(std::string name, Tensor value, ParamGroup group) {
    if (find(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    value.set_requires_grad(true);
    params_.push_back({std::move(name), value, group});
    return value;
}

Tensor ParameterSet::add_uniform(std::string name, Shape shape, double bound, Rng& rng, ParamGroup group) {
    Tensor t(std::move(shape));
    for (auto& v : t.mutable_values()) v = rng.uniform(-bound, bound);
    return add(std::move(name), t, group);
}

Tensor ParameterSet::add_constant(std::string name, Shape shape, double value, ParamGroup group) {
    return add(std::move(name), Tensor(std::move(shape), value), group);
}

const Parameter* ParameterSet::find(std::string_view name) const {
    for (const auto& p : params_) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

const Parameter& ParameterSet::at(std::string_view name) const {
    if (const auto* p = find(name)) return *p;
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p.value.zero_grad();
}

AdamW::AdamW(const ParameterSet& params, AdamWConfig config) : config_(config) {
    for (const auto& p : params.all()) {
        m_.emplace_back(p.value.numel(), 0.0);
        v_.emplace_back(p.value.numel(), 0.0);
    }
}

void AdamW::step(ParameterSet& params) {
    auto& all = params.all();
    if (all.size() != m_.size()) throw std::logic_error("optimizer state does not match the parameter set");
    std::string missing;
    for (const auto& p : all) {
        if (!p.value.has_grad()) missing += (missing.empty() ? "" : ", ") + p.name;
    }
    if (!missing.empty()) throw std::runtime_error("missing gradient for parameter(s): " + missing);

    ++step_;
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(config_.beta1, t);
    const double bc2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t k = 0; k < all.size(); ++k) {
        auto& p = all[k];
        const double lr = p.group == ParamGroup::encoder ? config_.lr_encoder : config_.lr_other;
        auto w = p.value.mutable_values();
        auto g = p.value.grad();
        auto& m = m_[k];
        auto& v = v_[k];
        const double decay = 1.0 - lr * config_.weight_decay;
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] = w[i] * decay - lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
    }
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::string& path) {
    unsigned char bytes[sizeof(T)];
    const auto offset = static_cast<long long>(in.tellg());
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw std::runtime_error(path + ": unexpected end of file at offset " + std::to_string(offset));
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

constexpr char kMagic[4] = {'S', 'U', 'T', 'K'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const ParameterSet& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params.all()) {
        if (p.name.size() > UINT16_MAX) throw std::invalid_argument("parameter name too long: " + p.name);
        put<std::uint16_t>(out, static_cast<std::uint16_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        const auto& shape = p.value.shape();
        put<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
        for (auto d : shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        for (double v : p.value.values()) put<double>(out, v);
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<NamedTensor> read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error(path + ": bad magic at offset 0 (expected \"SUTK\")");
    }
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion) throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
    const auto count = get<std::uint32_t>(in, path);
    std::vector<NamedTensor> result;
    result.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto len = get<std::uint16_t>(in, path);
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw std::runtime_error(path + ": truncated parameter name");
        const auto rank = get<std::uint8_t>(in, path);
        Shape shape(rank);
        for (auto& d : shape) d = get<std::uint32_t>(in, path);
        std::vector<double> values(shape_numel(shape));
        for (auto& v : values) v = get<double>(in, path);
        result.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error(path + ": trailing bytes after " + std::to_string(count) + " parameters");
    }
    return result;
}

void load_checkpoint(const std::string& path, ParameterSet& params) {
    auto stored = read_checkpoint(path);
    if (stored.size() != params.size()) {
        throw std::runtime_error(path + ": checkpoint has " + std::to_string(stored.size()) +
                                 " parameters, model has " + std::to_string(params.size()));
    }
    std::unordered_map<std::string, const NamedTensor*> by_name;
    for (const auto& s : stored) by_name[s.name] = &s;
    for (auto& p : params.all()) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw std::runtime_error(path + ": missing parameter '" + p.name + "'");
        const Tensor& src = it->second->value;
        if (src.shape() != p.value.shape()) {
            throw std::runtime_error(path + ": parameter '" + p.name + "' has shape " + shape_str(src.shape()) +
                                     ", model expects " + shape_str(p.value.shape()));
        }
        auto dst = p.value.mutable_values();
        std::copy(src.values().begin(), src.values().end(), dst.begin());
    }
}

}  // namespace sutrack
