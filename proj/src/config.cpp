#include "sutrack/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sutrack {

using json = nlohmann::json;

namespace {

struct Field {
    std::string name;
    std::function<void(RunConfig&, const json&)> set;
    std::function<json(const RunConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& key, const json& v, const std::string& expected) {
    throw std::invalid_argument("config key '" + key + "': expected " + expected + ", got " + v.dump());
}

std::size_t as_count(const std::string& key, const json& v) {
    if (!v.is_number_integer() || v.get<long long>() < 0) bad_value(key, v, "a non-negative integer");
    return v.get<std::size_t>();
}

double as_real(const std::string& key, const json& v) {
    if (!v.is_number()) bad_value(key, v, "a number");
    return v.get<double>();
}

std::string as_string(const std::string& key, const json& v) {
    if (!v.is_string()) bad_value(key, v, "a string");
    return v.get<std::string>();
}

template <class Parse>
auto as_enum(const std::string& key, const json& v, Parse parse) {
    try {
        return parse(as_string(key, v));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("config key '" + key + "': " + e.what());
    }
}

#define SUTRACK_COUNT(key, member) \
    Field{key, [](RunConfig& c, const json& v) { c.member = as_count(key, v); }, [](const RunConfig& c) { return json(c.member); }}
#define SUTRACK_REAL(key, member) \
    Field{key, [](RunConfig& c, const json& v) { c.member = as_real(key, v); }, [](const RunConfig& c) { return json(c.member); }}
#define SUTRACK_ENUM(key, member, parse)                                                  \
    Field{key, [](RunConfig& c, const json& v) { c.member = as_enum(key, v, parse); }, \
          [](const RunConfig& c) { return json(std::string(to_string(c.member))); }}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        SUTRACK_COUNT("patch", model.patch),
        SUTRACK_COUNT("dim", model.dim),
        SUTRACK_COUNT("depth", model.depth),
        SUTRACK_COUNT("heads", model.heads),
        SUTRACK_REAL("mlp_ratio", model.mlp_ratio),
        SUTRACK_COUNT("template_res", model.template_res),
        SUTRACK_COUNT("search_res", model.search_res),
        SUTRACK_COUNT("head_hidden", model.head_hidden),
        SUTRACK_COUNT("task_hidden", model.task_hidden),
        SUTRACK_ENUM("token_type_mode", model.token_type, parse_token_type_mode),
        SUTRACK_ENUM("fusion_mode", model.fusion, parse_fusion_mode),
        SUTRACK_ENUM("init_mode", model.init, parse_embed_init),
        SUTRACK_ENUM("tokenizer_mode", model.tokenizer, parse_tokenizer_mode),
        SUTRACK_ENUM("pooling_mode", model.pooling, parse_pooling_mode),
        SUTRACK_ENUM("modality", model.modality, parse_input_modality),
        SUTRACK_REAL("window_weight", window_weight),
        SUTRACK_REAL("focal_alpha", train.focal.alpha),
        SUTRACK_REAL("focal_beta", train.focal.beta),
        SUTRACK_REAL("lr_encoder", train.optim.lr_encoder),
        SUTRACK_REAL("lr_other", train.optim.lr_other),
        SUTRACK_REAL("weight_decay", train.optim.weight_decay),
        SUTRACK_REAL("adam_beta1", train.optim.beta1),
        SUTRACK_REAL("adam_beta2", train.optim.beta2),
        SUTRACK_REAL("adam_eps", train.optim.eps),
        SUTRACK_COUNT("steps", train.steps),
        SUTRACK_COUNT("batch", train.batch),
        Field{"seed", [](RunConfig& c, const json& v) { c.seed = as_count("seed", v); },
              [](const RunConfig& c) { return json(c.seed); }},
        Field{"mix",
              [](RunConfig& c, const json& v) {
                  if (!v.is_array() || v.size() != kNumTasks) bad_value("mix", v, "an array of 5 weights (RGB, RGBD, RGBT, RGBE, RGBL)");
                  for (std::size_t i = 0; i < kNumTasks; ++i) {
                      const double w = as_real("mix", v[i]);
                      if (w < 0) bad_value("mix", v, "non-negative weights");
                      c.train.mix.weights[i] = w;
                  }
              },
              [](const RunConfig& c) { return json(c.train.mix.weights); }},
        SUTRACK_REAL("lambda_giou", train.weights.giou),
        SUTRACK_REAL("lambda_l1", train.weights.l1),
        SUTRACK_COUNT("max_frame_gap", train.max_frame_gap),
        SUTRACK_REAL("search_jitter", train.search_jitter),
        SUTRACK_REAL("scale_jitter", train.scale_jitter),
        SUTRACK_COUNT("num_sequences", num_sequences),
        SUTRACK_COUNT("seq_length", seq_length),
        SUTRACK_COUNT("eval_sequences", eval_sequences),
        SUTRACK_COUNT("frame_size", generator.frame_size),
        SUTRACK_COUNT("min_target", generator.min_target),
        SUTRACK_COUNT("max_target", generator.max_target),
        SUTRACK_REAL("max_speed", generator.max_speed),
        SUTRACK_COUNT("max_distractors", generator.max_distractors),
        Field{"camouflage",
              [](RunConfig& c, const json& v) {
                  if (!v.is_boolean()) bad_value("camouflage", v, "true or false");
                  c.generator.camouflage = v.get<bool>();
              },
              [](const RunConfig& c) { return json(c.generator.camouflage); }},
        Field{"gen_tasks",
              [](RunConfig& c, const json& v) {
                  if (!v.is_array() || v.empty()) bad_value("gen_tasks", v, "a non-empty array of task names");
                  std::vector<Task> tasks;
                  for (const auto& t : v) tasks.push_back(as_enum("gen_tasks", t, parse_task));
                  c.gen_tasks = tasks;
              },
              [](const RunConfig& c) {
                  json a = json::array();
                  for (Task t : c.gen_tasks) a.push_back(std::string(task_name(t)));
                  return a;
              }},
    };
    return table;
}

#undef SUTRACK_COUNT
#undef SUTRACK_REAL
#undef SUTRACK_ENUM

const Field* find_field(std::string_view key) {
    for (const auto& f : fields())
        if (f.name == key) return &f;
    return nullptr;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

RunConfig::RunConfig() {
    train.optim.lr_encoder = 3e-4;
    train.optim.lr_other = 1e-3;
    train.batch = 16;
    generator.frame_size = 96;
    generator.min_target = 10;
    generator.max_target = 16;
}

void RunConfig::set(std::string_view key, std::string_view value) {
    const Field* f = find_field(key);
    if (!f) throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
    json v = json::parse(value, nullptr, false);
    if (v.is_discarded()) v = std::string(value);
    f->set(*this, v);
}

std::string RunConfig::to_json() const {
    json j = json::object();
    for (const auto& f : fields()) j[f.name] = f.get(*this);
    return j.dump(2);
}

std::uint64_t RunConfig::data_seed() const { return mix_seed(seed, 0); }
std::uint64_t RunConfig::init_seed() const { return mix_seed(seed, 1); }
std::uint64_t RunConfig::train_seed() const { return mix_seed(seed, 2); }
std::uint64_t RunConfig::eval_seed() const { return mix_seed(seed, 3); }

ModelConfig RunConfig::model_config() const {
    ModelConfig m = model;
    m.init_seed = init_seed();
    return m;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t = train;
    t.seed = train_seed();
    return t;
}

TrackerConfig RunConfig::tracker_config() const { return tracker_config_for(model, window_weight); }

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& f : fields()) out.push_back(f.name);
        return out;
    }();
    return k;
}

RunConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a flat JSON object");
    RunConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const Field* f = find_field(it.key());
        if (!f) throw std::invalid_argument("unknown config key '" + it.key() + "'");
        f->set(c, it.value());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

void apply_override(RunConfig& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw std::invalid_argument("override '" + std::string(assignment) + "' is not key=value");
    config.set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::vector<SyntheticSequence> generate_dataset(const RunConfig& config, std::size_t count, std::uint64_t seed) {
    if (config.gen_tasks.empty()) throw std::invalid_argument("gen_tasks is empty");
    Rng rng(seed);
    std::vector<SyntheticSequence> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const Task task = config.gen_tasks[i % config.gen_tasks.size()];
        const SequenceDescriptor d = random_descriptor(task, config.generator, rng);
        out.push_back(generate(d, rng.next_u64(), config.seq_length));
    }
    return out;
}

std::vector<SyntheticSequence> generate_dataset(const RunConfig& config) {
    return generate_dataset(config, config.num_sequences, config.data_seed());
}

}  // namespace sutrack
