#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sutrack/data.hpp"

namespace sutrack {

namespace fs = std::filesystem;

namespace {

constexpr char kFrameMagic[4] = {'S', 'U', 'T', 'F'};
constexpr std::size_t kHeaderBytes = 16;

template <class T>
void put_le(std::string& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(const std::string& buf, std::size_t offset) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, buf.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

std::string frame_name(std::size_t index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "f%05zu.%s", index, ext);
    return buf;
}

}  // namespace

void write_frame_file(const fs::path& path, const Tensor& image) {
    if (image.rank() != 3) throw std::invalid_argument("frame file needs an H×W×C image, got " + shape_str(image.shape()));
    std::string buf;
    buf.reserve(kHeaderBytes + image.numel() * 4);
    buf.append(kFrameMagic, 4);
    for (std::size_t axis = 0; axis < 3; ++axis) put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(image.dim(axis)));
    for (double v : image.values()) put_le<float>(buf, static_cast<float>(v));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.write(buf.data(), static_cast<std::streamsize>(buf.size()))) {
        throw std::runtime_error("cannot write frame file '" + path.string() + "'");
    }
}

Tensor read_frame_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open frame file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();
    if (buf.size() < kHeaderBytes) {
        throw std::runtime_error(path.string() + ": truncated header, expected " + std::to_string(kHeaderBytes) +
                                 " bytes, got " + std::to_string(buf.size()));
    }
    if (std::memcmp(buf.data(), kFrameMagic, 4) != 0) {
        throw std::runtime_error(path.string() + ": bad magic at offset 0 (expected \"SUTF\")");
    }
    const std::size_t h = get_le<std::uint32_t>(buf, 4);
    const std::size_t w = get_le<std::uint32_t>(buf, 8);
    const std::size_t c = get_le<std::uint32_t>(buf, 12);
    if (h == 0 || w == 0 || c == 0) {
        throw std::runtime_error(path.string() + ": zero dimension in header at offset 4");
    }
    const std::size_t expected = kHeaderBytes + h * w * c * 4;
    if (buf.size() != expected) {
        throw std::runtime_error(path.string() + ": expected " + std::to_string(expected) + " bytes for " +
                                 std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c) +
                                 " frame, got " + std::to_string(buf.size()));
    }
    std::vector<double> values(h * w * c);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_le<float>(buf, kHeaderBytes + 4 * i);
    return Tensor({h, w, c}, std::move(values));
}

void write_sequence(const fs::path& dir, const SyntheticSequence& seq) {
    if (seq.frames.size() != seq.boxes.size()) throw std::invalid_argument("sequence has mismatched frames/boxes");
    if (seq.frames.empty()) throw std::invalid_argument("cannot write an empty sequence");
    fs::create_directories(dir);
    nlohmann::json meta;
    meta["task"] = std::string(task_name(seq.task));
    meta["length"] = seq.frames.size();
    meta["H"] = seq.frames[0].height();
    meta["W"] = seq.frames[0].width();
    const auto& lang = seq.frames[0].language;
    meta["language"] = lang ? nlohmann::json(*lang) : nlohmann::json(nullptr);
    auto boxes = nlohmann::json::array();
    for (const auto& b : seq.boxes) {
        const double coords[4] = {b.x0, b.y0, b.x1, b.y1};
        auto row = nlohmann::json::array();
        for (double v : coords) {
            if (v != std::round(v)) throw std::invalid_argument("container boxes must be integer pixel coordinates");
            row.push_back(static_cast<long long>(v));
        }
        boxes.push_back(row);
    }
    meta["boxes"] = boxes;
    std::ofstream(dir / "meta.json") << meta.dump(1) << "\n";
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        write_frame_file(dir / frame_name(t, "rgb"), seq.frames[t].rgb);
        if (seq.frames[t].aux) write_frame_file(dir / frame_name(t, "aux"), *seq.frames[t].aux);
    }
}

SyntheticSequence read_sequence(const fs::path& dir) {
    const fs::path meta_path = dir / "meta.json";
    std::ifstream in(meta_path);
    if (!in) throw std::runtime_error("cannot open '" + meta_path.string() + "'");
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(meta_path.string() + ": " + e.what());
    }
    SyntheticSequence seq;
    try {
        seq.task = parse_task(meta.at("task").get<std::string>());
        const auto length = meta.at("length").get<std::size_t>();
        const auto h = meta.at("H").get<std::size_t>();
        const auto w = meta.at("W").get<std::size_t>();
        std::optional<std::string> language;
        if (!meta.at("language").is_null()) language = meta.at("language").get<std::string>();
        const auto& boxes = meta.at("boxes");
        if (boxes.size() != length) {
            throw std::runtime_error("has " + std::to_string(boxes.size()) + " boxes for length " +
                                     std::to_string(length));
        }
        for (const auto& b : boxes) {
            seq.boxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                                 b.at(3).get<double>()});
        }
        for (std::size_t t = 0; t < length; ++t) {
            ModalFrame f;
            f.task = seq.task;
            f.language = language;
            const fs::path rgb_path = dir / frame_name(t, "rgb");
            f.rgb = read_frame_file(rgb_path);
            if (f.rgb.shape() != Shape{h, w, 3}) {
                throw std::runtime_error(rgb_path.string() + ": shape " + shape_str(f.rgb.shape()) +
                                         " does not match meta " + std::to_string(h) + "x" + std::to_string(w) + "x3");
            }
            const fs::path aux_path = dir / frame_name(t, "aux");
            if (fs::exists(aux_path)) {
                f.aux = read_frame_file(aux_path);
                if (f.aux->shape() != f.rgb.shape()) {
                    throw std::runtime_error(aux_path.string() + ": shape " + shape_str(f.aux->shape()) +
                                             " does not match rgb");
                }
            }
            f.validate();
            seq.frames.push_back(std::move(f));
        }
        seq.descriptor.task = seq.task;
        seq.descriptor.height = h;
        seq.descriptor.width = w;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(meta_path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(dir.string() + ": " + e.what());
    }
    return seq;
}

void write_dataset(const fs::path& dir, const std::vector<SyntheticSequence>& sequences) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "seq_%05zu", i);
        write_sequence(dir / name, sequences[i]);
    }
}

std::vector<fs::path> list_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("dataset directory '" + dir.string() + "' not found");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<SyntheticSequence> read_dataset(const fs::path& dir) {
    std::vector<SyntheticSequence> out;
    for (const auto& p : list_dataset(dir)) out.push_back(read_sequence(p));
    return out;
}

}  // namespace sutrack
