#include "sutrack/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sutrack/model.hpp"
#include "sutrack/parameters.hpp"
#include "sutrack/results.hpp"
#include "sutrack/train.hpp"

namespace sutrack {

namespace {

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::string csv_row(std::size_t step, const LossReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", step, r.cls, r.iou, r.l1, r.task, r.total);
    return buf;
}

std::vector<ResultLine> to_lines(const SequenceResult& r) {
    std::vector<ResultLine> lines;
    for (std::size_t i = 0; i < r.boxes.size(); ++i) lines.push_back({i, r.boxes[i], r.confidences[i]});
    return lines;
}

TrackingMetrics average(const std::vector<TrackingMetrics>& ms) {
    TrackingMetrics mean;
    if (ms.empty()) return mean;
    for (const auto& m : ms) {
        mean.success_auc += m.success_auc;
        mean.precision += m.precision;
        mean.mean_iou += m.mean_iou;
    }
    const double n = static_cast<double>(ms.size());
    mean.success_auc /= n;
    mean.precision /= n;
    mean.mean_iou /= n;
    return mean;
}

nlohmann::json metrics_json(const TrackingMetrics& m) {
    return {{"success_auc", m.success_auc}, {"precision", m.precision}, {"mean_iou", m.mean_iou}};
}

std::vector<TrackingMetrics> track_all(const SUTrackModel& model, const std::vector<SyntheticSequence>& seqs,
                                       const TrackerConfig& cfg, std::size_t threads) {
    std::vector<TrackingMetrics> out(seqs.size());
    parallel_for(seqs.size(), threads, [&](std::size_t i) {
        const SequenceResult r = track_sequence(model, seqs[i], cfg);
        out[i] = compute_metrics(r.boxes, seqs[i].boxes);
    });
    return out;
}

}  // namespace

fs::path config_sidecar(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".config.json"); }
fs::path loss_csv_path(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".loss.csv"); }

void cmd_gen(const RunConfig& config, const fs::path& out_dir) {
    write_dataset(out_dir, generate_dataset(config));
    write_text(out_dir / "config.json", config.to_json() + "\n");
}

void cmd_train(const RunConfig& config, const fs::path& data_dir, const fs::path& checkpoint,
               const fs::path& loss_csv) {
    const auto sequences = read_dataset(data_dir);
    if (sequences.empty()) throw std::runtime_error("no sequences under " + data_dir.string());
    SamplePool pool(sequences);
    SUTrackModel model(config.model_config());
    Trainer trainer(model, config.train_config());

    if (loss_csv.has_parent_path()) fs::create_directories(loss_csv.parent_path());
    std::ofstream csv(loss_csv);
    if (!csv) throw std::runtime_error("cannot write " + loss_csv.string());
    csv << "step,class,iou,l1,task,total\n";
    trainer.run(pool, [&](std::size_t step, const LossReport& r) { csv << csv_row(step, r); });
    if (!csv.flush()) throw std::runtime_error("write failed: " + loss_csv.string());

    if (checkpoint.has_parent_path()) fs::create_directories(checkpoint.parent_path());
    save_checkpoint(checkpoint.string(), model.parameters());
    write_text(config_sidecar(checkpoint), config.to_json() + "\n");
}

void cmd_track(const fs::path& checkpoint, const fs::path& data_dir, const fs::path& out_dir,
               const std::vector<std::string>& overrides, std::size_t threads) {
    if (!fs::exists(checkpoint)) throw std::runtime_error("checkpoint '" + checkpoint.string() + "' not found");
    const fs::path sidecar = config_sidecar(checkpoint);
    if (!fs::exists(sidecar)) throw std::runtime_error("checkpoint config '" + sidecar.string() + "' not found");
    RunConfig config = parse_config(read_text(sidecar));
    for (const auto& o : overrides) apply_override(config, o);

    SUTrackModel model(config.model_config());
    load_checkpoint(checkpoint.string(), model.parameters());
    const TrackerConfig tcfg = config.tracker_config();

    const auto dirs = list_dataset(data_dir);
    fs::create_directories(out_dir);
    parallel_for(dirs.size(), threads, [&](std::size_t i) {
        const SyntheticSequence seq = read_sequence(dirs[i]);
        write_results(out_dir / (dirs[i].filename().string() + ".txt"), to_lines(track_sequence(model, seq, tcfg)));
    });
}

std::string EvalReport::to_json() const {
    nlohmann::json seqs = nlohmann::json::array();
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto j = metrics_json(per_sequence[i]);
        j["name"] = names[i];
        seqs.push_back(j);
    }
    nlohmann::json root = {{"sequences", seqs}, {"mean", metrics_json(mean)}};
    return root.dump(2);
}

EvalReport evaluate_predictions(const fs::path& pred_dir, const fs::path& data_dir) {
    EvalReport report;
    for (const auto& dir : list_dataset(data_dir)) {
        const std::string name = dir.filename().string();
        const SyntheticSequence seq = read_sequence(dir);
        const auto lines = read_results(pred_dir / (name + ".txt"));
        if (lines.size() != seq.boxes.size())
            throw std::runtime_error(name + ": " + std::to_string(lines.size()) + " predicted frames, " +
                                     std::to_string(seq.boxes.size()) + " in the sequence");
        std::vector<Box> boxes;
        for (const auto& l : lines) boxes.push_back(l.box);
        report.names.push_back(name);
        report.per_sequence.push_back(compute_metrics(boxes, seq.boxes));
    }
    if (report.names.empty()) throw std::runtime_error("no sequences under " + data_dir.string());
    report.mean = average(report.per_sequence);
    return report;
}

std::pair<std::string, std::vector<std::string>> parse_axis(const std::string& axis) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == axis.size())
        throw std::invalid_argument("axis '" + axis + "' is not NAME=V1,V2,...");
    std::string name = axis.substr(0, eq);
    const auto& keys = RunConfig::keys();
    if (std::find(keys.begin(), keys.end(), name) == keys.end()) {
        if (std::find(keys.begin(), keys.end(), name + "_mode") == keys.end())
            throw std::invalid_argument("unknown ablation axis '" + name + "'");
        name += "_mode";
    }
    std::vector<std::string> values;
    std::stringstream ss(axis.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');) {
        if (v.empty()) throw std::invalid_argument("axis '" + axis + "' has an empty value");
        values.push_back(v);
    }
    return {name, values};
}

std::vector<AblationRow> cmd_ablate(const RunConfig& config, const std::string& axis,
                                    const std::vector<std::string>& values, const fs::path& csv_path,
                                    std::size_t threads, std::ostream* log) {
    if (values.empty()) throw std::invalid_argument("ablation axis has no values");
    std::vector<RunConfig> variants;
    for (const auto& v : values) {
        RunConfig c = config;
        c.set(axis, v);
        SUTrackModel probe(c.model_config());  // rejects invalid combinations before any training
        variants.push_back(c);
    }

    std::vector<AblationRow> rows;
    for (std::size_t k = 0; k < variants.size(); ++k) {
        const RunConfig& c = variants[k];
        const auto train_set = generate_dataset(c);
        const auto eval_set = generate_dataset(c, c.eval_sequences, c.eval_seed());
        SamplePool pool(train_set);
        SUTrackModel model(c.model_config());
        Trainer trainer(model, c.train_config());
        LossReport last;
        trainer.run(pool, [&](std::size_t, const LossReport& r) { last = r; });

        AblationRow row;
        row.value = values[k];
        row.final_loss = last.total;
        row.metrics = average(track_all(model, eval_set, c.tracker_config(), threads));

        // task accuracy over the tasks present in the held-out split
        SampleMix mix{{0, 0, 0, 0, 0}};
        for (const auto& s : eval_set) mix.weights[task_index(s.task)] = 1.0;
        SamplePool eval_pool(eval_set);
        Rng rng(c.eval_seed());
        const TrainConfig tc = c.train_config();
        std::vector<TrainingExample> examples;
        for (const auto& p : eval_pool.sample_batch(mix, 200, tc.max_frame_gap, rng))
            examples.push_back(make_example(eval_pool, p, c.model_config(), tc, rng));
        row.task_accuracy = task_accuracy(model, examples);
        rows.push_back(row);
        if (log) {
            *log << axis << "=" << row.value << ": auc " << row.metrics.success_auc << ", mean IoU "
                 << row.metrics.mean_iou << ", task acc " << row.task_accuracy << "\n";
        }
    }

    std::ostringstream csv;
    csv << axis << ",success_auc,precision,mean_iou,task_accuracy,final_loss\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%.6f\n", r.metrics.success_auc, r.metrics.precision,
                      r.metrics.mean_iou, r.task_accuracy, r.final_loss);
        csv << r.value << buf;
    }
    write_text(csv_path, csv.str());
    return rows;
}

}  // namespace sutrack
