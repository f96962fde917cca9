#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "sutrack/embedding.hpp"
#include "sutrack/encoder.hpp"
#include "sutrack/heads.hpp"
#include "sutrack/losses.hpp"
#include "sutrack/model.hpp"

namespace sutrack::testing {

struct GradCase {
    std::string name;
    std::function<GradCheck(Rng&)> run;
};

/// One entry per differentiable op, plus the composite modules and the full
/// objective. Each case draws fresh random inputs from the Rng it is given.
inline std::vector<GradCase> gradient_cases() {
    using T = Tensor;
    auto unary = [](std::string name, std::function<T(const T&)> op, double lo, double hi, bool signed_away = false) {
        return GradCase{name, [=](Rng& rng) {
                            T x = signed_away ? away_from_zero({3, 4}, rng, lo, hi) : random_leaf({3, 4}, rng, lo, hi);
                            T r = random_weights(op(x).shape(), rng);
                            return gradcheck([&] { return project(op(x), r); }, {x}, rng);
                        }};
    };
    auto binary = [](std::string name, std::function<T(const T&, const T&)> op, Shape sa, Shape sb) {
        return GradCase{name, [=](Rng& rng) {
                            T a = random_leaf(sa, rng);
                            T b = random_leaf(sb, rng);
                            T r = random_weights(op(a, b).shape(), rng);
                            return gradcheck([&] { return project(op(a, b), r); }, {a, b}, rng);
                        }};
    };

    std::vector<GradCase> cases = {
        binary("add", [](const T& a, const T& b) { return add(a, b); }, {3, 4}, {4}),
        binary("sub", [](const T& a, const T& b) { return sub(a, b); }, {3, 1}, {3, 4}),
        binary("mul", [](const T& a, const T& b) { return mul(a, b); }, {2, 3, 4}, {3, 1}),
        GradCase{"div",
                 [](Rng& rng) {
                     T a = random_leaf({3, 4}, rng);
                     T b = away_from_zero({4}, rng, 0.5, 2.0);
                     T r = random_weights({3, 4}, rng);
                     return gradcheck([&] { return project(div(a, b), r); }, {a, b}, rng);
                 }},
        GradCase{"maximum",
                 [](Rng& rng) {
                     T a = random_leaf({3, 4}, rng);
                     T b = random_leaf({3, 4}, rng);
                     // keep every pair at least 0.05 apart so the selection is stable under ±h
                     auto bv = b.mutable_values();
                     for (std::size_t i = 0; i < bv.size(); ++i)
                         if (std::abs(bv[i] - a[i]) < 0.05) bv[i] = a[i] + 0.1;
                     T r = random_weights({3, 4}, rng);
                     return gradcheck([&] { return project(maximum(a, b), r); }, {a, b}, rng);
                 }},
        GradCase{"minimum",
                 [](Rng& rng) {
                     T a = random_leaf({3, 4}, rng);
                     T b = random_leaf({3, 4}, rng);
                     auto bv = b.mutable_values();
                     for (std::size_t i = 0; i < bv.size(); ++i)
                         if (std::abs(bv[i] - a[i]) < 0.05) bv[i] = a[i] - 0.1;
                     T r = random_weights({3, 4}, rng);
                     return gradcheck([&] { return project(minimum(a, b), r); }, {a, b}, rng);
                 }},
        unary("scale", [](const T& x) { return scale(x, -1.7); }, -1, 1),
        unary("add_scalar", [](const T& x) { return add_scalar(x, 0.3); }, -1, 1),
        unary("neg", [](const T& x) { return neg(x); }, -1, 1),
        binary("matmul", [](const T& a, const T& b) { return matmul(a, b); }, {3, 5}, {5, 2}),
        unary("transpose", [](const T& x) { return transpose(x); }, -1, 1),
        unary("reshape", [](const T& x) { return reshape(x, {2, 6}); }, -1, 1),
        binary("concat", [](const T& a, const T& b) { return concat({a, b, a}, 1); }, {3, 2}, {3, 4}),
        unary("slice", [](const T& x) { return slice(x, 1, 1, 3); }, -1, 1),
        GradCase{"broadcast_to",
                 [](Rng& rng) {
                     T x = random_leaf({3, 1}, rng);
                     T r = random_weights({2, 3, 4}, rng);
                     return gradcheck([&] { return project(broadcast_to(x, {2, 3, 4}), r); }, {x}, rng);
                 }},
        unary("gather", [](const T& x) { return gather(x, {11, 0, 3, 3, 7, 0}, {2, 3}); }, -1, 1),
        unary("exp", [](const T& x) { return exp(x); }, -2, 2),
        unary("log", [](const T& x) { return log(x); }, 0.2, 3),
        unary("sqrt", [](const T& x) { return sqrt(x); }, 0.2, 3),
        unary("abs", [](const T& x) { return abs(x); }, 0.1, 2, true),
        unary("relu", [](const T& x) { return relu(x); }, 0.1, 2, true),
        unary("pow", [](const T& x) { return pow(x, 2.5); }, 0.2, 2),
        unary("sigmoid", [](const T& x) { return sigmoid(x); }, -4, 4),
        unary("gelu", [](const T& x) { return gelu(x); }, -3, 3),
        unary("softmax", [](const T& x) { return softmax(x); }, -3, 3),
        unary("log_softmax", [](const T& x) { return log_softmax(x); }, -3, 3),
        unary("layer_norm", [](const T& x) { return layer_norm(x); }, -2, 2),
        unary("sum_axes", [](const T& x) { return sum(reshape(x, {3, 2, 2}), {0, 2}, true); }, -1, 1),
        unary("sum_all", [](const T& x) { return sum(x); }, -1, 1),
        unary("mean_axes", [](const T& x) { return mean(x, {1}); }, -1, 1),
        unary("mean_all", [](const T& x) { return mean(x); }, -1, 1),
        GradCase{"linear",
                 [](Rng& rng) {
                     T x = random_leaf({4, 3}, rng);
                     T w = random_leaf({5, 3}, rng);
                     T b = random_leaf({5}, rng);
                     T r = random_weights({4, 5}, rng);
                     return gradcheck([&] { return project(linear(x, w, b), r); }, {x, w, b}, rng);
                 }},
        GradCase{"patch_embed",
                 [](Rng& rng) {
                     T img = random_leaf({4, 4, 6}, rng, 0, 1);
                     PatchEmbedder e{2, random_leaf({3, 24}, rng), random_leaf({3}, rng)};
                     T r = random_weights({4, 3}, rng);
                     return gradcheck([&] { return project(patch_embed(img, e), r); }, {img, e.weight, e.bias}, rng);
                 }},
        GradCase{"apply_token_type",
                 [](Rng& rng) {
                     T tokens = random_leaf({4, 3}, rng);
                     TokenTypeTable table{TokenTypeMode::soft, random_leaf({3}, rng), random_leaf({3}, rng),
                                          random_leaf({3}, rng)};
                     std::vector<double> m{0.0, 0.25, 0.5, 1.0};
                     T r = random_weights({4, 3}, rng);
                     return gradcheck(
                         [&] {
                             return project(apply_token_type(tokens, std::span<const double>(m), table,
                                                             SpanKind::static_template),
                                            r) +
                                    project(apply_token_type(tokens, std::nullopt, table, SpanKind::search), r);
                         },
                         {tokens, table.foreground, table.background, table.search}, rng);
                 }},
        GradCase{"encoder_depth2",
                 [](Rng& rng) {
                     ParameterSet ps;
                     Encoder enc({2, 8, 2, 2.0, 1e-5}, ps, rng);
                     T x = random_leaf({5, 8}, rng, -2, 2);
                     T r = random_weights({5, 8}, rng);
                     std::vector<T> wrt{x};
                     for (const auto& p : ps.all()) wrt.push_back(p.value);
                     return gradcheck([&] { return project(enc.encode(x), r); }, wrt, rng, 6);
                 }},
        GradCase{"track_head",
                 [](Rng& rng) {
                     ParameterSet ps;
                     TrackHead head({6, 5}, ps, rng);
                     T x = random_leaf({9, 6}, rng);
                     T r1 = random_weights({3, 3}, rng), r2 = random_weights({3, 3, 2}, rng),
                       r3 = random_weights({3, 3, 2}, rng);
                     std::vector<T> wrt{x};
                     for (const auto& p : ps.all()) wrt.push_back(p.value);
                     return gradcheck(
                         [&] {
                             HeadOutput o = head(x);
                             return project(o.score, r1) + project(o.offset, r2) + project(o.size, r3);
                         },
                         wrt, rng);
                 }},
        GradCase{"task_head",
                 [](Rng& rng) {
                     ParameterSet ps;
                     TaskHead head({6, 4, PoolingMode::mean_pool}, ps, rng);
                     T x = random_leaf({7, 6}, rng);
                     T r = random_weights({5}, rng);
                     std::vector<T> wrt{x};
                     for (const auto& p : ps.all()) wrt.push_back(p.value);
                     return gradcheck([&] { return project(head(x), r); }, wrt, rng);
                 }},
        GradCase{"weighted_focal",
                 [](Rng& rng) {
                     T logits = random_leaf({4, 4}, rng, -2, 2);
                     const Box gt = Box::from_center(rng.uniform(17, 47), rng.uniform(17, 47), rng.uniform(8, 30),
                                                     rng.uniform(8, 30));
                     T target = focal_target(gt, 4, 16);
                     return gradcheck([&] { return weighted_focal(sigmoid(logits), target); }, {logits}, rng);
                 }},
        GradCase{"giou",
                 [](Rng& rng) {
                     auto box = [&](double lo_c, double hi_c) {
                         const double cx = rng.uniform(lo_c, hi_c), cy = rng.uniform(lo_c, hi_c);
                         const double w = rng.uniform(0.1, 0.4), h = rng.uniform(0.1, 0.4);
                         return Tensor({4}, {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2});
                     };
                     T pred = box(0.3, 0.7);
                     pred.set_requires_grad(true);
                     T gt = box(0.3, 0.7);
                     return gradcheck([&] { return giou(pred, gt); }, {pred}, rng);
                 }},
        GradCase{"task_ce",
                 [](Rng& rng) {
                     T logits = random_leaf({5}, rng, -3, 3);
                     const std::size_t k = rng.below(5);
                     return gradcheck([&] { return task_ce(logits, k); }, {logits}, rng);
                 }},
        GradCase{"total_loss_heads",
                 [](Rng& rng) {
                     ParameterSet ps;
                     TrackHead head({6, 5}, ps, rng);
                     TaskHead task({6, 4, PoolingMode::mean_pool}, ps, rng);
                     T x = random_leaf({16, 6}, rng);
                     const Box gt = Box::from_center(rng.uniform(17, 47), rng.uniform(17, 47), rng.uniform(8, 30),
                                                     rng.uniform(8, 30));
                     const LossContext ctx{16, 64, {}, {}};
                     const std::size_t k = rng.below(5);
                     std::vector<T> wrt{x};
                     for (const auto& p : ps.all()) wrt.push_back(p.value);
                     return gradcheck([&] { return total_loss(head(x), task(x), gt, k, ctx).total; }, wrt, rng);
                 }},
        GradCase{"total_loss_model",
                 [](Rng& rng) {
                     ModelConfig mc;
                     mc.patch = 4;
                     mc.dim = 8;
                     mc.heads = 2;
                     mc.depth = 2;
                     mc.mlp_ratio = 2;
                     mc.template_res = 8;
                     mc.search_res = 16;
                     mc.head_hidden = 6;
                     mc.task_hidden = 4;
                     mc.init_seed = rng.next_u64();
                     SUTrackModel model(mc);
                     auto image = [&](std::size_t s) {
                         Tensor t({s, s, 3});
                         for (auto& v : t.mutable_values()) v = rng.uniform();
                         return t;
                     };
                     const Task task = kAllTasks[rng.below(kNumTasks)];
                     auto frame = [&](std::size_t s) {
                         ModalFrame f{image(s), std::nullopt, std::nullopt, task};
                         if (task_has_aux(task)) f.aux = image(s);
                         if (task == Task::RGBL) f.language = "red square";
                         return f;
                     };
                     std::vector<TemplateInput> templates{{frame(8), {2, 2, 6, 6}}, {frame(8), {1, 2, 7, 5}}};
                     const ModalFrame search = frame(16);
                     const Box gt = Box::from_center(rng.uniform(5, 11), rng.uniform(5, 11), rng.uniform(3, 8),
                                                     rng.uniform(3, 8));
                     const LossContext ctx{4, 16, {}, {}};
                     std::vector<T> wrt;
                     for (const auto& p : model.parameters().all()) wrt.push_back(p.value);
                     return gradcheck(
                         [&] {
                             ModelOutput out = model.forward(templates, search);
                             return total_loss(out.head, out.task_logits, gt, task_index(task), ctx).total;
                         },
                         wrt, rng, 3);
                 }},
    };
    return cases;
}

struct GradSuiteResult {
    std::string name;
    std::size_t seeds = 0, failures = 0;
    std::string first_failure;
};

inline std::vector<GradSuiteResult> run_gradient_suite(std::size_t seeds) {
    std::vector<GradSuiteResult> out;
    for (const auto& c : gradient_cases()) {
        GradSuiteResult r{c.name, seeds, 0, ""};
        for (std::size_t s = 0; s < seeds; ++s) {
            Rng rng(1000 + s);
            const GradCheck g = c.run(rng);
            if (!g.ok) {
                if (r.failures == 0) r.first_failure = "seed " + std::to_string(s) + ": " + g.message;
                ++r.failures;
            }
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace sutrack::testing
