#include "sutrack/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sutrack {

namespace {

using detail::Node;
using detail::TensorImpl;
using Impl = std::shared_ptr<TensorImpl>;

Tensor make_result(Shape shape, std::vector<double> data, std::vector<Impl> inputs, Node::BackwardFn fn,
                   const char* name) {
    Tensor out(std::move(shape), std::move(data));
    if (!grad_enabled()) return out;
    bool needs = std::any_of(inputs.begin(), inputs.end(), [](const Impl& p) { return p->requires_grad; });
    if (!needs) return out;
    auto node = std::make_shared<Node>();
    node->inputs = std::move(inputs);
    node->backward = std::move(fn);
    node->name = name;
    out.impl()->requires_grad = true;
    out.impl()->node = std::move(node);
    return out;
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

Shape broadcast_shape(const char* op, const Shape& a, const Shape& b) {
    std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1) shape_error(op, a, b);
        out[i] = std::max(da, db);
    }
    return out;
}

// For each flat index of `out`, the flat index of the broadcast source `in`.
// Empty when the shapes are identical.
std::vector<std::size_t> broadcast_index(const Shape& in, const Shape& out) {
    if (in == out) return {};
    std::size_t rank = out.size();
    std::vector<std::size_t> in_stride(rank, 0);
    std::size_t stride = 1;
    for (std::size_t k = 0; k < in.size(); ++k) {
        std::size_t axis = in.size() - 1 - k;
        std::size_t oaxis = rank - 1 - k;
        in_stride[oaxis] = in[axis] == 1 ? 0 : stride;
        stride *= in[axis];
    }
    std::size_t n = shape_numel(out);
    std::vector<std::size_t> map(n);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t src = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
        map[flat] = src;
        for (std::size_t axis = rank; axis-- > 0;) {
            ++idx[axis];
            src += in_stride[axis];
            if (idx[axis] < out[axis]) break;
            src -= in_stride[axis] * idx[axis];
            idx[axis] = 0;
        }
    }
    return map;
}

struct BinaryPlan {
    Shape shape;
    std::vector<std::size_t> amap, bmap;
    std::size_t a_at(std::size_t i) const { return amap.empty() ? i : amap[i]; }
    std::size_t b_at(std::size_t i) const { return bmap.empty() ? i : bmap[i]; }
};

std::shared_ptr<BinaryPlan> plan_binary(const char* op, const Tensor& a, const Tensor& b) {
    auto plan = std::make_shared<BinaryPlan>();
    plan->shape = broadcast_shape(op, a.shape(), b.shape());
    plan->amap = broadcast_index(a.shape(), plan->shape);
    plan->bmap = broadcast_index(b.shape(), plan->shape);
    return plan;
}

// f(x, y) -> value; df(x, y, value) -> (d/dx, d/dy)
template <class F, class DF>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, F f, DF df) {
    auto plan = plan_binary(name, a, b);
    std::size_t n = shape_numel(plan->shape);
    auto av = a.values();
    auto bv = b.values();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(av[plan->a_at(i)], bv[plan->b_at(i)]);
    return make_result(
        plan->shape, std::move(out), {a.impl(), b.impl()},
        [plan, df](const TensorImpl& res, std::span<const double> g, std::span<const std::span<double>> gin) {
            const auto& x = *res.node->inputs[0];
            const auto& y = *res.node->inputs[1];
            for (std::size_t i = 0; i < g.size(); ++i) {
                std::size_t ia = plan->a_at(i);
                std::size_t ib = plan->b_at(i);
                auto [da, db] = df(x.data[ia], y.data[ib], res.data[i]);
                if (!gin[0].empty()) gin[0][ia] += g[i] * da;
                if (!gin[1].empty()) gin[1][ib] += g[i] * db;
            }
        },
        name);
}

template <class F, class DF>
Tensor unary_op(const char* name, const Tensor& x, F f, DF df) {
    auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    return make_result(
        x.shape(), std::move(out), {x.impl()},
        [df](const TensorImpl& res, std::span<const double> g, std::span<const std::span<double>> gin) {
            const auto& in = res.node->inputs[0]->data;
            for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] * df(in[i], res.data[i]);
        },
        name);
}

std::size_t last_dim(const Tensor& x, const char* op) {
    if (x.rank() == 0) throw std::invalid_argument(std::string(op) + ": needs rank >= 1, got scalar");
    return x.shape().back();
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double, double) { return std::pair{1.0, 1.0}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double, double) { return std::pair{1.0, -1.0}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double x, double y, double) { return std::pair{y, x}; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        "div", a, b,
        [](double x, double y) {
            if (y == 0.0) throw std::domain_error("div: division by zero");
            return x / y;
        },
        [](double, double y, double r) { return std::pair{1.0 / y, -r / y}; });
}

// Ties send the gradient to the first operand.
Tensor maximum(const Tensor& a, const Tensor& b) {
    return binary_op(
        "maximum", a, b, [](double x, double y) { return x >= y ? x : y; },
        [](double x, double y, double) { return x >= y ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0}; });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
    return binary_op(
        "minimum", a, b, [](double x, double y) { return x <= y ? x : y; },
        [](double x, double y, double) { return x <= y ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0}; });
}

Tensor scale(const Tensor& x, double factor) {
    return unary_op(
        "scale", x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double offset) {
    return unary_op(
        "add_scalar", x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    auto av = a.values();
    auto bv = b.values();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = av[i * k + p];
            const double* brow = bv.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
        }
    }
    return make_result(
        {m, n}, std::move(out), {a.impl(), b.impl()},
        [m, k, n](const TensorImpl& res, std::span<const double> g, std::span<const std::span<double>> gin) {
            const auto& A = res.node->inputs[0]->data;
            const auto& B = res.node->inputs[1]->data;
            if (!gin[0].empty()) {
                // dA = G·Bᵀ
                for (std::size_t i = 0; i < m; ++i) {
                    const double* grow = g.data() + i * n;
                    for (std::size_t p = 0; p < k; ++p) {
                        const double* brow = B.data() + p * n;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        gin[0][i * k + p] += acc;
                    }
                }
            }
            if (!gin[1].empty()) {
                // dB = Aᵀ·G
                for (std::size_t i = 0; i < m; ++i) {
                    const double* grow = g.data() + i * n;
                    for (std::size_t p = 0; p < k; ++p) {
                        const double s = A[i * k + p];
                        double* drow = gin[1].data() + p * n;
                        for (std::size_t j = 0; j < n; ++j) drow[j] += s * grow[j];
                    }
                }
            }
        },
        "matmul");
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (weight.rank() != 2 || x.rank() != 2 || x.dim(1) != weight.dim(1)) {
        shape_error("linear", x.shape(), weight.shape());
    }
    const std::size_t m = x.dim(0), k = x.dim(1), n = weight.dim(0);
    const bool has_bias = bias.defined();
    if (has_bias && (bias.rank() != 1 || bias.dim(0) != n)) shape_error("linear bias", weight.shape(), bias.shape());
    auto xv = x.values();
    auto wv = weight.values();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* xrow = xv.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* wrow = wv.data() + j * k;
            double acc = has_bias ? bias.values()[j] : 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += xrow[p] * wrow[p];
            out[i * n + j] = acc;
        }
    }
    std::vector<Impl> inputs{x.impl(), weight.impl()};
    if (has_bias) inputs.push_back(bias.impl());
    return make_result(
        {m, n}, std::move(out), std::move(inputs),
        [m, k, n, has_bias](const TensorImpl& res, std::span<const double> g,
                            std::span<const std::span<double>> gin) {
            const auto& X = res.node->inputs[0]->data;
            const auto& W = res.node->inputs[1]->data;
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g.data() + i * n;
                if (!gin[0].empty()) {
                    double* dx = gin[0].data() + i * k;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double s = grow[j];
                        const double* wrow = W.data() + j * k;
                        for (std::size_t p = 0; p < k; ++p) dx[p] += s * wrow[p];
                    }
                }
                if (!gin[1].empty()) {
                    const double* xrow = X.data() + i * k;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double s = grow[j];
                        double* dw = gin[1].data() + j * k;
                        for (std::size_t p = 0; p < k; ++p) dw[p] += s * xrow[p];
                    }
                }
                if (has_bias && !gin[2].empty()) {
                    for (std::size_t j = 0; j < n; ++j) gin[2][j] += grow[j];
                }
            }
        },
        "linear");
}

Tensor transpose(const Tensor& x) {
    if (x.rank() != 2) throw std::invalid_argument("transpose: needs rank 2, got " + shape_str(x.shape()));
    const std::size_t r = x.dim(0), c = x.dim(1);
    auto xv = x.values();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
    return make_result(
        {c, r}, std::move(out), {x.impl()},
        [r, c](const TensorImpl&, std::span<const double> g, std::span<const std::span<double>> gin) {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gin[0][i * c + j] += g[j * r + i];
        },
        "transpose");
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) shape_error("reshape", x.shape(), shape);
    auto xv = x.values();
    return make_result(
        std::move(shape), std::vector<double>(xv.begin(), xv.end()), {x.impl()},
        [](const TensorImpl&, std::span<const double> g, std::span<const std::span<double>> gin) {
            for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
        },
        "reshape");
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no tensors");
    const Shape& first = parts.front().shape();
    if (axis >= first.size()) throw std::invalid_argument("concat: axis out of range for " + shape_str(first));
    Shape out_shape = first;
    out_shape[axis] = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != first.size()) shape_error("concat", first, s);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i != axis && s[i] != first[i]) shape_error("concat", first, s);
        }
        out_shape[axis] += s[axis];
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];

    std::vector<std::size_t> widths;
    std::vector<Impl> inputs;
    for (const auto& p : parts) {
        widths.push_back(p.dim(axis) * inner);
        inputs.push_back(p.impl());
    }
    const std::size_t row = out_shape[axis] * inner;
    std::vector<double> out(outer * row);
    std::size_t offset = 0;
    for (std::size_t t = 0; t < parts.size(); ++t) {
        auto v = parts[t].values();
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(v.data() + o * widths[t], widths[t], out.data() + o * row + offset);
        offset += widths[t];
    }
    return make_result(
        std::move(out_shape), std::move(out), std::move(inputs),
        [widths, outer, row](const TensorImpl&, std::span<const double> g, std::span<const std::span<double>> gin) {
            std::size_t off = 0;
            for (std::size_t t = 0; t < widths.size(); ++t) {
                if (!gin[t].empty()) {
                    for (std::size_t o = 0; o < outer; ++o)
                        for (std::size_t i = 0; i < widths[t]; ++i)
                            gin[t][o * widths[t] + i] += g[o * row + off + i];
                }
                off += widths[t];
            }
        },
        "concat");
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    const Shape& s = x.shape();
    if (axis >= s.size() || begin >= end || end > s[axis]) {
        throw std::invalid_argument("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                    ") on axis " + std::to_string(axis) + " invalid for shape " + shape_str(s));
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t src_row = s[axis] * inner;
    const std::size_t width = (end - begin) * inner;
    const std::size_t start = begin * inner;
    Shape out_shape = s;
    out_shape[axis] = end - begin;
    auto xv = x.values();
    std::vector<double> out(outer * width);
    for (std::size_t o = 0; o < outer; ++o) std::copy_n(xv.data() + o * src_row + start, width, out.data() + o * width);
    return make_result(
        std::move(out_shape), std::move(out), {x.impl()},
        [outer, width, src_row, start](const TensorImpl&, std::span<const double> g,
                                       std::span<const std::span<double>> gin) {
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t i = 0; i < width; ++i) gin[0][o * src_row + start + i] += g[o * width + i];
        },
        "slice");
}

Tensor gather(const Tensor& x, std::vector<std::size_t> index, Shape shape) {
    if (shape_numel(shape) != index.size()) {
        throw std::invalid_argument("gather: " + std::to_string(index.size()) + " indices for shape " + shape_str(shape));
    }
    auto xv = x.values();
    std::vector<double> out(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= xv.size()) {
            throw std::out_of_range("gather: index " + std::to_string(index[i]) + " outside shape " +
                                    shape_str(x.shape()));
        }
        out[i] = xv[index[i]];
    }
    auto idx = std::make_shared<std::vector<std::size_t>>(std::move(index));
    return make_result(
        std::move(shape), std::move(out), {x.impl()},
        [idx](const TensorImpl&, std::span<const double> g, std::span<const std::span<double>> gin) {
            for (std::size_t i = 0; i < idx->size(); ++i) gin[0][(*idx)[i]] += g[i];
        },
        "gather");
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
    if (broadcast_shape("broadcast_to", x.shape(), shape) != shape) shape_error("broadcast_to", x.shape(), shape);
    auto map = std::make_shared<std::vector<std::size_t>>(broadcast_index(x.shape(), shape));
    auto xv = x.values();
    const std::size_t n = shape_numel(shape);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = xv[map->empty() ? i : (*map)[i]];
    return make_result(
        shape, std::move(out), {x.impl()},
        [map](const TensorImpl&, std::span<const double> g, std::span<const std::span<double>> gin) {
            for (std::size_t i = 0; i < g.size(); ++i) gin[0][map->empty() ? i : (*map)[i]] += g[i];
        },
        "broadcast_to");
}

Tensor exp(const Tensor& x) {
    return unary_op(
        "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
    return unary_op(
        "log", x,
        [](double v) {
            if (!(v > 0.0)) throw std::domain_error("log: non-positive input " + std::to_string(v));
            return std::log(v);
        },
        [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
    return unary_op(
        "sqrt", x,
        [](double v) {
            if (v < 0.0) throw std::domain_error("sqrt: negative input " + std::to_string(v));
            return std::sqrt(v);
        },
        [](double, double y) {
            if (y == 0.0) throw std::domain_error("sqrt: gradient undefined at 0");
            return 0.5 / y;
        });
}

Tensor abs(const Tensor& x) {
    return unary_op(
        "abs", x, [](double v) { return std::fabs(v); },
        [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor relu(const Tensor& x) {
    return unary_op(
        "relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor pow(const Tensor& x, double exponent) {
    return unary_op(
        "pow", x, [exponent](double v) { return std::pow(v, exponent); },
        [exponent](double v, double) { return exponent * std::pow(v, exponent - 1.0); });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        "sigmoid", x,
        [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor gelu(const Tensor& x) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    return unary_op(
        "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
        [inv_sqrt_2pi](double v, double) {
            return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
        });
}

Tensor softmax(const Tensor& x) {
    const std::size_t d = last_dim(x, "softmax");
    const std::size_t rows = x.numel() / d;
    auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * d;
        double* o = out.data() + r * d;
        const double mx = *std::max_element(in, in + d);
        double total = 0.0;
        for (std::size_t j = 0; j < d; ++j) total += (o[j] = std::exp(in[j] - mx));
        for (std::size_t j = 0; j < d; ++j) o[j] /= total;
    }
    return make_result(
        x.shape(), std::move(out), {x.impl()},
        [rows, d](const TensorImpl& res, std::span<const double> g, std::span<const std::span<double>> gin) {
            for (std::size_t r = 0; r < rows; ++r) {
                const double* y = res.data.data() + r * d;
                const double* gr = g.data() + r * d;
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += gr[j] * y[j];
                for (std::size_t j = 0; j < d; ++j) gin[0][r * d + j] += y[j] * (gr[j] - dot);
            }
        },
        "softmax");
}

Tensor log_softmax(const Tensor& x) {
    const std::size_t d = last_dim(x, "log_softmax");
    const std::size_t rows = x.numel() / d;
    auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * d;
        const double mx = *std::max_element(in, in + d);
        double total = 0.0;
        for (std::size_t j = 0; j < d; ++j) total += std::exp(in[j] - mx);
        const double lse = mx + std::log(total);
        for (std::size_t j = 0; j < d; ++j) out[r * d + j] = in[j] - lse;
    }
    return make_result(
        x.shape(), std::move(out), {x.impl()},
        [rows, d](const TensorImpl& res, std::span<const double> g, std::span<const std::span<double>> gin) {
            for (std::size_t r = 0; r < rows; ++r) {
                const double* y = res.data.data() + r * d;
                const double* gr = g.data() + r * d;
                double gsum = 0.0;
                for (std::size_t j = 0; j < d; ++j) gsum += gr[j];
                for (std::size_t j = 0; j < d; ++j) gin[0][r * d + j] += gr[j] - std::exp(y[j]) * gsum;
            }
        },
        "log_softmax");
}

Tensor layer_norm(const Tensor& x, double eps) {
    const std::size_t d = last_dim(x, "layer_norm");
    const std::size_t rows = x.numel() / d;
    auto xv = x.values();
    std::vector<double> out(xv.size());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += in[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (std::size_t j = 0; j < d; ++j) out[r * d + j] = (in[j] - mu) * is;
    }
    return make_result(
        x.shape(), std::move(out), {x.impl()},
        [rows, d, inv_std](const TensorImpl& res, std::span<const double> g, std::span<const std::span<double>> gin) {
            const double inv_d = 1.0 / static_cast<double>(d);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* xh = res.data.data() + r * d;
                const double* gr = g.data() + r * d;
                double gmean = 0.0, gxmean = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    gmean += gr[j];
                    gxmean += gr[j] * xh[j];
                }
                gmean *= inv_d;
                gxmean *= inv_d;
                const double is = (*inv_std)[r];
                for (std::size_t j = 0; j < d; ++j) gin[0][r * d + j] += is * (gr[j] - gmean - xh[j] * gxmean);
            }
        },
        "layer_norm");
}

Tensor sum(const Tensor& x, const std::vector<std::size_t>& axes, bool keepdim) {
    const Shape& s = x.shape();
    std::vector<bool> reduce(s.size(), false);
    for (auto a : axes) {
        if (a >= s.size()) {
            throw std::invalid_argument("sum: axis " + std::to_string(a) + " out of range for " + shape_str(s));
        }
        reduce[a] = true;
    }
    Shape kept(s.size());
    Shape out_shape;
    for (std::size_t i = 0; i < s.size(); ++i) {
        kept[i] = reduce[i] ? 1 : s[i];
        if (!reduce[i] || keepdim) out_shape.push_back(kept[i]);
    }
    // Map output (in keepdim layout) back onto the input by broadcasting.
    auto map = std::make_shared<std::vector<std::size_t>>(broadcast_index(kept, s));
    std::vector<double> out(shape_numel(kept), 0.0);
    auto xv = x.values();
    for (std::size_t i = 0; i < xv.size(); ++i) out[map->empty() ? i : (*map)[i]] += xv[i];
    return make_result(
        std::move(out_shape), std::move(out), {x.impl()},
        [map](const TensorImpl&, std::span<const double> g, std::span<const std::span<double>> gin) {
            for (std::size_t i = 0; i < gin[0].size(); ++i) gin[0][i] += g[map->empty() ? i : (*map)[i]];
        },
        "sum");
}

Tensor sum(const Tensor& x) {
    std::vector<std::size_t> axes(x.rank());
    for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
    if (axes.empty()) return reshape(x, {});
    return sum(x, axes, false);
}

Tensor mean(const Tensor& x, const std::vector<std::size_t>& axes, bool keepdim) {
    std::size_t count = 1;
    for (auto a : axes) count *= x.dim(a);
    return scale(sum(x, axes, keepdim), 1.0 / static_cast<double>(count));
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

void check_finite(const Tensor& x, const char* what) {
    for (double v : x.values()) {
        if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite value encountered");
    }
}

}  // namespace sutrack
