#include "sutrack/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace sutrack {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    if (shape.size() == 1) s += ",";
    return s + ")";
}

Tensor::Tensor() = default;

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<detail::TensorImpl>()) {
    for (auto d : shape) {
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive, got " + shape_str(shape));
    }
    impl_->data.assign(shape_numel(shape), fill);
    impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : impl_(std::make_shared<detail::TensorImpl>()) {
    for (auto d : shape) {
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive, got " + shape_str(shape));
    }
    if (shape_numel(shape) != values.size()) {
        throw std::invalid_argument("shape " + shape_str(shape) + " needs " + std::to_string(shape_numel(shape)) +
                                    " values, got " + std::to_string(values.size()));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

namespace {
const detail::TensorImpl& checked(const std::shared_ptr<detail::TensorImpl>& p) {
    if (!p) throw std::logic_error("use of an undefined tensor");
    return *p;
}
}  // namespace

const Shape& Tensor::shape() const { return checked(impl_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size()) {
        throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
    }
    return s[axis];
}

std::size_t Tensor::numel() const { return checked(impl_).data.size(); }

std::span<const double> Tensor::values() const& { return checked(impl_).data; }

std::span<double> Tensor::mutable_values() & {
    checked(impl_);
    if (impl_->node) throw std::logic_error("cannot mutate a tensor produced by a recorded op");
    return impl_->data;
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    const auto& s = shape();
    if (index.size() != s.size()) {
        throw std::invalid_argument("index rank " + std::to_string(index.size()) + " for shape " + shape_str(s));
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= s[axis]) throw std::out_of_range("index out of range for shape " + shape_str(s));
        flat = flat * s[axis] + i;
        ++axis;
    }
    return impl_->data[flat];
}

bool Tensor::requires_grad() const { return checked(impl_).requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
    checked(impl_);
    if (impl_->node) throw std::logic_error("requires_grad can only be set on leaf tensors");
    impl_->requires_grad = on;
    return *this;
}

bool Tensor::is_leaf() const { return checked(impl_).node == nullptr; }

bool Tensor::has_grad() const { return !checked(impl_).grad.empty(); }

std::span<const double> Tensor::grad() const& {
    if (!has_grad()) throw std::logic_error("tensor has no gradient");
    return impl_->grad;
}

Tensor Tensor::grad_tensor() const {
    auto g = grad();
    return Tensor(shape(), std::vector<double>(g.begin(), g.end()));
}

void Tensor::zero_grad() {
    checked(impl_);
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
}

Tensor Tensor::detach() const {
    const auto& src = checked(impl_);
    return Tensor(src.shape, src.data);
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Tensor& loss) {
    if (!loss.defined()) throw std::invalid_argument("backward() on an undefined tensor");
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward() needs a scalar loss, got shape " + shape_str(loss.shape()));
    }
    using detail::TensorImpl;
    TensorImpl* root = loss.impl().get();
    if (!root->requires_grad) throw std::invalid_argument("backward() on a tensor that does not require grad");

    // Iterative post-order DFS gives a topological order (inputs before outputs).
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> seen;
    std::vector<std::pair<TensorImpl*, std::size_t>> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
        auto& [t, next] = stack.back();
        if (t->node && next < t->node->inputs.size()) {
            TensorImpl* child = t->node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
            continue;
        }
        order.push_back(t);
        stack.pop_back();
    }

    std::unordered_map<TensorImpl*, std::vector<double>> grads;
    grads[root].assign(1, 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* t = *it;
        auto found = grads.find(t);
        if (found == grads.end()) continue;
        std::vector<double> g = std::move(found->second);
        grads.erase(found);
        if (!t->node) {
            if (t->grad.empty()) {
                t->grad = std::move(g);
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) t->grad[i] += g[i];
            }
            continue;
        }
        const auto& inputs = t->node->inputs;
        std::vector<std::span<double>> buffers(inputs.size());
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            TensorImpl* in = inputs[i].get();
            if (!in->requires_grad) continue;
            auto& buf = grads[in];
            if (buf.empty()) buf.assign(in->data.size(), 0.0);
            buffers[i] = buf;
        }
        t->node->backward(*t, g, buffers);
    }
}

}  // namespace sutrack
