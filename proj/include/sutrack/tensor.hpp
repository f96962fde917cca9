#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sutrack {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct TensorImpl;

// Records how one tensor was produced. `backward` receives the output gradient
// and one buffer per input; a buffer is empty when that input needs no grad.
struct Node {
    using BackwardFn = std::function<void(const TensorImpl& out, std::span<const double> grad_out,
                                          std::span<const std::span<double>> grad_in)>;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    BackwardFn backward;
    const char* name = "";
};

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty == no gradient accumulated
    bool requires_grad = false;
    std::shared_ptr<Node> node;
};

}  // namespace detail

/// Dense row-major n-dimensional array of doubles.
///
/// Copies are cheap handles that alias the same storage, the way framework
/// tensors behave; use clone() for an independent copy. Tensors produced by an
/// op whose inputs require grad carry a link to the op so backward() can walk
/// the recorded graph.
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double value);
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
    static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    /// Views into the storage; deleted on temporaries, whose storage may die with them.
    std::span<const double> values() const&;
    std::span<const double> values() const&& = delete;
    /// Mutable access is only allowed on leaves (tensors with no recorded op).
    std::span<double> mutable_values() &;
    std::span<double> mutable_values() && = delete;
    double item() const;
    double at(std::initializer_list<std::size_t> index) const;
    double operator[](std::size_t flat) const { return values()[flat]; }

    bool requires_grad() const;
    Tensor& set_requires_grad(bool on);
    bool is_leaf() const;

    bool has_grad() const;
    std::span<const double> grad() const&;
    std::span<const double> grad() const&& = delete;
    Tensor grad_tensor() const;
    /// Drops the accumulated gradient; has_grad() is false afterwards.
    void zero_grad();

    /// New leaf holding a copy of the values, detached from any graph.
    Tensor detach() const;
    Tensor clone() const { return detach(); }

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

/// True unless a NoGradGuard is alive on this thread.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Reverse-mode sweep from a scalar loss. Leaves that require grad receive
/// d(loss)/d(leaf), added to whatever gradient they already hold: call
/// zero_grad() between steps to start fresh.
void backward(const Tensor& loss);

}  // namespace sutrack
