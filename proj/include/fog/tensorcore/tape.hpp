#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fog/tensorcore/errors.hpp"
#include "fog/tensorcore/tensor.hpp"

namespace fog {

template <typename T>
class Tape;

/// A learnable tensor that outlives any single tape. Each forward pass binds it
/// to a fresh tape via Tape::param; Tape::backward adds into `grad`.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    std::size_t size() const noexcept { return value.size(); }
    void zero_grad() {
        if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
        grad.fill(T{0});
    }
};

/// Handle to a node on a tape.
template <typename T>
class Var {
public:
    Var() = default;

    Tape<T>* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

    const Tensor<T>& value() const { return tape_->value(id_); }
    const Shape& shape() const { return value().shape(); }

private:
    friend class Tape<T>;
    Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape<T>* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode differentiation tape. Nodes are appended in evaluation order,
/// so the node vector is always topologically sorted; backward walks it in
/// reverse and never reorders accumulation.
///
/// The scalar type is the precision setting: Tape<float> for training,
/// Tape<double> for gradient checks and oracles.
template <typename T>
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Value with no gradient.
    Var<T> constant(Tensor<T> value) { return push(std::move(value), {}, nullptr, "constant", false, nullptr); }

    /// Leaf that receives a gradient (for differentiating with respect to inputs).
    Var<T> input(Tensor<T> value) { return push(std::move(value), {}, nullptr, "input", true, nullptr); }

    /// Bind a parameter. Binding the same parameter twice returns the same node,
    /// so a shared weight contributes one accumulated gradient.
    Var<T> param(Parameter<T>& p) {
        if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var<T>(this, it->second);
        Var<T> v = push(p.value, {}, nullptr, "param", true, &p);
        param_nodes_.emplace(&p, v.id());
        return v;
    }

    /// Record the result of a primitive. The node needs a gradient iff any input does.
    Var<T> record(Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn backward, const char* op) {
        bool needs = false;
        for (std::size_t in : inputs) needs = needs || nodes_.at(in).needs_grad;
        return push(std::move(value), std::move(inputs), needs ? std::move(backward) : BackwardFn{}, op, needs,
                    nullptr);
    }

    const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    const Tensor<T>& grad_of(std::size_t id) const { return nodes_[id].grad; }

    /// Gradient buffer of `id`, allocated as zeros on first use.
    Tensor<T>& grad_accumulator(std::size_t id) {
        Node& n = nodes_[id];
        if (n.grad.shape() != n.value.shape()) n.grad = Tensor<T>(n.value.shape());
        return n.grad;
    }

    /// Gradient of a node after backward (zeros if the loss does not depend on it).
    Tensor<T> grad(Var<T> v) const {
        check_owned(v);
        const Node& n = nodes_[v.id()];
        if (n.grad.shape() != n.value.shape()) return Tensor<T>(n.value.shape());
        return n.grad;
    }

    /// Propagate d(loss)/d(node) to every node. Parameter gradients are added
    /// into Parameter::grad, so several backward passes accumulate.
    void backward(Var<T> loss) {
        if (loss.tape() != this) throw TapeError("backward: loss is not on this tape");
        if (value(loss.id()).size() != 1) {
            throw TapeError("backward: loss must be a scalar, got shape " + shape_to_string(value(loss.id()).shape()));
        }
        for (Node& n : nodes_) n.grad = Tensor<T>();
        grad_accumulator(loss.id())[0] = T{1};
        for (std::size_t i = loss.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.needs_grad || !n.backward || n.grad.shape() != n.value.shape()) continue;
            n.backward(*this, i);
        }
        for (Node& n : nodes_) {
            if (n.param == nullptr) continue;
            Parameter<T>& p = *n.param;
            if (p.grad.shape() != p.value.shape()) p.zero_grad();
            if (n.grad.shape() != n.value.shape()) continue;
            for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad[k] += n.grad[k];
        }
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    const char* op_name(std::size_t id) const { return nodes_.at(id).op; }
    std::vector<std::size_t> inputs_of(std::size_t id) const { return nodes_.at(id).inputs; }

    void clear() {
        nodes_.clear();
        param_nodes_.clear();
    }

    void check_owned(Var<T> v) const {
        if (v.tape() != this || v.id() >= nodes_.size()) throw TapeError("variable does not belong to this tape");
    }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        const char* op = "";
        bool needs_grad = false;
        Parameter<T>* param = nullptr;
    };

    Var<T> push(Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn fn, const char* op, bool needs,
                Parameter<T>* param) {
        Node n;
        n.value = std::move(value);
        n.grad = Tensor<T>();
        n.inputs = std::move(inputs);
        n.backward = std::move(fn);
        n.op = op;
        n.needs_grad = needs;
        n.param = param;
        nodes_.push_back(std::move(n));
        return Var<T>(this, nodes_.size() - 1);
    }

    std::deque<Node> nodes_;  // stable references to values across pushes
    std::unordered_map<const Parameter<T>*, std::size_t> param_nodes_;
};

}  // namespace fog
