#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "dpgcnn/tensor.hpp"

namespace dpgcnn {

class Tape;

enum class OpKind : std::uint8_t {
    constant,
    variable,
    parameter,
    matmul,
    add,
    add_bias,
    scale,
    concat_cols,
    row_slice,
    gather_rows,
    segment_sum,
    segment_softmax,
    scale_rows,
    attend,
    leaky_relu,
    elu,
    relu,
    dropout,
    sum,
    cross_entropy,
    custom,
};

std::string_view to_string(OpKind kind);

/// Handle to a node recorded on a Tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

    const Tensor& value() const;
    const Tensor& grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Records forward operations in topological order and replays them in
/// reverse to accumulate gradients. A node's parents always precede it.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Input that never receives a gradient.
    Var constant(Tensor value);
    /// Leaf whose gradient is kept on the tape.
    Var variable(Tensor value);
    /// Leaf bound to a Parameter; backward() adds into `p.grad`.
    Var parameter(Parameter& p);

    /// Appends an op node. `backward` runs only if some parent needs a gradient.
    Var record(OpKind kind, Tensor value, std::initializer_list<Var> parents, BackwardFn backward);

    void backward(Var loss);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    /// Gradient of the last backward() target; empty tensor if none reached it.
    const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    /// Gradient slot of a node, zero-initialized on first use. Ops write
    /// parent gradients through this.
    Tensor& grad_slot(std::size_t id);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t backward_visits() const noexcept { return backward_visits_; }
    OpKind kind(std::size_t id) const { return nodes_[id].kind; }

    /// When on, every recorded value is checked for NaN/Inf.
    void set_check_finite(bool on) noexcept { check_finite_ = on; }
    static void set_default_check_finite(bool on) noexcept;

private:
    struct Node {
        OpKind kind = OpKind::constant;
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        Parameter* param = nullptr;
    };

    Var push(Node node);

    std::deque<Node> nodes_;
    std::size_t backward_visits_ = 0;
    bool check_finite_ = default_check_finite();
    static bool default_check_finite() noexcept;
};

}  // namespace dpgcnn
