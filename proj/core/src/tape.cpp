#include "dpgcnn/tape.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "dpgcnn/error.hpp"

namespace dpgcnn {

namespace {

bool initial_check_finite() {
#ifndef NDEBUG
    return true;
#else
    const char* env = std::getenv("DPGCNN_CHECK_FINITE");
    return env != nullptr && std::string(env) != "0";
#endif
}

std::atomic<bool>& check_finite_flag() {
    static std::atomic<bool> flag{initial_check_finite()};
    return flag;
}

}  // namespace

std::string_view to_string(OpKind kind) {
    switch (kind) {
        case OpKind::constant: return "constant";
        case OpKind::variable: return "variable";
        case OpKind::parameter: return "parameter";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::add_bias: return "add_bias";
        case OpKind::scale: return "scale";
        case OpKind::concat_cols: return "concat_cols";
        case OpKind::row_slice: return "row_slice";
        case OpKind::gather_rows: return "gather_rows";
        case OpKind::segment_sum: return "segment_sum";
        case OpKind::segment_softmax: return "segment_softmax";
        case OpKind::scale_rows: return "scale_rows";
        case OpKind::attend: return "attend";
        case OpKind::leaky_relu: return "leaky_relu";
        case OpKind::elu: return "elu";
        case OpKind::relu: return "relu";
        case OpKind::dropout: return "dropout";
        case OpKind::sum: return "sum";
        case OpKind::cross_entropy: return "cross_entropy";
        case OpKind::custom: return "custom";
    }
    return "unknown";
}

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

void Tape::set_default_check_finite(bool on) noexcept { check_finite_flag().store(on); }
bool Tape::default_check_finite() noexcept { return check_finite_flag().load(); }

Var Tape::push(Node node) {
    if (check_finite_ && !node.value.all_finite()) {
        fail(ErrorCode::non_finite_value,
             "op '" + std::string(to_string(node.kind)) + "' produced NaN/Inf at node " +
                 std::to_string(nodes_.size()));
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
    Node n;
    n.kind = OpKind::constant;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::variable(Tensor value) {
    Node n;
    n.kind = OpKind::variable;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
    Node n;
    n.kind = OpKind::parameter;
    n.value = p.value;
    n.requires_grad = true;
    n.param = &p;
    return push(std::move(n));
}

Var Tape::record(OpKind kind, Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
    Node n;
    n.kind = kind;
    n.value = std::move(value);
    n.parents.reserve(parents.size());
    for (const Var& p : parents) {
        n.parents.push_back(p.id());
        n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

Tensor& Tape::grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size() || !n.grad.same_shape(n.value)) {
        n.grad = Tensor(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

void Tape::backward(Var loss) {
    Node& root = nodes_[loss.id()];
    if (root.value.rows() != 1 || root.value.cols() != 1) {
        fail(ErrorCode::non_scalar_loss, "loss has shape " + root.value.shape_string());
    }
    for (Node& n : nodes_) n.grad = Tensor();
    backward_visits_ = 0;
    grad_slot(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        ++backward_visits_;
        Node& n = nodes_[i];
        if (n.grad.empty() && n.value.size() != 0) continue;
        if (n.backward) n.backward(*this, i);
        if (n.param != nullptr) {
            Tensor& acc = n.param->grad;
            if (!acc.same_shape(n.value)) acc = Tensor(n.value.rows(), n.value.cols());
            for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += n.grad[k];
        }
    }
}

}  // namespace dpgcnn
