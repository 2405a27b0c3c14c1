#include "dpgcnn/optim.hpp"

#include <cmath>

#include "dpgcnn/error.hpp"

namespace dpgcnn {

void Adam::step(std::span<Parameter* const> params) {
    if (m_.empty()) {
        for (const Parameter* p : params) {
            m_.emplace_back(p->value.rows(), p->value.cols());
            v_.emplace_back(p->value.rows(), p->value.cols());
        }
    }
    if (m_.size() != params.size()) {
        fail(ErrorCode::shape_mismatch, "adam: parameter list changed between steps");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        if (!p.grad.same_shape(p.value) || !m_[i].same_shape(p.value)) {
            fail(ErrorCode::shape_mismatch, "adam: parameter '" + p.name + "' " + p.value.shape_string() +
                                                " with gradient " + p.grad.shape_string());
        }
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double g = p.grad[k] + config_.weight_decay * p.value[k];
            m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g;
            v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g * g;
            const double m_hat = m[k] / c1;
            const double v_hat = v[k] / c2;
            p.value[k] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

void zero_grads(std::span<Parameter* const> params) {
    for (Parameter* p : params) p->zero_grad();
}

std::size_t parameter_count(std::span<Parameter* const> params) {
    std::size_t total = 0;
    for (const Parameter* p : params) total += p->value.size();
    return total;
}

}  // namespace dpgcnn
