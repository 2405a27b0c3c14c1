#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dpgcnn/rng.hpp"
#include "dpgcnn/tensor.hpp"

namespace dpgcnn {

struct AdamConfig {
    double lr = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// Adam with L2 regularization folded into the gradient
/// (g += weight_decay * p) before the moment update.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    /// Applies one bias-corrected update to every parameter using its
    /// accumulated `grad`. Moments are created on the first call.
    void step(std::span<Parameter* const> params);

    std::size_t steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return config_; }
    const std::vector<Tensor>& first_moments() const noexcept { return m_; }
    const std::vector<Tensor>& second_moments() const noexcept { return v_; }

private:
    AdamConfig config_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

/// i.i.d. uniform on +-sqrt(6 / (rows + cols)).
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

void zero_grads(std::span<Parameter* const> params);

std::size_t parameter_count(std::span<Parameter* const> params);

}  // namespace dpgcnn
