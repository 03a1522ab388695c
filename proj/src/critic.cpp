#include "tasrl/training.hpp"

namespace tasrl {

namespace {

// Inputs are mapped to O(1): voltage deviation from 1, injection, rate.
constexpr double kShift[3] = {1.0, 0.0, 0.0};
constexpr double kScale[3] = {10.0, 2.0, 10.0};

}  // namespace

Critic::Critic(int width, std::uint64_t seed) {
    if (width < 1) fail(ErrorCode::InvalidInput, "critic width must be at least 1");
    Rng rng(seed);
    const auto w = static_cast<std::size_t>(width);
    W1_.resize(3 * w);
    for (double& x : W1_) x = rng.normal() / std::sqrt(3.0);
    b1_.resize(w);
    for (double& x : b1_) x = 0.1 * rng.normal();
    w2_.assign(w, 0.0);  // zero output layer: Q = 0 at initialization
}

double Critic::operator()(double v, double q, double f) const {
    const double x[3] = {(v - kShift[0]) * kScale[0], (q - kShift[1]) * kScale[1], (f - kShift[2]) * kScale[2]};
    double y = b2_;
    for (std::size_t j = 0; j < b1_.size(); ++j) {
        const double z = W1_[3 * j] * x[0] + W1_[3 * j + 1] * x[1] + W1_[3 * j + 2] * x[2] + b1_[j];
        y += w2_[j] * std::tanh(z);
    }
    return y;
}

Critic::Gradient Critic::gradient(double v, double q, double f) const {
    const double x[3] = {(v - kShift[0]) * kScale[0], (q - kShift[1]) * kScale[1], (f - kShift[2]) * kScale[2]};
    const std::size_t w = b1_.size();
    Gradient g;
    g.params.assign(5 * w + 1, 0.0);
    double dx[3] = {0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < w; ++j) {
        const double z = W1_[3 * j] * x[0] + W1_[3 * j + 1] * x[1] + W1_[3 * j + 2] * x[2] + b1_[j];
        const double hj = std::tanh(z);
        const double back = w2_[j] * (1.0 - hj * hj);
        for (int k = 0; k < 3; ++k) {
            g.params[3 * j + static_cast<std::size_t>(k)] = back * x[k];
            dx[k] += back * W1_[3 * j + static_cast<std::size_t>(k)];
        }
        g.params[3 * w + j] = back;
        g.params[4 * w + j] = hj;
    }
    g.params[5 * w] = 1.0;
    g.dv = dx[0] * kScale[0];
    g.dq = dx[1] * kScale[1];
    g.df = dx[2] * kScale[2];
    return g;
}

std::vector<double> Critic::parameters() const {
    std::vector<double> p(W1_);
    p.insert(p.end(), b1_.begin(), b1_.end());
    p.insert(p.end(), w2_.begin(), w2_.end());
    p.push_back(b2_);
    return p;
}

void Critic::set_parameters(const std::vector<double>& p) {
    const std::size_t w = b1_.size();
    if (p.size() != 5 * w + 1) fail(ErrorCode::DimensionMismatch, "critic: wrong parameter count");
    std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(3 * w), W1_.begin());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(3 * w), p.begin() + static_cast<std::ptrdiff_t>(4 * w),
              b1_.begin());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(4 * w), p.begin() + static_cast<std::ptrdiff_t>(5 * w),
              w2_.begin());
    b2_ = p.back();
}

double Critic::train_step(double v, double q, double f, double target, double lr) {
    const double err = (*this)(v, q, f) - target;
    const Gradient g = gradient(v, q, f);
    std::vector<double> p = parameters();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * err * g.params[k];
    set_parameters(p);
    return err * err;
}

double critic_eval(const Critic& critic, double v, double q, double f) { return critic(v, q, f); }

}  // namespace tasrl
