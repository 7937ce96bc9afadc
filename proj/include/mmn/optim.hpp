#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mmn/errors.hpp"
#include "mmn/kernels.hpp"
#include "mmn/network.hpp"

namespace mmn {

template <typename T>
struct AdamConfig {
    T lr = T(1e-3);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

// Adam with bias correction. Moment buffers mirror the flattened trainable
// tensors of the network (or of any tensor list handed to step()).
template <typename T>
class AdamOptimizer {
public:
    AdamOptimizer(std::size_t param_count, AdamConfig<T> cfg = {})
        : cfg_(cfg), m_(param_count, T(0)), v_(param_count, T(0)) {}

    T learning_rate() const { return cfg_.lr; }
    void set_learning_rate(T lr) { cfg_.lr = lr; }
    long step_count() const { return step_; }

    void step(std::vector<typename Network<T>::TensorRef> params,
              std::vector<typename Network<T>::TensorRef> grads) {
        if (params.size() != grads.size())
            throw ConfigError("adam: parameter/gradient tensor count mismatch");
        ++step_;
        std::size_t offset = 0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (params[i].size != grads[i].size)
                throw ConfigError("adam: parameter/gradient shape mismatch");
            if (offset + params[i].size > m_.size())
                throw ConfigError("adam: state smaller than parameter set");
            kernels::adam_update(params[i].data, grads[i].data, m_.data() + offset,
                                 v_.data() + offset, params[i].size, cfg_.lr, cfg_.beta1,
                                 cfg_.beta2, cfg_.eps, step_);
            offset += params[i].size;
        }
    }

    // Flat-array convenience for optimizing things that are not networks
    // (candidate inputs in gradient-descent inference).
    void step_flat(T* params, const T* grads, std::size_t n) {
        if (n > m_.size()) throw ConfigError("adam: state smaller than parameter set");
        ++step_;
        kernels::adam_update(params, grads, m_.data(), v_.data(), n, cfg_.lr, cfg_.beta1,
                             cfg_.beta2, cfg_.eps, step_);
    }

private:
    AdamConfig<T> cfg_;
    std::vector<T> m_, v_;
    long step_ = 0;
};

// Halves the learning rate after `patience` consecutive epochs without
// validation improvement, never below min_lr.
class PlateauScheduler {
public:
    PlateauScheduler(double initial_lr, int patience = 10, double factor = 0.5,
                     double min_lr = 1e-6, double threshold = 1e-6)
        : lr_(initial_lr), patience_(patience), factor_(factor), min_lr_(min_lr),
          threshold_(threshold) {}

    // Call once per epoch with that epoch's validation loss; returns the
    // learning rate to use next.
    double step(double val_loss) {
        if (!std::isfinite(val_loss))
            throw TrainingError("scheduler received non-finite validation loss");
        if (val_loss < best_ - threshold_) {
            best_ = val_loss;
            bad_epochs_ = 0;
        } else {
            ++bad_epochs_;
            if (bad_epochs_ >= patience_) {
                lr_ = std::max(lr_ * factor_, min_lr_);
                bad_epochs_ = 0;
            }
        }
        return lr_;
    }

    double lr() const { return lr_; }
    double best() const { return best_; }

private:
    double lr_;
    int patience_;
    double factor_;
    double min_lr_;
    double threshold_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
};

}  // namespace mmn
