#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "echolab/nn/layers.hpp"

namespace echolab::nn {

// Bias-corrected Adam over a flat parameter list. Moments live inside each
// Param so checkpoints can resume training exactly.
template <typename T>
class Adam {
 public:
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(const std::vector<Param<T>*>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (Param<T>* p : params) {
      if (p->m.numel() == 0) {
        p->m = Tensor<T>(p->value.shape());
        p->v = Tensor<T>(p->value.shape());
      }
      for (std::size_t i = 0; i < p->value.numel(); ++i) {
        const double g = static_cast<double>(p->grad[i]);
        if (std::isnan(g))
          throw NumericError("adam: NaN gradient in parameter " + p->name);
        const double m = beta1 * static_cast<double>(p->m[i]) + (1.0 - beta1) * g;
        const double v = beta2 * static_cast<double>(p->v[i]) + (1.0 - beta2) * g * g;
        p->m[i] = static_cast<T>(m);
        p->v[i] = static_cast<T>(v);
        p->value[i] -= static_cast<T>(lr * (m / bc1) / (std::sqrt(v / bc2) + eps));
      }
    }
  }

  long step_count() const { return t_; }
  void set_step_count(long t) { t_ = t; }

 private:
  long t_ = 0;
};

template <typename T>
void zero_grads(const std::vector<Param<T>*>& params) {
  for (Param<T>* p : params) p->zero_grad();
}

// Halve-on-plateau learning-rate schedule with early stopping: the rate is
// halved after `patience` epochs without a validation improvement, training
// stops after `early_stop` such epochs in a row.
class PlateauSchedule {
 public:
  PlateauSchedule() = default;
  PlateauSchedule(double initial_lr, int patience, int early_stop, double factor = 0.5)
      : lr_(initial_lr), patience_(patience), early_stop_(early_stop), factor_(factor) {}

  // Feed one validation loss per epoch; returns true when training should stop.
  bool observe(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      bad_ = 0;
      stagnant_ = 0;
      return false;
    }
    ++bad_;
    ++stagnant_;
    if (bad_ >= patience_) {
      lr_ *= factor_;
      bad_ = 0;
    }
    return stagnant_ >= early_stop_;
  }

  double lr() const { return lr_; }
  double best() const { return best_; }
  int stagnant_epochs() const { return stagnant_; }

  // Checkpoint plumbing.
  void restore(double lr, double best, int bad, int stagnant) {
    lr_ = lr;
    best_ = best;
    bad_ = bad;
    stagnant_ = stagnant;
  }
  int bad_epochs() const { return bad_; }

 private:
  double lr_ = 1e-3;
  int patience_ = 2;
  int early_stop_ = 10;
  double factor_ = 0.5;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
  int stagnant_ = 0;
};

}  // namespace echolab::nn
