#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rootflow/eval/metrics.hpp"
#include "rootflow/flow/tmi.hpp"
#include "rootflow/num/matrix.hpp"
#include "rootflow/num/rng.hpp"
#include "rootflow/scm/dataset.hpp"

namespace rootflow::perm {

using num::Mode;

struct PermConfig {
  double t = 1e-4;
  double lambda = 0.5;
  std::size_t sinkhorn_iters = 20;
  // Iterations for the final noise-free soft permutation that gets rounded.
  std::size_t final_sinkhorn_iters = 50;
  bool gumbel = true;
  // Epochs, batch size, learning rate and flow architecture.
  flow::TrainConfig train{};
  double jacobian_step = 1e-4;
  // Central-difference step on the logits, as a fraction of t.
  double logit_step_fraction = 1e-2;
  // Scale of the random logit initialization.
  double logit_init_scale = 1e-2;

  void validate() const;
};

// Learned soft permutation P = sinkhorn(logits / t); the TMI flow reads the
// permuted sample x_perm = P x, so row a of P selects the variable placed at
// position a.
struct PermLearner {
  num::Matrix logits;
  double t = 1e-4;
  flow::TmiFlow tmi;
  // Mean training loss per epoch.
  std::vector<double> epoch_losses;
};

struct PermLossTerms {
  double nll = 0.0;
  double penalty = 0.0;  // mean entrywise l1 norm of the TMI Jacobian
  double total = 0.0;    // nll + lambda * penalty
};

// Loss of `tmi` on batch rows x permuted by `p` (x_perm = P x).
PermLossTerms perm_loss_terms(const flow::TmiFlow& tmi, const num::Matrix& p,
                              const num::Matrix& batch, double lambda, Mode mode,
                              num::RngStream* rng, double jacobian_step = 1e-4);

// Loss at the learner's current (noise-free) soft permutation.
double perm_loss(const PermLearner& learner, const num::Matrix& batch, double lambda, Mode mode,
                 num::RngStream* rng, std::size_t sinkhorn_iters = 20,
                 double jacobian_step = 1e-4);

// Gradients of the batch loss at a fixed P: w.r.t. TMI parameters (accumulated
// into `grads`) and w.r.t. P itself. Penalty gradients are exact reverse-mode
// derivatives of the central-difference Jacobian.
struct PermLossGrad {
  PermLossTerms terms;
  num::Matrix d_p;
};
PermLossGrad perm_loss_and_grad(const flow::TmiFlow& tmi, const num::Matrix& p,
                                const num::Matrix& batch, double lambda, num::RngStream* rng,
                                double jacobian_step, flow::TmiGrads& grads);

// dLoss/dlogits given dLoss/dP, by central differences of the Sinkhorn map
// over each logit with step `h`.
num::Matrix logits_grad(const num::Matrix& noisy_logits, double t, std::size_t iters,
                        const num::Matrix& d_p, double h);

// Joint Adam updates of logits and flow parameters. Throws TrainingError on
// divergence, ArgumentError for unstandardized data.
PermLearner train_perm(const scm::Dataset& ds, const PermConfig& cfg, num::RngStream& rng);

struct PermResult {
  eval::CausalOrder order;
  num::Matrix soft_permutation;
  std::vector<double> epoch_losses;
};

// train_perm, then Hungarian rounding of the final noise-free soft permutation.
PermResult discover_order_perm(const scm::Dataset& ds, const PermConfig& cfg,
                               num::RngStream& rng);

}  // namespace rootflow::perm
