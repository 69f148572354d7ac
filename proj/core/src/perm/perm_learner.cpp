#include "rootflow/perm/perm_learner.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "rootflow/error.hpp"
#include "rootflow/num/adam.hpp"
#include "rootflow/perm/hungarian.hpp"
#include "rootflow/perm/sinkhorn.hpp"

namespace rootflow::perm {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

num::Vector permute(const num::Matrix& p, std::span<const double> x) { return num::matvec(p, x); }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double l1_jacobian(const flow::TmiFlow& tmi, std::span<const double> x, double h) {
  const auto jac = flow::tmi_jacobian(tmi, x, h);
  double s = 0.0;
  for (double v : jac.data()) s += std::abs(v);
  return s;
}

}  // namespace

void PermConfig::validate() const {
  if (!(t > 0.0)) throw ArgumentError("temperature t must be > 0");
  if (!(lambda >= 0.0)) throw ArgumentError("lambda must be >= 0");
  if (sinkhorn_iters < 1 || final_sinkhorn_iters < 1)
    throw ArgumentError("sinkhorn_iters must be >= 1");
  if (!(jacobian_step > 0.0) || !(logit_step_fraction > 0.0))
    throw ArgumentError("finite-difference steps must be > 0");
  train.validate();
}

PermLossTerms perm_loss_terms(const flow::TmiFlow& tmi, const num::Matrix& p,
                              const num::Matrix& batch, double lambda, Mode mode,
                              num::RngStream* rng, double jacobian_step) {
  if (batch.rows() == 0) throw ArgumentError("perm_loss on an empty batch");
  if (batch.cols() != tmi.dim() || p.rows() != tmi.dim() || p.cols() != tmi.dim())
    throw DimensionError("perm_loss: dimension mismatch");
  PermLossTerms terms;
  for (std::size_t s = 0; s < batch.rows(); ++s) {
    const auto xp = permute(p, batch.row(s));
    const auto ev = flow::tmi_forward(tmi, xp, mode, rng);
    double nll = -ev.logdet;
    for (double u : ev.u) nll += 0.5 * u * u + kHalfLog2Pi;
    terms.nll += nll;
    if (lambda != 0.0) terms.penalty += l1_jacobian(tmi, xp, jacobian_step);
  }
  const double n = static_cast<double>(batch.rows());
  terms.nll /= n;
  terms.penalty /= n;
  terms.total = terms.nll + lambda * terms.penalty;
  if (!std::isfinite(terms.total)) throw NumericError("non-finite permutation loss");
  return terms;
}

double perm_loss(const PermLearner& learner, const num::Matrix& batch, double lambda, Mode mode,
                 num::RngStream* rng, std::size_t sinkhorn_iters, double jacobian_step) {
  const auto p = sinkhorn(learner.logits, learner.t, sinkhorn_iters);
  return perm_loss_terms(learner.tmi, p, batch, lambda, mode, rng, jacobian_step).total;
}

PermLossGrad perm_loss_and_grad(const flow::TmiFlow& tmi, const num::Matrix& p,
                                const num::Matrix& batch, double lambda, num::RngStream* rng,
                                double h, flow::TmiGrads& grads) {
  const std::size_t d = tmi.dim();
  if (batch.rows() == 0) throw ArgumentError("perm_loss on an empty batch");
  if (batch.cols() != d || p.rows() != d || p.cols() != d)
    throw DimensionError("perm_loss: dimension mismatch");
  const double inv_n = 1.0 / static_cast<double>(batch.rows());
  PermLossGrad out;
  out.d_p = num::Matrix(d, d);
  num::Vector probe(d);
  for (std::size_t s = 0; s < batch.rows(); ++s) {
    const auto x = batch.row(s);
    const auto xp = permute(p, x);

    // Likelihood term, train mode.
    const auto ev = flow::tmi_forward(tmi, xp, Mode::train, rng);
    double nll = -ev.logdet;
    num::Vector gu(d);
    for (std::size_t j = 0; j < d; ++j) {
      nll += 0.5 * ev.u[j] * ev.u[j] + kHalfLog2Pi;
      gu[j] = ev.u[j] * inv_n;
    }
    out.terms.nll += nll;
    auto g_xp = flow::tmi_backward(tmi, ev, gu, -inv_n, grads);

    // Sparsity term: sum_{j >= k} |u_j(xp + h e_k) - u_j(xp - h e_k)| / 2h,
    // eval mode.
    if (lambda != 0.0) {
      double pen = 0.0;
      probe.assign(xp.begin(), xp.end());
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t j = k; j < d; ++j) {
          const auto& f = tmi.coord_flows[j];
          const std::span<const double> pr(probe);
          probe[k] = xp[k] + h;
          const auto up = flow::flow_transform(f, pr[j], pr.subspan(0, j), Mode::eval);
          probe[k] = xp[k] - h;
          const auto down = flow::flow_transform(f, pr[j], pr.subspan(0, j), Mode::eval);
          probe[k] = xp[k];
          const double jac = (up.u - down.u) / (2.0 * h);
          pen += std::abs(jac);
          const double g = lambda * inv_n * sign(jac) / (2.0 * h);
          if (g == 0.0) continue;
          const auto gu_up = flow::flow_backward(f, up, g, 0.0, grads[j]);
          const auto gu_down = flow::flow_backward(f, down, -g, 0.0, grads[j]);
          // Both probes share every coordinate with xp; the +-h offset is a
          // constant, so input gradients add directly.
          g_xp[j] += gu_up.x + gu_down.x;
          for (std::size_t m = 0; m < j; ++m) g_xp[m] += gu_up.cond[m] + gu_down.cond[m];
        }
      }
      out.terms.penalty += pen;
    }

    // xp_a = sum_b P_ab x_b
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) out.d_p(a, b) += g_xp[a] * x[b];
  }
  out.terms.nll *= inv_n;
  out.terms.penalty *= inv_n;
  out.terms.total = out.terms.nll + lambda * out.terms.penalty;
  return out;
}

num::Matrix logits_grad(const num::Matrix& noisy_logits, double t, std::size_t iters,
                        const num::Matrix& d_p, double h) {
  const std::size_t d = noisy_logits.rows();
  num::Matrix grad(d, d);
  num::Matrix probe = noisy_logits;
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t e = 0; e < d; ++e) {
      const double orig = probe(c, e);
      probe(c, e) = orig + h;
      const auto up = sinkhorn(probe, t, iters);
      probe(c, e) = orig - h;
      const auto down = sinkhorn(probe, t, iters);
      probe(c, e) = orig;
      double acc = 0.0;
      for (std::size_t k = 0; k < d * d; ++k) acc += d_p.data()[k] * (up.data()[k] - down.data()[k]);
      grad(c, e) = acc / (2.0 * h);
    }
  return grad;
}

PermLearner train_perm(const scm::Dataset& ds, const PermConfig& cfg, num::RngStream& rng) {
  cfg.validate();
  ds.validate();
  if (!ds.standardized) throw ArgumentError("train_perm expects a standardized dataset");
  const std::size_t d = ds.d();
  auto init_rng = rng.derive(0);
  auto shuffle_rng = rng.derive(1);
  auto gumbel_rng = rng.derive(2);
  auto dropout_rng = rng.derive(3);

  PermLearner learner;
  learner.t = cfg.t;
  learner.logits = num::Matrix(d, d);
  for (double& v : learner.logits.data()) v = cfg.logit_init_scale * init_rng.normal();
  auto tmi_rng = init_rng.derive(1);
  learner.tmi = flow::make_tmi(d, cfg.train, tmi_rng);

  const double logit_h = cfg.logit_step_fraction * cfg.t;
  num::AdamState flow_adam, logit_adam;
  auto grads = flow::zero_grads(learner.tmi);
  std::vector<std::size_t> order(ds.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.train.batch_size, ++step) {
      const std::size_t len = std::min(cfg.train.batch_size, order.size() - start);
      num::Matrix batch(len, d);
      for (std::size_t r = 0; r < len; ++r)
        for (std::size_t c = 0; c < d; ++c) batch(r, c) = ds.values(order[start + r], c);

      const num::Matrix noisy = cfg.gumbel ? gumbel_perturb(learner.logits, gumbel_rng) : learner.logits;
      const num::Matrix p = sinkhorn(noisy, cfg.t, cfg.sinkhorn_iters);
      for (auto& g : grads)
        for (auto& layer : g) layer.set_zero();
      const auto lg = perm_loss_and_grad(learner.tmi, p, batch, cfg.lambda, &dropout_rng,
                                         cfg.jacobian_step, grads);
      if (!std::isfinite(lg.terms.total))
        throw TrainingError(step, "permutation loss diverged at epoch " + std::to_string(epoch) +
                                      ", step " + std::to_string(step));
      const auto g_logits = logits_grad(noisy, cfg.t, cfg.sinkhorn_iters, lg.d_p, logit_h);
      try {
        num::adam_step(flow::parameter_blocks(learner.tmi), flow::parameter_blocks(grads), flow_adam,
                       cfg.train.lr);
        const std::span<double> lp = learner.logits.data();
        const std::span<const double> gp = g_logits.data();
        num::adam_step(std::span<const std::span<double>>(&lp, 1),
                       std::span<const std::span<const double>>(&gp, 1), logit_adam, cfg.train.lr);
      } catch (const NumericError& e) {
        throw TrainingError(step, "epoch " + std::to_string(epoch) + ", step " +
                                      std::to_string(step) + ": " + e.what());
      }
      epoch_loss += lg.terms.total;
      ++batches;
    }
    learner.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
  }
  return learner;
}

PermResult discover_order_perm(const scm::Dataset& ds, const PermConfig& cfg,
                               num::RngStream& rng) {
  auto learner = train_perm(ds, cfg, rng);
  PermResult result;
  result.soft_permutation = sinkhorn(learner.logits, learner.t, cfg.final_sinkhorn_iters);
  const auto assignment = hungarian(result.soft_permutation);
  result.order = eval::CausalOrder(assignment.sigma);
  result.epoch_losses = std::move(learner.epoch_losses);
  return result;
}

}  // namespace rootflow::perm
