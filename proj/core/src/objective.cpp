#include <algorithm>
#include <cmath>

#include "clref/clmethods.hpp"
#include "clref/error.hpp"

namespace clref::cl {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::finetune: return "finetune";
    case Method::er: return "er";
    case Method::derpp: return "derpp";
    case Method::oewc: return "oewc";
    case Method::cpr: return "cpr";
    case Method::joint: return "joint";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  for (Method m : {Method::finetune, Method::er, Method::derpp, Method::oewc, Method::cpr, Method::joint})
    if (to_string(m) == s) return m;
  throw ContractError("unknown method '" + std::string(s) + "'");
}

std::string_view to_string(KlOrder k) { return k == KlOrder::model_first ? "model_first" : "target_first"; }

KlOrder kl_order_from_string(std::string_view s) {
  if (s == "model_first") return KlOrder::model_first;
  if (s == "target_first") return KlOrder::target_first;
  throw ContractError("unknown kl_argument_order '" + std::string(s) + "'");
}

ObjectiveConfig ObjectiveConfig::preset(Method method, double alpha, double beta) {
  ObjectiveConfig c;
  c.method = method;
  c.alpha = alpha;
  c.beta = beta;
  c.kl_order = method == Method::cpr ? KlOrder::model_first : KlOrder::target_first;
  return c;
}

bool ObjectiveConfig::uses_weight_penalty() const {
  return method == Method::oewc || (method == Method::cpr && beta > 0.0);
}

void ObjectiveConfig::validate() const {
  require(std::isfinite(alpha) && alpha >= 0.0, "ObjectiveConfig: alpha must be finite and >= 0");
  require(std::isfinite(beta) && beta >= 0.0, "ObjectiveConfig: beta must be finite and >= 0");
  if (derpp_ce_weight)
    require(std::isfinite(*derpp_ce_weight) && *derpp_ce_weight >= 0.0,
            "ObjectiveConfig: derpp_ce_weight must be finite and >= 0");
  if (uses_replay()) require(replay_batch_size >= 1, "ObjectiveConfig: replay_batch_size must be positive");
  if (method == Method::er)
    require(kl_order == KlOrder::target_first,
            "ObjectiveConfig: ER needs target_first order (D(one-hot, g) is the replay cross-entropy)");
  require(theta_old.has_value() == fisher.has_value(),
          "ObjectiveConfig: theta_old and fisher must be set together");
  if (theta_old) {
    require(theta_old->size() == fisher->size(), "ObjectiveConfig: theta_old and fisher differ in length");
    fisher->validate();
  }
}

ReplayDraw draw_replay(const ReplayBuffer& buffer, const ObjectiveConfig& config, std::mt19937_64& rng) {
  ReplayDraw draw;
  if (!config.uses_replay() || buffer.empty()) return draw;
  draw.primary = sample_replay(buffer, config.replay_batch_size, rng);
  if (config.method == Method::derpp) draw.secondary = sample_replay(buffer, config.replay_batch_size, rng);
  return draw;
}

namespace {

// Runs a forward pass on `inputs`, lets `term` fill the logit gradient and
// return the term's value, then backpropagates into `grad` (if given).
template <typename Term>
double logit_term(const nn::NetworkSpec& spec, const ParamVector& params, const Matrix& inputs,
                  ParamVector* grad, Term&& term) {
  const nn::ForwardTrace trace = nn::forward_trace(spec, params, inputs);
  Matrix dlogits(trace.logits().rows, trace.logits().cols);
  const double value = term(trace.logits(), grad ? &dlogits : nullptr);
  if (grad) nn::backward(spec, params, trace, dlogits, *grad);
  return value;
}

void scale(Matrix* m, double s) {
  if (m)
    for (double& v : m->data) v *= s;
}

// alpha * mean ||u - z||^2
double logit_match(const Matrix& u, const Matrix& z, double alpha, Matrix* d) {
  require(u.rows == z.rows && u.cols == z.cols, "DER: stored logits have the wrong shape");
  const double inv_n = 1.0 / static_cast<double>(u.rows);
  double s = 0.0;
  for (std::size_t k = 0; k < u.data.size(); ++k) {
    const double diff = u.data[k] - z.data[k];
    s += diff * diff;
    if (d) d->data[k] = 2.0 * alpha * inv_n * diff;
  }
  return alpha * s * inv_n;
}

// CPR output term, alpha * mean over rows of D(g, v) - ln C = -alpha * mean H(g)
// (model_first), or alpha * mean D(v, g) (target_first); v is uniform.
double entropy_term(const Matrix& u, double alpha, KlOrder order, Matrix* d) {
  const double inv_n = 1.0 / static_cast<double>(u.rows);
  const double c = static_cast<double>(u.cols);
  double total = 0.0;
  std::vector<double> logp(u.cols);
  for (std::size_t n = 0; n < u.rows; ++n) {
    const auto row = u.row(n);
    double m = row[0];
    for (double v : row) m = std::max(m, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    const double log_z = m + std::log(z);
    for (std::size_t j = 0; j < u.cols; ++j) logp[j] = row[j] - log_z;

    if (order == KlOrder::model_first) {
      double h = 0.0;
      for (double lp : logp) h -= std::exp(lp) * lp;
      total -= h;
      if (d)
        for (std::size_t j = 0; j < u.cols; ++j) (*d)(n, j) = alpha * inv_n * std::exp(logp[j]) * (logp[j] + h);
    } else {
      double kl = -std::log(c);
      for (double lp : logp) kl -= lp / c;
      total += kl;
      if (d)
        for (std::size_t j = 0; j < u.cols; ++j) (*d)(n, j) = alpha * inv_n * (std::exp(logp[j]) - 1.0 / c);
    }
  }
  return alpha * total * inv_n;
}

ClLossGrad evaluate(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                    const ReplayDraw& replay, const ObjectiveConfig& config, bool want_grad) {
  config.validate();
  ClLossGrad out;
  if (want_grad) {
    nn::LossGrad base = nn::loss_and_grad(spec, params, batch);
    out.parts.ce = base.loss;
    out.grad = std::move(base.grad);
  } else {
    batch.validate(spec);
    out.parts.ce = nn::softmax_cross_entropy(nn::forward(spec, params, batch.inputs), batch.labels, nullptr);
  }
  ParamVector* grad = want_grad ? &out.grad : nullptr;
  const double alpha = config.alpha;

  switch (config.method) {
    case Method::finetune:
    case Method::joint:
    case Method::oewc:
      break;
    case Method::er:
      if (replay.primary && alpha > 0.0) {
        const ReplaySample& r = *replay.primary;
        out.parts.output_space = logit_term(spec, params, r.batch.inputs, grad, [&](const Matrix& u, Matrix* d) {
          const double ce = nn::softmax_cross_entropy(u, r.batch.labels, d);
          scale(d, alpha);
          return alpha * ce;
        });
      }
      break;
    case Method::derpp:
      if (replay.primary && alpha > 0.0) {
        const ReplaySample& r = *replay.primary;
        out.parts.output_space = logit_term(spec, params, r.batch.inputs, grad, [&](const Matrix& u, Matrix* d) {
          return logit_match(u, r.stored_logits, alpha, d);
        });
      }
      if (replay.secondary && config.second_replay_weight() > 0.0) {
        const ReplaySample& r = *replay.secondary;
        const double w = config.second_replay_weight();
        out.parts.replay_ce = logit_term(spec, params, r.batch.inputs, grad, [&](const Matrix& u, Matrix* d) {
          const double ce = nn::softmax_cross_entropy(u, r.batch.labels, d);
          scale(d, w);
          return w * ce;
        });
      }
      break;
    case Method::cpr:
      if (alpha > 0.0) {
        out.parts.output_space = logit_term(spec, params, batch.inputs, grad, [&](const Matrix& u, Matrix* d) {
          return entropy_term(u, alpha, config.kl_order, d);
        });
      }
      break;
  }

  if (config.uses_weight_penalty() && config.beta > 0.0 && config.theta_old) {
    const ParamVector& ref = *config.theta_old;
    const std::vector<double>& f = config.fisher->values;
    require(ref.size() == params.size(), "weight penalty: theta_old has the wrong length");
    double s = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double diff = params[i] - ref[i];
      s += f[i] * diff * diff;
      if (grad) (*grad)[i] += config.beta * f[i] * diff;
    }
    out.parts.weight_space = 0.5 * config.beta * s;
  }

  out.loss = out.parts.total();
  if (!std::isfinite(out.loss)) throw NumericError("non-finite CL objective", spec.num_layers() - 1);
  return out;
}

}  // namespace

ClLossGrad cl_loss_and_grad(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                            const ReplayDraw& replay, const ObjectiveConfig& config) {
  return evaluate(spec, params, batch, replay, config, true);
}

ClLossGrad cl_loss_and_grad(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
                            const ReplayBuffer& buffer, const ObjectiveConfig& config, std::mt19937_64& rng) {
  return evaluate(spec, params, batch, draw_replay(buffer, config, rng), config, true);
}

double cl_loss(const nn::NetworkSpec& spec, const ParamVector& params, const nn::Batch& batch,
               const ReplayDraw& replay, const ObjectiveConfig& config) {
  return evaluate(spec, params, batch, replay, config, false).loss;
}

Consolidation consolidate_oewc(const std::optional<ParamVector>& theta_old_prev,
                               const std::optional<fisher::DiagFisher>& fisher_prev, const ParamVector& params,
                               const fisher::DiagFisher& fisher_task, double decay) {
  require(decay >= 0.0 && decay <= 1.0, "consolidate_oewc: decay must be in [0, 1]");
  require(fisher_task.size() == params.size(), "consolidate_oewc: Fisher and params differ in length");
  if (theta_old_prev) require(theta_old_prev->size() == params.size(), "consolidate_oewc: theta_old has the wrong length");
  Consolidation out{params, fisher_task};
  if (fisher_prev) {
    require(fisher_prev->size() == params.size(), "consolidate_oewc: previous Fisher has the wrong length");
    for (std::size_t i = 0; i < params.size(); ++i)
      out.fisher.values[i] = decay * fisher_prev->values[i] + fisher_task.values[i];
  }
  return out;
}

ParamVector natural_gradient_step(const ParamVector& params, const ParamVector& grad,
                                  const fisher::DiagFisher& fisher, double alpha, double beta, double lr) {
  require(params.size() == grad.size() && grad.size() == fisher.size(),
          "natural_gradient_step: length mismatch");
  ParamVector out = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double denom = alpha * fisher.values[i] + beta;
    if (!(denom > 0.0))
      throw DegenerateError("natural_gradient_step: alpha*F + beta is not positive at parameter " +
                            std::to_string(i));
    out[i] -= lr * grad[i] / denom;
  }
  return out;
}

}  // namespace clref::cl
