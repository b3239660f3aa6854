#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cilforge/errors.hpp"
#include "cilforge/model.hpp"
#include "cilforge/rng.hpp"

namespace cilforge {

enum class ReplayMode { finetune, kd, kd_epe, ls, sc_agent };

enum class Calibration { uniform, random, teacher, learnable, frozen };

// Soft-label generator settings. learnable_raw holds the pre-sigmoid
// parameters shared across samples (learnable and frozen modes); its length
// tracks the old-class count.
struct AgentConfig {
  double alpha = 0.2;
  Calibration calibration = Calibration::frozen;
  std::vector<double> learnable_raw;
  double ls_epsilon = 0.1;
  double uniform_u = 0.5;
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {  // log(1 + e^x), stable in both tails
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline int argmax_index(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace detail

inline std::vector<double> onehot(int classes, int true_class) {
  if (true_class < 0 || true_class >= classes)
    throw ConfigError("onehot: class index out of range");
  std::vector<double> y(classes, 0.0);
  y[true_class] = 1.0;
  return y;
}

// Calibration vector p in [0,1]^dims. Gaussian draws (random mode) consume
// the rng; the other modes are deterministic functions of their inputs.
inline std::vector<double> calibration_input(const AgentConfig& cfg, int dims,
                                             const double* teacher_logits,
                                             Rng& rng) {
  std::vector<double> p(dims);
  switch (cfg.calibration) {
    case Calibration::uniform:
      if (cfg.uniform_u < 0.0 || cfg.uniform_u > 1.0)
        throw ConfigError("replay.uniform_u: must lie in [0, 1]");
      std::fill(p.begin(), p.end(), cfg.uniform_u);
      break;
    case Calibration::random:
      for (double& v : p) v = detail::sigmoid(rng.gaussian());
      break;
    case Calibration::teacher:
      if (teacher_logits == nullptr)
        throw ConfigError("calibration=teacher requires teacher logits");
      for (int i = 0; i < dims; ++i) p[i] = detail::sigmoid(teacher_logits[i]);
      break;
    case Calibration::learnable:
    case Calibration::frozen:
      if (static_cast<int>(cfg.learnable_raw.size()) != dims)
        throw ConfigError("calibration raw vector length " +
                          std::to_string(cfg.learnable_raw.size()) +
                          " does not match old-class count " + std::to_string(dims));
      for (int i = 0; i < dims; ++i) p[i] = detail::sigmoid(cfg.learnable_raw[i]);
      break;
  }
  return p;
}

// Initial pre-sigmoid calibration parameters: 0.01 * uniform[0,1) per entry.
inline std::vector<double> init_calibration_raw(int dims, Rng& rng) {
  std::vector<double> raw(dims);
  for (double& v : raw) v = 0.01 * rng.uniform();
  return raw;
}

// Power-normalized soft label chi = (y + p)^alpha / sum (y + p)^alpha.
inline std::vector<double> teacher_agent_label(std::span<const double> y_onehot,
                                               std::span<const double> p,
                                               double alpha) {
  if (y_onehot.size() != p.size())
    throw ConfigError("teacher_agent_label: dimension mismatch");
  if (!(alpha > 0.0) || alpha > 1.0)
    throw ConfigError("replay.alpha: must lie in (0, 1]");
  int ones = 0;
  for (double v : y_onehot) {
    if (v == 1.0)
      ++ones;
    else if (v != 0.0)
      throw ConfigError("teacher_agent_label: label vector is not one-hot");
  }
  if (ones != 1) throw ConfigError("teacher_agent_label: label vector is not one-hot");
  std::vector<double> chi(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || p[i] > 1.0)
      throw ConfigError("teacher_agent_label: calibration entry outside [0, 1]");
    chi[i] = std::pow(y_onehot[i] + p[i], alpha);
    sum += chi[i];
  }
  for (double& v : chi) v /= sum;
  return chi;
}

// Classic label smoothing target (1-eps) * onehot + eps / C.
inline std::vector<double> ls_label(int classes, int true_class, double epsilon) {
  if (epsilon < 0.0 || epsilon >= 1.0)
    throw ConfigError("replay.ls_epsilon: must lie in [0, 1)");
  std::vector<double> chi(classes, epsilon / classes);
  chi.at(true_class) += 1.0 - epsilon;
  return chi;
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Softmax cross-entropy over the given logits.
inline LossGrad ce_loss(std::span<const double> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size()))
    throw ConfigError("ce_loss: label out of range");
  double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  LossGrad out;
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.grad[i] = std::exp(logits[i] - mx);
    z += out.grad[i];
  }
  for (double& g : out.grad) g /= z;
  out.loss = std::log(z) + mx - logits[label];
  out.grad[label] -= 1.0;
  return out;
}

// Per-node sigmoid cross-entropy against a soft label:
//   loss = -sum_c chi_c log sigmoid(o_c),  dloss/do_c = chi_c (sigmoid(o_c) - 1).
inline LossGrad sc_loss(std::span<const double> logits,
                        std::span<const double> chi) {
  if (logits.size() != chi.size())
    throw ConfigError("sc_loss: dimension mismatch");
  LossGrad out;
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.loss += chi[i] * detail::softplus(-logits[i]);
    out.grad[i] = chi[i] * (detail::sigmoid(logits[i]) - 1.0);
  }
  return out;
}

// Sigmoid-on-sigmoid distillation: teacher probabilities sigmoid(t_c) weight
// the student's per-node log-sigmoid. Teacher logits are constants.
inline LossGrad kd_loss(std::span<const double> student_logits,
                        std::span<const double> teacher_logits) {
  if (student_logits.size() != teacher_logits.size())
    throw ConfigError("kd_loss: dimension mismatch");
  LossGrad out;
  out.grad.resize(student_logits.size());
  for (std::size_t i = 0; i < student_logits.size(); ++i) {
    double q = detail::sigmoid(teacher_logits[i]);
    out.loss += q * detail::softplus(-student_logits[i]);
    out.grad[i] = q * (detail::sigmoid(student_logits[i]) - 1.0);
  }
  return out;
}

inline bool epe_admits(std::span<const double> teacher_logits, int label) {
  return detail::argmax_index(teacher_logits) == label;
}

// Inclusion mask: true where the teacher classifies the exemplar correctly.
inline std::vector<char> epe_filter(
    const std::vector<std::vector<double>>& teacher_logits,
    const std::vector<int>& labels) {
  if (teacher_logits.size() != labels.size())
    throw ConfigError("epe_filter: batch size mismatch");
  std::vector<char> mask(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    mask[i] = epe_admits(teacher_logits[i], labels[i]) ? 1 : 0;
  return mask;
}

struct ReplayResult {
  double loss = 0.0;
  Gradients grads;
  std::vector<double> raw_grad;  // d loss / d learnable_raw; empty otherwise
};

// Combined replay objective over one exemplar batch:
//   lambda * CE(all-class logits) + (1 - lambda) * X(old-class logits)
// with X the mode's knowledge term. Batch mean with a fixed denominator, so
// EPE-masked samples reduce the loss instead of reweighting it. finetune
// contributes nothing.
inline ReplayResult replay_loss(ReplayMode mode, double lambda,
                                std::span<const Clip> exemplars,
                                const ModelState& model, int old_classes,
                                int segments, const AgentConfig& agent,
                                const ModelState* teacher, Rng& rng) {
  ReplayResult out;
  out.grads = make_gradients(model);
  if (mode == ReplayMode::finetune) return out;
  if (exemplars.empty()) throw ConfigError("replay: exemplar batch is empty");
  if (lambda < 0.0 || lambda > 1.0)
    throw ConfigError("train.lambda: must lie in [0, 1]");
  if (old_classes < 1 || old_classes > model.classes())
    throw ConfigError("replay: old-class count out of range");
  bool needs_teacher = mode == ReplayMode::kd || mode == ReplayMode::kd_epe ||
                       (mode == ReplayMode::sc_agent &&
                        agent.calibration == Calibration::teacher);
  if (needs_teacher && teacher == nullptr)
    throw ConfigError("replay: mode requires a teacher snapshot");
  if (needs_teacher && teacher->classes() < old_classes)
    throw ConfigError("replay: teacher head narrower than old-class count");
  bool learnable = mode == ReplayMode::sc_agent &&
                   agent.calibration == Calibration::learnable;
  if (learnable) out.raw_grad.assign(old_classes, 0.0);

  double inv_b = 1.0 / static_cast<double>(exemplars.size());
  std::vector<double> dlogits(model.classes());
  for (const Clip& clip : exemplars) {
    if (clip.label < 0 || clip.label >= old_classes)
      throw ConfigError("replay: exemplar label outside old-class range");
    std::vector<double> logits = clip_logits(model, clip, segments);
    std::span<const double> old_logits(logits.data(),
                                       static_cast<std::size_t>(old_classes));

    LossGrad ce = ce_loss(logits, clip.label);
    out.loss += lambda * inv_b * ce.loss;
    for (int c = 0; c < model.classes(); ++c)
      dlogits[c] = lambda * inv_b * ce.grad[c];

    std::vector<double> teacher_old;
    if (needs_teacher) {
      std::vector<double> t = clip_logits(*teacher, clip, segments);
      teacher_old.assign(t.begin(), t.begin() + old_classes);
    }

    LossGrad know;
    bool include = true;
    switch (mode) {
      case ReplayMode::kd_epe:
        include = epe_admits(teacher_old, clip.label);
        [[fallthrough]];
      case ReplayMode::kd:
        if (include) know = kd_loss(old_logits, teacher_old);
        break;
      case ReplayMode::ls:
        know = sc_loss(old_logits,
                       ls_label(old_classes, clip.label, agent.ls_epsilon));
        break;
      case ReplayMode::sc_agent: {
        std::vector<double> p = calibration_input(
            agent, old_classes, needs_teacher ? teacher_old.data() : nullptr, rng);
        std::vector<double> y = onehot(old_classes, clip.label);
        std::vector<double> chi = teacher_agent_label(y, p, agent.alpha);
        know = sc_loss(old_logits, chi);
        if (learnable) {
          // chain rule through chi = u^alpha / sum u^alpha, u = y + sigmoid(raw)
          double s = 0.0;
          std::vector<double> u(old_classes);
          for (int c = 0; c < old_classes; ++c) {
            u[c] = y[c] + p[c];
            s += std::pow(u[c], agent.alpha);
          }
          double weighted = 0.0;  // sum_c dL/dchi_c * chi_c
          std::vector<double> dchi(old_classes);
          for (int c = 0; c < old_classes; ++c) {
            dchi[c] = (1.0 - lambda) * inv_b * detail::softplus(-old_logits[c]);
            weighted += dchi[c] * chi[c];
          }
          for (int d = 0; d < old_classes; ++d) {
            double du = agent.alpha * std::pow(u[d], agent.alpha - 1.0) / s *
                        (dchi[d] - weighted);
            out.raw_grad[d] += du * p[d] * (1.0 - p[d]);
          }
        }
        break;
      }
      case ReplayMode::kd:  // handled above; silences -Wswitch
      case ReplayMode::finetune:
        break;
    }
    if (include && !know.grad.empty()) {
      out.loss += (1.0 - lambda) * inv_b * know.loss;
      for (int c = 0; c < old_classes; ++c)
        dlogits[c] += (1.0 - lambda) * inv_b * know.grad[c];
    }
    accumulate_backward(model, clip, segments, dlogits, 1.0, out.grads);
  }
  return out;
}

// Gradient magnitudes of a single binary output node under the documented
// logit convention o = 2 * confidence - 1.
struct Table1Row {
  double conf = 0.0;
  double ce_grad = 0.0;
  double ls_grad = 0.0;
};

inline std::vector<Table1Row> table1_diagnostic(bool identity_convention = false) {
  std::vector<Table1Row> rows;
  for (double conf : {0.9, 0.8, 0.2, 0.1}) {
    double o = identity_convention ? conf : 2.0 * conf - 1.0;
    Table1Row row;
    row.conf = conf;
    row.ce_grad = detail::sigmoid(o) - 1.0;
    row.ls_grad = detail::sigmoid(o) - 0.9;
    rows.push_back(row);
  }
  return rows;
}

// Published reference values the diagnostic is audited against.
struct Table1Reference {
  double conf, ce, combined, sc, ls;
};

inline constexpr Table1Reference kTable1Reference[4] = {
    {0.9, -0.3100, -0.1503, 0.0095, -0.2100},
    {0.8, -0.3543, -0.1740, 0.0063, -0.2543},
    {0.2, -0.6457, -0.3317, -0.0178, -0.5457},
    {0.1, -0.6900, -0.3560, -0.0221, -0.5900},
};

struct Table1Check {
  bool pass = true;
  std::string report;
};

inline Table1Check check_table1(bool identity_convention = false) {
  constexpr double kColumnTol = 5e-5;
  constexpr double kCombineTol = 5e-5 + 1e-12;  // agreement at 4 printed decimals
  Table1Check out;
  std::vector<Table1Row> rows = table1_diagnostic(identity_convention);
  for (int i = 0; i < 4; ++i) {
    const Table1Reference& ref = kTable1Reference[i];
    const Table1Row& row = rows[i];
    double ce_err = std::abs(row.ce_grad - ref.ce);
    double ls_err = std::abs(row.ls_grad - ref.ls);
    double comb_err = std::abs(ref.combined - 0.5 * (ref.ce + ref.sc));
    bool ok = ce_err <= kColumnTol && ls_err <= kColumnTol && comb_err <= kCombineTol;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "conf %.1f  ce %+.6f (err %.1e)  ls %+.6f (err %.1e)  "
                  "combine err %.1e  %s\n",
                  ref.conf, row.ce_grad, ce_err, row.ls_grad, ls_err, comb_err,
                  ok ? "ok" : "MISMATCH");
    out.report += buf;
    if (!ok) out.pass = false;
  }
  return out;
}

}  // namespace cilforge
