// SPDX-License-Identifier: Apache-2.0
#include "pgformer/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace pgformer {

PGformerConfig tiny_config() {
  PGformerConfig c;
  c.layers = 2;
  c.width = 16;
  c.heads = 2;
  c.head_width = 8;
  c.ffn_width = 32;
  c.templates = 2;
  c.query_window = 3;
  c.input_frames = 8;
  c.output_frames = 4;
  c.joints = 4;
  c.gcn_hidden = 8;
  return c;
}

namespace {

double loss_value(PGformer& model, const PreparedSample& s, const GradcheckOptions& o) {
  Tape tape(false);
  std::vector<Var> preds = model.forward(tape, s.inputs);
  return total_loss(tape, model, preds, s.targets, o.epoch, o.train).total.value().item();
}

}  // namespace

GradcheckReport gradcheck(PGformer& model, const PreparedSample& sample, const GradcheckOptions& options) {
  ParameterStore& store = model.parameters();
  store.zero_grad();
  {
    Tape tape;
    std::vector<Var> preds = model.forward(tape, sample.inputs);
    tape.backward(total_loss(tape, model, preds, sample.targets, options.epoch, options.train).total);
  }
  if (options.after_backward) options.after_backward(store);

  struct Acc {
    double diff2 = 0, a2 = 0, n2 = 0, max_abs = 0;
    std::size_t entries = 0;
  };
  std::map<std::string, Acc> acc;
  std::vector<std::string> order;
  for (const auto& e : store.entries()) {
    if (!e.param->trainable) continue;
    if (!acc.count(e.group)) order.push_back(e.group);
    Acc& a = acc[e.group];
    Tensor& v = e.param->value;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + options.step;
      const double up = loss_value(model, sample, options);
      v[i] = orig - options.step;
      const double down = loss_value(model, sample, options);
      v[i] = orig;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = e.param->grad[i];
      a.diff2 += (analytic - numeric) * (analytic - numeric);
      a.a2 += analytic * analytic;
      a.n2 += numeric * numeric;
      a.max_abs = std::max(a.max_abs, std::abs(analytic - numeric));
      ++a.entries;
    }
  }

  GradcheckReport report;
  report.passed = true;
  for (const auto& g : order) {
    const Acc& a = acc[g];
    GroupCheck c;
    c.group = g;
    c.entries = a.entries;
    const double denom = std::max(std::sqrt(a.a2), std::sqrt(a.n2));
    c.relative_error = denom > 0.0 ? std::sqrt(a.diff2) / denom : 0.0;
    c.max_abs_error = a.max_abs;
    c.passed = c.relative_error < options.tolerance;
    report.passed = report.passed && c.passed;
    report.max_relative_error = std::max(report.max_relative_error, c.relative_error);
    report.groups.push_back(c);
  }
  return report;
}

std::string format_gradcheck_report(const GradcheckReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-44s %8s %12s %12s  %s\n", "group", "entries", "rel_error", "max_abs", "status");
  out += line;
  for (const auto& g : report.groups) {
    std::snprintf(line, sizeof(line), "%-44s %8zu %12.3e %12.3e  %s\n", g.group.c_str(), g.entries, g.relative_error,
                  g.max_abs_error, g.passed ? "ok" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof(line), "max relative error %.3e: %s\n", report.max_relative_error,
                report.passed ? "PASS" : "FAIL");
  out += line;
  return out;
}

}  // namespace pgformer
