#include "rer/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <ostream>

#include "json.hpp"

namespace rer {

using nlohmann::ordered_json;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Recorded: return "recorded";
  }
  return "recorded";
}

VerificationReport gated(std::string check_id, std::map<std::string, std::string> inputs, std::string oracle,
                         std::string formula, double deviation, double tolerance) {
  VerificationReport r{std::move(check_id), std::move(inputs), std::move(oracle), std::move(formula),
                       deviation, tolerance, Verdict::Fail};
  // NaN deviations fail.
  if (deviation <= tolerance) r.verdict = Verdict::Pass;
  return r;
}

VerificationReport recorded(std::string check_id, std::map<std::string, std::string> inputs, std::string oracle,
                            std::string formula, double deviation) {
  return {std::move(check_id), std::move(inputs), std::move(oracle), std::move(formula),
          deviation, 0.0, Verdict::Recorded};
}

ReportSummary summarize(std::span<const VerificationReport> reports) {
  ReportSummary s;
  for (const auto& r : reports) {
    switch (r.verdict) {
      case Verdict::Pass: ++s.pass; break;
      case Verdict::Fail: ++s.fail; break;
      case Verdict::Recorded: ++s.recorded; break;
    }
  }
  return s;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string reports_to_json(std::span<const VerificationReport> reports) {
  const ReportSummary s = summarize(reports);
  ordered_json doc;
  doc["schema"] = "rer.verification_report";
  doc["version"] = 1;
  doc["summary"] = {{"pass", s.pass}, {"fail", s.fail}, {"recorded", s.recorded}};
  ordered_json checks = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json inputs = ordered_json::object();
    for (const auto& [k, v] : r.inputs) inputs[k] = v;
    checks.push_back({{"check_id", r.check_id},
                      {"inputs", inputs},
                      {"oracle_value", r.oracle_value},
                      {"formula_value", r.formula_value},
                      {"deviation", format_double(r.deviation)},
                      {"tolerance", format_double(r.tolerance)},
                      {"verdict", to_string(r.verdict)}});
  }
  doc["checks"] = std::move(checks);
  return doc.dump(2) + "\n";
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

void write_bound_report_csv(std::ostream& os, std::span<const BoundReport> rows) {
  os << "# rer.bound_report v1\n";
  os << "eta,L,kappa,coeff_new,coeff_old,lambda_max,trials,holds_new,holds_old,holds_trivial\n";
  for (const auto& r : rows) {
    os << format_double(r.eta) << ',' << r.L << ',' << format_double(r.kappa) << ',' << opt(r.coeff_new) << ','
       << opt(r.coeff_old) << ',' << format_double(r.lambda_max) << ',' << r.trials << ',' << flag(r.holds_new)
       << ',' << flag(r.holds_old) << ',' << flag(r.holds_trivial) << '\n';
  }
}

void write_grid_csv(std::ostream& os, std::span<const GridRow> rows) {
  os << "# rer.bound_grid v1\n";
  os << "eta,L,value_new,value_old,new_gt_old\n";
  for (const auto& r : rows) {
    os << format_double(r.eta) << ',' << r.L << ',' << format_double(r.value_new) << ','
       << format_double(r.value_old) << ',' << flag(r.new_gt_old) << '\n';
  }
}

void write_metrics_csv(std::ostream& os, std::span<const EpisodeMetrics> rows) {
  os << "# rer.run_metrics v1\n";
  os << "episode,sup_error,weight_distance,bias_norm,variance_norm,target_version\n";
  for (const auto& r : rows) {
    os << r.episode << ',' << format_double(r.sup_error) << ',' << format_double(r.weight_distance) << ','
       << opt(r.bias_norm) << ',' << opt(r.variance_norm) << ',' << r.target_version << '\n';
  }
}

void write_envelope_csv(std::ostream& os, double eta, int L, double kappa, double delta, int max_syncs) {
  os << "# rer.bias_envelope v1\n";
  os << "eta,L,kappa,delta,syncs,envelope\n";
  for (int n = 0; n <= max_syncs; ++n) {
    os << format_double(eta) << ',' << L << ',' << format_double(kappa) << ',' << format_double(delta) << ',' << n
       << ',' << format_double(bias_decay_envelope(eta, L, kappa, n, delta)) << '\n';
  }
}

void write_bias_decay_csv(std::ostream& os, std::span<const BiasDecayRow> rows) {
  os << "# rer.bias_decay v1\n";
  os << "sync,l2,phi,phi_ratio,envelope\n";
  for (const auto& r : rows) {
    os << r.sync << ',' << format_double(r.l2) << ',' << format_double(r.phi) << ',' << format_double(r.phi_ratio)
       << ',' << format_double(r.envelope) << '\n';
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_to_json(const ExperimentManifest& m) {
  ordered_json doc;
  doc["schema"] = "rer.experiment_manifest";
  doc["version"] = 1;
  doc["artifact_version"] = m.version;
  doc["command"] = m.command;
  doc["seed"] = m.seed;
  doc["timestamp"] = m.timestamp;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : m.config) cfg[k] = v;
  doc["config"] = std::move(cfg);
  doc["outputs"] = m.outputs;
  return doc.dump(2) + "\n";
}

}  // namespace rer
